//! Robustness evidence: vertex stability, Monte-Carlo sensitivity
//! envelopes and nonlinear closed-loop simulation.

pub mod csv;
mod envelope;
mod sim;
mod vertex;

pub use envelope::{check_weight_bounds, monte_carlo_freq, EnvelopeReport, WeightCheck};
pub use sim::{simulate_closed_loop, Reference, SimOptions, SimTrace};
pub use vertex::{closed_loop, vertex_stability, VertexReport, VertexVerdict};
