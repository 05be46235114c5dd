//! State-space and transfer-function algebra.

mod connect;
mod grid;
mod ss;
mod tf;

pub use connect::{blkdiag, feedback, interconnect, lft_lower, lft_upper, lft_upper_static, parallel, series, Connection};
pub use grid::FrequencyGrid;
pub use ss::{Stability, StateSpace};
pub use tf::{poly_from_roots, poly_roots, RationalTF, TFMatrix};

/// Realizes a SISO transfer function in controllable canonical form.
pub fn tf_to_ss(g: &RationalTF) -> StateSpace {
    g.to_ss()
}
