//! Structured singular value upper bounds and μ-synthesis.

mod bound;
mod dfit;
mod dk;
mod structure;
mod tune;

pub use bound::{apply_scaling, mu_upper_at, mu_upper_curve, mu_upper_from, MuCurve, MuPoint, SWEEP_TOL};
pub use dfit::{fit_dscale, MAX_DFIT_ORDER};
pub use dk::{dk_iterate, scale_plant, DkOptions, StopReason, SynthesisReport, Verdict};
pub use structure::{Block, BlockKind, DeltaStructure, Realness};
pub use tune::{fit_rational, reduce_to_template, tune_fixed_structure, Template, TuneOptions};
