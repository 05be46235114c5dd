use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("improper transfer function: numerator degree {num} exceeds denominator degree {den}")]
    Improper { num: usize, den: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pole on the imaginary axis at omega = {omega}")]
    PoleOnAxis { omega: f64 },

    #[error("ill-posed interconnection: {0}")]
    IllPosed(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("no stabilizing Riccati solution: {0}")]
    NoStabilizingSolution(String),

    #[error("system is unstable (spectral abscissa {abscissa})")]
    Unstable { abscissa: f64 },

    #[error("H-infinity synthesis infeasible on [{lo}, {hi}]: {reason}")]
    Infeasible { lo: f64, hi: f64, reason: String },

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("simulation diverged at t = {t} (state norm {norm:e})")]
    Diverged { t: f64, norm: f64 },

    #[error("no stabilizing controller found across {starts} starts")]
    NoStabilizingStart { starts: usize },
}
