// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hinf;
pub mod linalg;
pub mod lti;
pub mod mu;
pub mod riccati;
pub mod robot;
pub mod verify;

pub use error::{Error, Result};
pub use lti::{FrequencyGrid, RationalTF, StateSpace, TFMatrix};
