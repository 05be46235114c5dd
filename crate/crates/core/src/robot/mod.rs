//! Serial-manipulator models and the robust-control modeling pipeline:
//! Jacobian interval bounds, polytopic vertex families, the uncertain
//! plant as an LFT, and the mixed-sensitivity augmentation.

mod bounds;
mod model;
mod pldi;
mod preset;
mod uncertain;
mod weights;

pub use bounds::{jacobian_bounds, jacobian_bounds_on, local_jacobians, IntervalEntry, IntervalMatrixBounds, Which, SAFETY_MARGIN};
pub use model::{dynamics_rhs, input_affine_decompose, skew_defect, RobotModel, StateDomain, TwoLink, TwoLinkParams, Vector};
pub use pldi::{build_pldi, position_output, vertex_at, Pldi, VertexMode, MAX_FULL_VERTEX_INTERVALS};
pub use preset::{paper_2r_controller, PAPER_2R_CONTROLLER};
pub use uncertain::{augment, build_uncertain_plant, UncertainPlant};
pub use weights::{make_weights, WeightSpec};
