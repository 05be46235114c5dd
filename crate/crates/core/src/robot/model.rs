use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

pub type Vector = DVector<f64>;

/// Box of joint positions (rad) and velocities (rad/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDomain {
    pub q: Vec<(f64, f64)>,
    pub qdot: Vec<(f64, f64)>,
}

impl StateDomain {
    pub fn new(q: Vec<(f64, f64)>, qdot: Vec<(f64, f64)>) -> Result<Self> {
        if q.len() != qdot.len() || q.is_empty() {
            return Err(Error::Dimension("position and velocity ranges must match the joint count".into()));
        }
        if q.iter().chain(&qdot).any(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::InvalidArgument("empty or non-finite domain interval".into()));
        }
        Ok(Self { q, qdot })
    }

    /// `q ∈ [−π, π]ᵐ`, `q̇ ∈ [−v, v]ᵐ`.
    pub fn symmetric(m: usize, v: f64) -> Result<Self> {
        use std::f64::consts::PI;
        Self::new(vec![(-PI, PI); m], vec![(-v, v); m])
    }

    /// Ranges of the full state `x = (q, q̇)`.
    pub fn state_ranges(&self) -> Vec<(f64, f64)> {
        self.q.iter().chain(&self.qdot).copied().collect()
    }
}

/// Rigid serial manipulator `M(q)q̈ + C(q,q̇)q̇ + Dq̇ + g(q) = u`.
pub trait RobotModel: Sync {
    fn dof(&self) -> usize;
    fn inertia(&self, q: &[f64]) -> Mat;
    fn coriolis(&self, q: &[f64], qdot: &[f64]) -> Mat;
    /// Time derivative of the inertia matrix along `q̇`.
    fn inertia_dot(&self, q: &[f64], qdot: &[f64]) -> Mat;
    fn damping(&self) -> Mat;
    fn gravity(&self, q: &[f64]) -> Vector;
    fn domain(&self) -> &StateDomain;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLinkParams {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl TwoLinkParams {
    pub const PAPER_2R: TwoLinkParams = TwoLinkParams { a1: 48.125, a2: 13.125, a3: 6.25 };

    pub fn validate(&self) -> Result<()> {
        let Self { a1, a2, a3 } = *self;
        if !(a1 > 0.0 && a2 > 0.0 && a1 * a2 - a2 * a2 - a3 * a3 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "inertia parameters ({a1}, {a2}, {a3}) give a singular M(q) for some q2"
            )));
        }
        Ok(())
    }
}

/// Planar two-link arm moving in the horizontal plane.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoLink {
    params: TwoLinkParams,
    damping: Mat,
    domain: StateDomain,
}

impl TwoLink {
    pub fn new(params: TwoLinkParams, damping: Mat, domain: StateDomain) -> Result<Self> {
        params.validate()?;
        if damping.shape() != (2, 2) || domain.q.len() != 2 {
            return Err(Error::Dimension("two-link model needs 2x2 damping and a 2-joint domain".into()));
        }
        if (&damping - damping.transpose()).abs().max() > 1e-12 || damping.clone().symmetric_eigenvalues().min() < -1e-12 {
            return Err(Error::InvalidArgument("damping must be symmetric positive-semidefinite".into()));
        }
        Ok(Self { params, damping, domain })
    }

    /// Parameters of the worked example, no damping, `q̇ ∈ [−1.5, 1.5]²`.
    pub fn paper_2r() -> Self {
        Self::new(TwoLinkParams::PAPER_2R, Mat::zeros(2, 2), StateDomain::symmetric(2, 1.5).expect("valid domain"))
            .expect("preset parameters are valid")
    }

    pub fn params(&self) -> TwoLinkParams {
        self.params
    }
}

impl RobotModel for TwoLink {
    fn dof(&self) -> usize {
        2
    }

    fn inertia(&self, q: &[f64]) -> Mat {
        let TwoLinkParams { a1, a2, a3 } = self.params;
        let c = q[1].cos();
        Mat::from_row_slice(2, 2, &[a1 + 2.0 * a3 * c, a2 + a3 * c, a2 + a3 * c, a2])
    }

    fn coriolis(&self, q: &[f64], qdot: &[f64]) -> Mat {
        // Christoffel form; keeps Ṁ − 2C skew-symmetric.
        let h = self.params.a3 * q[1].sin();
        Mat::from_row_slice(2, 2, &[-h * qdot[1], -h * (qdot[0] + qdot[1]), h * qdot[0], 0.0])
    }

    fn inertia_dot(&self, q: &[f64], qdot: &[f64]) -> Mat {
        let h = -self.params.a3 * q[1].sin() * qdot[1];
        Mat::from_row_slice(2, 2, &[2.0 * h, h, h, 0.0])
    }

    fn damping(&self) -> Mat {
        self.damping.clone()
    }

    fn gravity(&self, _q: &[f64]) -> Vector {
        Vector::zeros(2)
    }

    fn domain(&self) -> &StateDomain {
        &self.domain
    }
}

fn split(model: &dyn RobotModel, x: &[f64]) -> Result<usize> {
    let m = model.dof();
    if x.len() != 2 * m {
        return Err(Error::Dimension(format!("state has {} entries, expected {}", x.len(), 2 * m)));
    }
    Ok(m)
}

fn inertia_inverse(model: &dyn RobotModel, q: &[f64]) -> Result<Mat> {
    model
        .inertia(q)
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Singular("inertia matrix is not positive-definite".into()))
}

/// Input-affine form `ẋ = f₀(x) + f(x)u`.
pub fn input_affine_decompose(model: &dyn RobotModel, x: &[f64]) -> Result<(Vector, Mat)> {
    let m = split(model, x)?;
    let (q, qd) = x.split_at(m);
    let minv = inertia_inverse(model, q)?;
    let qdv = Vector::from_column_slice(qd);
    let acc = -&minv * ((model.coriolis(q, qd) + model.damping()) * &qdv + model.gravity(q));
    let mut f0 = Vector::zeros(2 * m);
    f0.rows_mut(0, m).copy_from(&qdv);
    f0.rows_mut(m, m).copy_from(&acc);
    let mut f = Mat::zeros(2 * m, m);
    f.view_mut((m, 0), (m, m)).copy_from(&minv);
    Ok((f0, f))
}

/// State derivative `(q̇, M⁻¹(u − (C + D)q̇ − g))`.
pub fn dynamics_rhs(model: &dyn RobotModel, x: &[f64], u: &[f64]) -> Result<Vector> {
    let m = split(model, x)?;
    if u.len() != m {
        return Err(Error::Dimension(format!("input has {} entries, expected {m}", u.len())));
    }
    let (f0, f) = input_affine_decompose(model, x)?;
    Ok(f0 + f * Vector::from_column_slice(u))
}

/// `Ṁ − 2C`, skew-symmetric for a consistent model.
pub fn skew_defect(model: &dyn RobotModel, q: &[f64], qdot: &[f64]) -> Mat {
    let n = model.inertia_dot(q, qdot) - 2.0 * model.coriolis(q, qdot);
    &n + n.transpose()
}
