use serde::{Deserialize, Serialize};

use super::model::{input_affine_decompose, RobotModel, StateDomain};
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Relative widening applied to sampled (non-degenerate) intervals.
pub const SAFETY_MARGIN: f64 = 0.01;

/// Entrywise bounds `A(δ) ∈ [a_lo, a_hi]`, `B(δ) ∈ [b_lo, b_hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMatrixBounds {
    pub a_lo: Mat,
    pub a_hi: Mat,
    pub b_lo: Mat,
    pub b_hi: Mat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    A,
    B,
}

/// One non-degenerate interval entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalEntry {
    pub which: Which,
    pub row: usize,
    pub col: usize,
    pub lo: f64,
    pub hi: f64,
}

impl IntervalEntry {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    /// Conventional name such as `a32` or `b41` (1-based).
    pub fn name(&self) -> String {
        let p = if self.which == Which::A { 'a' } else { 'b' };
        format!("{p}{}{}", self.row + 1, self.col + 1)
    }
}

impl IntervalMatrixBounds {
    pub fn new(a_lo: Mat, a_hi: Mat, b_lo: Mat, b_hi: Mat) -> Result<Self> {
        let n = a_lo.nrows();
        if a_lo.shape() != (n, n) || a_hi.shape() != (n, n) || b_lo.nrows() != n || b_hi.shape() != b_lo.shape() {
            return Err(Error::Dimension("interval bound matrices have inconsistent shapes".into()));
        }
        let ordered = |lo: &Mat, hi: &Mat| lo.iter().zip(hi.iter()).all(|(l, h)| l <= h && l.is_finite() && h.is_finite());
        if !ordered(&a_lo, &a_hi) || !ordered(&b_lo, &b_hi) {
            return Err(Error::InvalidArgument("interval bounds must satisfy lo <= hi".into()));
        }
        Ok(Self { a_lo, a_hi, b_lo, b_hi })
    }

    pub fn nx(&self) -> usize {
        self.a_lo.nrows()
    }

    pub fn nu(&self) -> usize {
        self.b_lo.ncols()
    }

    /// Intervals as published for the worked 2R example.
    pub fn paper_2r() -> Self {
        let mut a_lo = Mat::zeros(4, 4);
        a_lo[(0, 2)] = 1.0;
        a_lo[(1, 3)] = 1.0;
        let mut a_hi = a_lo.clone();
        let mut b_lo = Mat::zeros(4, 2);
        let mut b_hi = Mat::zeros(4, 2);
        for (r, c, lo, hi) in [
            (2, 1, -19.127, 19.6402),
            (2, 2, -1.58, 1.58),
            (2, 3, -3.56, 3.56),
            (3, 1, -13.9637, 28.2362),
            (3, 2, -5.42, 5.42),
            (3, 3, -3.95, 3.95),
        ] {
            a_lo[(r, c)] = lo;
            a_hi[(r, c)] = hi;
        }
        for (r, c, lo, hi) in [(2, 0, 0.0286, 0.0312), (2, 1, -0.0461, -0.0164), (3, 0, -0.0461, -0.0164), (3, 1, 0.0848, 0.144)] {
            b_lo[(r, c)] = lo;
            b_hi[(r, c)] = hi;
        }
        Self { a_lo, a_hi, b_lo, b_hi }
    }

    /// Non-degenerate intervals, `A` entries first, each in row-major order.
    pub fn uncertain_entries(&self) -> Vec<IntervalEntry> {
        let mut out = Vec::new();
        for (which, lo, hi) in [(Which::A, &self.a_lo, &self.a_hi), (Which::B, &self.b_lo, &self.b_hi)] {
            for r in 0..lo.nrows() {
                for c in 0..lo.ncols() {
                    if hi[(r, c)] > lo[(r, c)] {
                        out.push(IntervalEntry { which, row: r, col: c, lo: lo[(r, c)], hi: hi[(r, c)] });
                    }
                }
            }
        }
        out
    }

    pub fn a_mid(&self) -> Mat {
        (&self.a_lo + &self.a_hi) * 0.5
    }

    pub fn b_mid(&self) -> Mat {
        (&self.b_lo + &self.b_hi) * 0.5
    }

    pub fn contains(&self, a: &Mat, b: &Mat) -> bool {
        let inside = |v: &Mat, lo: &Mat, hi: &Mat| v.iter().zip(lo.iter().zip(hi.iter())).all(|(x, (l, h))| l <= x && x <= h);
        inside(a, &self.a_lo, &self.a_hi) && inside(b, &self.b_lo, &self.b_hi)
    }
}

/// Drift Jacobian `∂f₀/∂x` by central differences and input matrix `f(x)`.
pub fn local_jacobians(model: &dyn RobotModel, x: &[f64]) -> Result<(Mat, Mat)> {
    let n = x.len();
    let (_, b) = input_affine_decompose(model, x)?;
    let mut a = Mat::zeros(n, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = 1e-6 * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let (fp, _) = input_affine_decompose(model, &xp)?;
        xp[j] = x[j] - h;
        let (fm, _) = input_affine_decompose(model, &xp)?;
        xp[j] = x[j];
        a.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    // Kinematic rows d(q)/dt = q̇ are exact.
    let m = n / 2;
    a.rows_mut(0, m).fill(0.0);
    a.view_mut((0, m), (m, m)).fill_with_identity();
    Ok((a, b))
}

/// Coordinates the dynamics actually depend on, probed at a few points.
fn active_coordinates(model: &dyn RobotModel, ranges: &[(f64, f64)]) -> Result<Vec<bool>> {
    let n = ranges.len();
    let mut active = vec![false; n];
    let probes = [0.17, 0.52, 0.83];
    for (j, act) in active.iter_mut().enumerate() {
        if ranges[j].0 == ranges[j].1 {
            continue;
        }
        for &p in &probes {
            let base: Vec<f64> = ranges.iter().enumerate().map(|(i, (lo, hi))| lo + (hi - lo) * ((p + 0.29 * i as f64) % 1.0)).collect();
            let mut other = base.clone();
            other[j] = ranges[j].0 + (ranges[j].1 - ranges[j].0) * ((p + 0.5) % 1.0);
            let (a0, b0) = local_jacobians(model, &base)?;
            let (a1, b1) = local_jacobians(model, &other)?;
            if (a0 - a1).abs().max() > 1e-9 || (b0 - b1).abs().max() > 1e-12 {
                *act = true;
                break;
            }
        }
    }
    Ok(active)
}

/// Entrywise Jacobian bounds over a dense grid of the model's domain.
///
/// `density` points are taken per coordinate (coordinates the model does
/// not depend on are fixed). Each endpoint of a sampled interval moves
/// outward by [`SAFETY_MARGIN`] of its own magnitude; entries that do not
/// vary (kinematic rows) are returned exactly.
pub fn jacobian_bounds(model: &dyn RobotModel, density: usize) -> Result<IntervalMatrixBounds> {
    jacobian_bounds_on(model, model.domain(), density)
}

pub fn jacobian_bounds_on(model: &dyn RobotModel, domain: &StateDomain, density: usize) -> Result<IntervalMatrixBounds> {
    if density < 2 {
        return Err(Error::InvalidArgument("grid density must be at least 2".into()));
    }
    let ranges = domain.state_ranges();
    if ranges.len() != 2 * model.dof() {
        return Err(Error::Dimension("domain does not match the model".into()));
    }
    let active = active_coordinates(model, &ranges)?;
    let axes: Vec<Vec<f64>> = ranges
        .iter()
        .zip(&active)
        .map(|(&(lo, hi), &act)| {
            if !act || lo == hi {
                vec![0.5 * (lo + hi)]
            } else {
                (0..density).map(|i| lo + (hi - lo) * i as f64 / (density - 1) as f64).collect()
            }
        })
        .collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let point = |mut idx: usize| -> Vec<f64> {
        axes.iter()
            .map(|ax| {
                let v = ax[idx % ax.len()];
                idx /= ax.len();
                v
            })
            .collect()
    };
    let n = ranges.len();
    let m = model.dof();
    type Acc = (Mat, Mat, Mat, Mat);
    let empty = || -> Acc {
        (
            Mat::from_element(n, n, f64::INFINITY),
            Mat::from_element(n, n, f64::NEG_INFINITY),
            Mat::from_element(n, m, f64::INFINITY),
            Mat::from_element(n, m, f64::NEG_INFINITY),
        )
    };
    let merge = |mut x: Acc, y: Acc| -> Acc {
        x.0.zip_apply(&y.0, |a, b| *a = a.min(b));
        x.1.zip_apply(&y.1, |a, b| *a = a.max(b));
        x.2.zip_apply(&y.2, |a, b| *a = a.min(b));
        x.3.zip_apply(&y.3, |a, b| *a = a.max(b));
        x
    };
    let chunk = |range: std::ops::Range<usize>| -> Result<Acc> {
        let mut acc = empty();
        for i in range {
            let (a, b) = local_jacobians(model, &point(i))?;
            acc = merge(acc, (a.clone(), a, b.clone(), b));
        }
        Ok(acc)
    };
    const CHUNK: usize = 4096;
    let ranges_idx: Vec<std::ops::Range<usize>> = (0..total).step_by(CHUNK).map(|s| s..(s + CHUNK).min(total)).collect();
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<Acc>> = {
        use rayon::prelude::*;
        ranges_idx.into_par_iter().map(chunk).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<Acc>> = ranges_idx.into_iter().map(chunk).collect();
    let mut acc = empty();
    for p in parts {
        acc = merge(acc, p?);
    }
    let (mut a_lo, mut a_hi, mut b_lo, mut b_hi) = acc;
    widen(&mut a_lo, &mut a_hi);
    widen(&mut b_lo, &mut b_hi);
    IntervalMatrixBounds::new(a_lo, a_hi, b_lo, b_hi)
}

/// Snaps non-varying entries to a single value and widens the rest.
fn widen(lo: &mut Mat, hi: &mut Mat) {
    for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
        let scale = l.abs().max(h.abs());
        if *h - *l <= 1e-7 * scale.max(1.0) {
            let mut mid = 0.5 * (*l + *h);
            if (mid - mid.round()).abs() < 1e-7 {
                mid = mid.round();
            }
            *l = mid;
            *h = mid;
        } else {
            let floor = 1e-3 * scale;
            *l -= SAFETY_MARGIN * l.abs().max(floor);
            *h += SAFETY_MARGIN * h.abs().max(floor);
        }
    }
}
