use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lti::{poly_from_roots, FrequencyGrid, RationalTF};

pub const MAX_DFIT_ORDER: usize = 4;

/// Model `log|k ∏(jω+zᵢ)/∏(jω+pᵢ)|` with parameters `[ln k, ln z…, ln p…]`.
struct LogMagModel<'a> {
    w2: Vec<f64>,
    target: &'a [f64],
    order: usize,
}

impl LogMagModel<'_> {
    fn residual(&self, th: &[f64]) -> DVector<f64> {
        let n = self.order;
        DVector::from_fn(self.w2.len(), |i, _| {
            let w2 = self.w2[i];
            let mut m = th[0];
            for j in 0..n {
                m += 0.5 * (w2 + (2.0 * th[1 + j]).exp()).ln();
                m -= 0.5 * (w2 + (2.0 * th[1 + n + j]).exp()).ln();
            }
            m - self.target[i]
        })
    }

    fn jacobian(&self, th: &[f64]) -> DMatrix<f64> {
        let n = self.order;
        DMatrix::from_fn(self.w2.len(), 1 + 2 * n, |i, c| {
            if c == 0 {
                return 1.0;
            }
            let w2 = self.w2[i];
            let q = (2.0 * th[c]).exp();
            if c <= n {
                q / (w2 + q)
            } else {
                -q / (w2 + q)
            }
        })
    }
}

fn cost(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

/// Levenberg–Marquardt with corner/pole locations clamped to `[lo, hi]`.
fn levenberg_marquardt(model: &LogMagModel<'_>, mut th: Vec<f64>, lo: f64, hi: f64) -> (Vec<f64>, f64) {
    let clamp = |th: &mut Vec<f64>| {
        for v in th.iter_mut().skip(1) {
            *v = v.clamp(lo, hi);
        }
    };
    clamp(&mut th);
    let mut r = model.residual(&th);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    for _ in 0..300 {
        let jm = model.jacobian(&th);
        let jtj = jm.transpose() * &jm;
        let g = jm.transpose() * &r;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * (jtj[(i, i)] + 1e-12);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut cand: Vec<f64> = th.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            clamp(&mut cand);
            let rc = model.residual(&cand);
            let cc = cost(&rc);
            if cc < c {
                let rel = (c - cc) / c.max(1e-300);
                th = cand;
                r = rc;
                c = cc;
                lambda = (lambda / 3.0).max(1e-12);
                improved = rel > 1e-12;
                break;
            }
            lambda *= 4.0;
            if lambda > 1e12 {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    (th, c)
}

/// Stable, minimum-phase fit of a positive magnitude profile.
///
/// The fit is `k ∏(s+zᵢ)/∏(s+pᵢ)` with real `zᵢ, pᵢ` inside the grid's
/// frequency range, least squares on log-magnitude. Order 0 returns the
/// geometric mean.
pub fn fit_dscale(samples: &[f64], grid: &FrequencyGrid, order: usize) -> Result<RationalTF> {
    if samples.len() != grid.len() {
        return Err(Error::Dimension(format!("{} samples for {} frequencies", samples.len(), grid.len())));
    }
    if order > MAX_DFIT_ORDER {
        return Err(Error::InvalidArgument(format!("fit order {order} exceeds {MAX_DFIT_ORDER}")));
    }
    if samples.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidArgument("D samples must be positive and finite".into()));
    }
    let target: Vec<f64> = samples.iter().map(|s| s.ln()).collect();
    let mean = target.iter().sum::<f64>() / target.len() as f64;
    if order == 0 {
        return Ok(RationalTF::constant(mean.exp()));
    }
    let model = LogMagModel { w2: grid.points().iter().map(|w| w * w).collect(), target: &target, order };
    let (lo, hi) = (grid.first().ln(), grid.last().ln());
    let span = hi - lo;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in 0..7 {
        let centre = lo + span * (s as f64 + 0.5) / 7.0;
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        let mut th = vec![0.0; 1 + 2 * order];
        for j in 0..order {
            let off = (j as f64 - 0.5 * (order as f64 - 1.0)) * span / (2.0 * order as f64);
            th[1 + j] = centre + off - 0.5 * sign;
            th[1 + order + j] = centre + off + 0.5 * sign;
        }
        // Gain offset that matches the mean log level.
        let r0 = model.residual(&th);
        th[0] = -r0.mean();
        let (th, c) = levenberg_marquardt(&model, th, lo, hi);
        if best.as_ref().is_none_or(|b| c < b.1) {
            best = Some((th, c));
        }
    }
    let (th, c) = best.expect("at least one start");
    if !c.is_finite() {
        return Err(Error::NoConvergence);
    }
    let root = |v: f64| Complex64::new(-v.exp(), 0.0);
    let zeros: Vec<Complex64> = th[1..1 + order].iter().map(|&v| root(v)).collect();
    let poles: Vec<Complex64> = th[1 + order..].iter().map(|&v| root(v)).collect();
    let k = th[0].exp();
    let num: Vec<f64> = poly_from_roots(&zeros).into_iter().map(|c| c * k).collect();
    RationalTF::new(num, poly_from_roots(&poles))
}
