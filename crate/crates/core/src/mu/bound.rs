use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::DeltaStructure;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::lti::{FrequencyGrid, StateSpace};

/// Largest log-scaling magnitude explored; decoupled blocks drift here.
const X_MAX: f64 = 35.0;

/// Relative improvement per coordinate sweep below which the search stops.
pub const SWEEP_TOL: f64 = 1e-4;

/// Upper bound at one frequency with the scaling that achieved it.
#[derive(Clone, Debug, PartialEq)]
pub struct MuPoint {
    pub mu: f64,
    /// One positive scalar per block; the last block is normalized to 1.
    pub d: Vec<f64>,
}

/// Per-frequency upper bound `μ̄(ω)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuCurve {
    pub grid: FrequencyGrid,
    pub upper: Vec<f64>,
    /// Optimal block scalings per frequency.
    pub dscales: Vec<Vec<f64>>,
    pub peak: f64,
    pub peak_omega: f64,
}

impl MuCurve {
    fn from_points(grid: FrequencyGrid, pts: Vec<MuPoint>) -> Self {
        let mut peak = 0.0;
        let mut peak_omega = grid.first();
        for (w, p) in grid.points().iter().zip(&pts) {
            if p.mu > peak {
                peak = p.mu;
                peak_omega = *w;
            }
        }
        let (upper, dscales) = pts.into_iter().map(|p| (p.mu, p.d)).unzip();
        Self { grid, upper, dscales, peak, peak_omega }
    }
}

/// `σ̄(D M D⁻¹)` as a function of the block log-scalings.
struct Scaled<'a> {
    m: &'a CMat,
    rows: Vec<usize>,
    cols: Vec<usize>,
    nb: usize,
}

impl Scaled<'_> {
    fn apply(&self, x: &[f64]) -> CMat {
        let mut s = self.m.clone();
        for j in 0..s.ncols() {
            let cj = x[self.cols[j]];
            for i in 0..s.nrows() {
                s[(i, j)] *= (x[self.rows[i]] - cj).exp();
            }
        }
        s
    }

    fn value(&self, x: &[f64]) -> f64 {
        let s = self.apply(x);
        s.svd(false, false).singular_values.iter().fold(0.0, |a: f64, &b| a.max(b))
    }

    /// Value and gradient `σ̄ (‖u_k‖² − ‖v_k‖²)` for a simple top singular value.
    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let svd = self.apply(x).svd(true, true);
        let (imax, smax) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
        let mut g = vec![0.0; self.nb];
        if smax == 0.0 {
            return (0.0, g);
        }
        let u = svd.u.as_ref().expect("u requested");
        let vt = svd.v_t.as_ref().expect("v requested");
        for i in 0..u.nrows() {
            g[self.rows[i]] += u[(i, imax)].norm_sqr();
        }
        for j in 0..vt.ncols() {
            g[self.cols[j]] -= vt[(imax, j)].norm_sqr();
        }
        for gk in g.iter_mut() {
            *gk *= smax;
        }
        (smax, g)
    }
}

fn validate(m: &CMat, ds: &DeltaStructure) -> Result<()> {
    if m.nrows() != ds.n_v() || m.ncols() != ds.n_d() {
        return Err(Error::Dimension(format!(
            "M is {}x{}, structure expects {}x{}",
            m.nrows(),
            m.ncols(),
            ds.n_v(),
            ds.n_d()
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument("M has non-finite entries".into()));
    }
    Ok(())
}

/// Minimizer of `Σ_{k≠l} e^{2(x_k−x_l)} ‖M_kl‖²` (Osborne iteration on block norms).
fn osborne(f: &Scaled<'_>) -> Vec<f64> {
    let nb = f.nb;
    let mut w = vec![vec![0.0f64; nb]; nb];
    for i in 0..f.m.nrows() {
        for j in 0..f.m.ncols() {
            w[f.rows[i]][f.cols[j]] += f.m[(i, j)].norm_sqr();
        }
    }
    let mut x = vec![0.0f64; nb];
    for _ in 0..500 {
        let mut change: f64 = 0.0;
        for k in 0..nb {
            let (mut r, mut c) = (0.0f64, 0.0f64);
            for l in 0..nb {
                if l != k {
                    r += w[k][l] * (-2.0 * x[l]).exp();
                    c += w[l][k] * (2.0 * x[l]).exp();
                }
            }
            if r > 0.0 && c > 0.0 {
                let new = (0.25 * (c / r).ln()).clamp(-X_MAX, X_MAX);
                change = change.max((new - x[k]).abs());
                x[k] = new;
            }
        }
        if change < 1e-13 {
            break;
        }
    }
    normalize(&mut x);
    x
}

fn normalize(x: &mut [f64]) {
    let last = *x.last().expect("non-empty");
    for v in x.iter_mut() {
        *v = (*v - last).clamp(-X_MAX, X_MAX);
    }
}

/// Golden-section minimum of a unimodal `phi` on `[a, b]`.
fn golden(phi: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = phi(c);
    let mut fd = phi(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = phi(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Line minimization of the convex `phi` starting from `phi(0) = f0`,
/// restricted to `[lo, hi]` (`lo ≤ 0 ≤ hi`).
fn line_min(phi: &mut impl FnMut(f64) -> f64, f0: f64, h0: f64, lo: f64, hi: f64) -> (f64, f64) {
    let fp = phi(h0.min(hi));
    let fm = phi((-h0).max(lo));
    let dir = if fp < f0 && fp <= fm {
        1.0
    } else if fm < f0 {
        -1.0
    } else {
        let (t, ft) = golden(phi, (-h0).max(lo), h0.min(hi), 1e-7);
        return if ft < f0 { (t, ft) } else { (0.0, f0) };
    };
    let bound = if dir > 0.0 { hi } else { -lo };
    let mut psi = |t: f64| phi(dir * t);
    // Expand until the function turns up, then bracket [inner, outer].
    let mut inner = 0.0;
    let mut h = h0.min(bound);
    let mut fh = if dir > 0.0 { fp } else { fm };
    let mut outer = h;
    while h < bound {
        let h2 = (2.0 * h).min(bound);
        let f2 = psi(h2);
        outer = h2;
        if f2 >= fh {
            break;
        }
        inner = h;
        h = h2;
        fh = f2;
    }
    let (t, ft) = golden(&mut psi, inner, outer, 1e-7);
    if ft < fh {
        (dir * t, ft)
    } else {
        (dir * h, fh)
    }
}

/// Quasi-Newton descent on the log-scalings (last coordinate frozen).
fn bfgs(f: &Scaled<'_>, x: &mut Vec<f64>, mut fx: f64) -> f64 {
    let n = f.nb - 1;
    if n == 0 {
        return fx;
    }
    let mut hinv = nalgebra::DMatrix::<f64>::identity(n, n);
    let (_, g) = f.value_grad(x);
    let mut g = DVector::from_column_slice(&g[..n]);
    for _ in 0..200 {
        let p = -(&hinv * &g);
        let slope = p.dot(&g);
        if !(slope < 0.0) || g.norm() <= 1e-12 * fx.max(1e-300) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xt: Vec<f64> = (0..f.nb).map(|k| if k < n { (x[k] + t * p[k]).clamp(-X_MAX, X_MAX) } else { x[k] }).collect();
            let ft = f.value(&xt);
            if ft <= fx + 1e-4 * t * slope {
                accepted = Some((xt, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else { break };
        let (_, gn) = f.value_grad(&xn);
        let gn = DVector::from_column_slice(&gn[..n]);
        let s = DVector::from_fn(n, |k, _| xn[k] - x[k]);
        let y = &gn - &g;
        let sy = s.dot(&y);
        let improvement = fx - fnew;
        *x = xn;
        g = gn;
        fx = fnew;
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let i = nalgebra::DMatrix::<f64>::identity(n, n);
            let left = &i - rho * &s * y.transpose();
            hinv = &left * &hinv * left.transpose() + rho * &s * s.transpose();
        } else {
            hinv = nalgebra::DMatrix::<f64>::identity(n, n);
        }
        if improvement <= 1e-12 * fx {
            break;
        }
    }
    fx
}

fn optimize(f: &Scaled<'_>, mut x: Vec<f64>) -> MuPoint {
    let mut fx = f.value(&x);
    if f.nb > 1 && fx > 0.0 {
        fx = bfgs(f, &mut x, fx);
        for _ in 0..100 {
            let before = fx;
            for k in 0..f.nb - 1 {
                let xk = x[k];
                let mut phi = |t: f64| {
                    let mut y = x.clone();
                    y[k] = xk + t;
                    f.value(&y)
                };
                let (t, ft) = line_min(&mut phi, fx, 0.25, -X_MAX - xk, X_MAX - xk);
                if ft < fx {
                    x[k] = xk + t;
                    fx = ft;
                }
            }
            fx = bfgs(f, &mut x, fx);
            if before - fx <= SWEEP_TOL * before {
                break;
            }
        }
    }
    MuPoint { mu: fx, d: x.iter().map(|v| v.exp()).collect() }
}

/// D-scaled upper bound `inf_D σ̄(D M D⁻¹)` for the structure `ds`.
///
/// `M` maps the `d` channels to the `v` channels of the structure.
pub fn mu_upper_at(m: &CMat, ds: &DeltaStructure) -> Result<MuPoint> {
    mu_upper_from(m, ds, None)
}

/// As [`mu_upper_at`], additionally trying `start` (block scalings) as an
/// initial point.
pub fn mu_upper_from(m: &CMat, ds: &DeltaStructure, start: Option<&[f64]>) -> Result<MuPoint> {
    validate(m, ds)?;
    let f = Scaled { m, rows: ds.row_owner(), cols: ds.col_owner(), nb: ds.len() };
    let mut x = osborne(&f);
    if let Some(d) = start {
        if d.len() != ds.len() || d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("initial scaling must be positive, one per block".into()));
        }
        let mut xs: Vec<f64> = d.iter().map(|v| v.ln()).collect();
        normalize(&mut xs);
        if f.value(&xs) < f.value(&x) {
            x = xs;
        }
    }
    Ok(optimize(&f, x))
}

/// `μ̄` of a stable closed loop over a frequency grid.
///
/// The closed loop's outputs are the `v` channels and its inputs the `d`
/// channels of `ds`.
pub fn mu_upper_curve(closed: &StateSpace, ds: &DeltaStructure, grid: &FrequencyGrid) -> Result<MuCurve> {
    if closed.ny() != ds.n_v() || closed.nu() != ds.n_d() {
        return Err(Error::Dimension(format!(
            "closed loop is {}x{}, structure expects {}x{}",
            closed.ny(),
            closed.nu(),
            ds.n_v(),
            ds.n_d()
        )));
    }
    let st = closed.is_hurwitz()?;
    if !st.hurwitz {
        return Err(Error::Unstable { abscissa: st.abscissa });
    }
    // Warm starts run along fixed chunks so the result does not depend on
    // the number of worker threads.
    const CHUNK: usize = 8;
    let chunks: Vec<&[f64]> = grid.points().chunks(CHUNK).collect();
    let run = |ws: &&[f64]| -> Result<Vec<MuPoint>> {
        let mut out: Vec<MuPoint> = Vec::with_capacity(ws.len());
        for &w in ws.iter() {
            let m = closed.freq_response(w)?;
            let p = mu_upper_from(&m, ds, out.last().map(|p| p.d.as_slice()))?;
            out.push(p);
        }
        Ok(out)
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<Vec<MuPoint>>> = {
        use rayon::prelude::*;
        chunks.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<Vec<MuPoint>>> = chunks.iter().map(run).collect();
    let mut pts = Vec::with_capacity(grid.len());
    for p in parts {
        pts.extend(p?);
    }
    Ok(MuCurve::from_points(grid.clone(), pts))
}

/// Scaled matrix `D M D⁻¹` for a given block scaling.
pub fn apply_scaling(m: &CMat, ds: &DeltaStructure, d: &[f64]) -> Result<CMat> {
    validate(m, ds)?;
    if d.len() != ds.len() || d.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("scaling must be positive, one per block".into()));
    }
    let f = Scaled { m, rows: ds.row_owner(), cols: ds.col_owner(), nb: ds.len() };
    let x: Vec<f64> = d.iter().map(|v| v.ln()).collect();
    Ok(f.apply(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sigma_max;
    use crate::mu::Block;
    use num_complex::Complex64;

    fn zero() -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn full_block_is_sigma_max() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0), Complex64::new(0.0, 2.0), c(-0.5), c(3.0)]);
        let ds = DeltaStructure::new(vec![Block::full(2, 2)]).unwrap();
        let p = mu_upper_at(&m, &ds).unwrap();
        assert!((p.mu - sigma_max(&m)).abs() < 1e-12);
    }

    #[test]
    fn diagonal_matrix() {
        let m = CMat::from_row_slice(2, 2, &[c(2.0), zero(), zero(), c(3.0)]);
        let ds = DeltaStructure::real_scalars(2).unwrap();
        assert!((mu_upper_at(&m, &ds).unwrap().mu - 3.0).abs() < 1e-12);
    }

    #[test]
    fn balancing_off_diagonal_pair() {
        let m = CMat::from_row_slice(2, 2, &[zero(), c(10.0), c(0.1), zero()]);
        let ds = DeltaStructure::real_scalars(2).unwrap();
        let p = mu_upper_at(&m, &ds).unwrap();
        assert!((p.mu - 1.0).abs() < 1e-9);
        assert!((p.d[0] - 0.1).abs() < 1e-7);
        assert_eq!(p.d[1], 1.0);
    }

    #[test]
    fn nilpotent_goes_to_zero() {
        let m = CMat::from_row_slice(2, 2, &[zero(), c(10.0), zero(), zero()]);
        let ds = DeltaStructure::real_scalars(2).unwrap();
        assert!(mu_upper_at(&m, &ds).unwrap().mu < 1e-10);
    }

    #[test]
    fn dimension_mismatch() {
        let m = CMat::zeros(3, 2);
        let ds = DeltaStructure::real_scalars(2).unwrap();
        assert!(matches!(mu_upper_at(&m, &ds), Err(Error::Dimension(_))));
    }

    #[test]
    fn three_blocks_against_grid_search() {
        let v = [0.3, -1.2, 2.0, 0.7, 0.1, -0.4, 1.5, 0.9, -2.2];
        let m = CMat::from_fn(3, 3, |i, j| Complex64::new(v[3 * i + j], 0.3 * v[(3 * j + i + 1) % 9]));
        let ds = DeltaStructure::real_scalars(3).unwrap();
        let p = mu_upper_at(&m, &ds).unwrap();
        let f = Scaled { m: &m, rows: ds.row_owner(), cols: ds.col_owner(), nb: 3 };
        let mut best = f64::INFINITY;
        for a in -80..=80 {
            for b in -80..=80 {
                best = best.min(f.value(&[a as f64 * 0.025, b as f64 * 0.025, 0.0]));
            }
        }
        assert!(p.mu <= best + 1e-9, "{} vs grid {}", p.mu, best);
        assert!(p.mu >= best - 1e-3 * best);
    }

    #[test]
    fn scaled_value_matches_reported_d() {
        let m = CMat::from_fn(3, 3, |i, j| Complex64::new((i + 2 * j) as f64 - 2.0, (i * j) as f64));
        let ds = DeltaStructure::real_scalars(3).unwrap();
        let p = mu_upper_at(&m, &ds).unwrap();
        let s = apply_scaling(&m, &ds, &p.d).unwrap();
        assert!((sigma_max(&s) - p.mu).abs() < 1e-12 * p.mu.max(1.0));
    }
}
