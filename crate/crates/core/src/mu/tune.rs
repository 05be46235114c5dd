use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dk::{dk_iterate, DkOptions, StopReason, SynthesisReport, Verdict};
use super::{apply_scaling, mu_upper_curve, DeltaStructure, MuCurve};
use crate::error::{Error, Result};
use crate::linalg::{self, cinverse, CMat, Mat};
use crate::lti::{lft_lower, poly_from_roots, poly_roots, FrequencyGrid, RationalTF, StateSpace, TFMatrix};

/// Per-entry numerator/denominator degrees of a controller family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub num_deg: Vec<usize>,
    pub den_deg: Vec<usize>,
    /// Entries held at zero.
    pub zero: Vec<bool>,
}

impl Template {
    pub fn uniform(rows: usize, cols: usize, num_deg: usize, den_deg: usize) -> Self {
        let n = rows * cols;
        Self { rows, cols, num_deg: vec![num_deg; n], den_deg: vec![den_deg; n], zero: vec![false; n] }
    }

    fn validate(&self) -> Result<()> {
        let n = self.rows * self.cols;
        if n == 0 || self.num_deg.len() != n || self.den_deg.len() != n || self.zero.len() != n {
            return Err(Error::Dimension("template needs one degree pair per entry".into()));
        }
        if self.num_deg.iter().zip(&self.den_deg).any(|(a, b)| a > b) {
            return Err(Error::InvalidArgument("template entries must be proper".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneOptions {
    /// Random multi-starts in the first round (the unperturbed initial
    /// point counts as one).
    pub starts: usize,
    pub seed: u64,
    /// Standard deviation of the log-coefficient perturbation of the starts.
    pub spread: f64,
    /// Objective evaluations per start and round.
    pub max_evals: usize,
    pub initial_step: f64,
    pub min_step: f64,
    /// Weight of the spectral-abscissa hinge.
    pub penalty: f64,
    /// Closed-loop abscissa the hinge aims below.
    pub abscissa_margin: f64,
    /// Scaling/tuning rounds.
    pub rounds: usize,
    pub tol: f64,
    pub grid: FrequencyGrid,
    /// Starting controller; fitted from a full-order design when absent.
    pub initial: Option<TFMatrix>,
    /// Full-order controller to fit; synthesized by D-K iteration when
    /// both this and `initial` are absent.
    pub full_order: Option<StateSpace>,
    pub dk: DkOptions,
}

impl Default for TuneOptions {
    fn default() -> Self {
        let dk = DkOptions::default();
        Self {
            starts: 8,
            seed: 0,
            spread: 0.3,
            max_evals: 3000,
            initial_step: 0.25,
            min_step: 1e-3,
            penalty: 1e3,
            abscissa_margin: 1e-6,
            rounds: 4,
            tol: 1e-3,
            grid: dk.grid.clone(),
            initial: None,
            full_order: None,
            dk,
        }
    }
}

/// Coefficients are `sign · exp(θ)`; denominators are monic.
#[derive(Clone, Debug)]
struct Param {
    template: Template,
    /// Per free entry: (entry index, number of numerator coefficients,
    /// number of free denominator coefficients).
    layout: Vec<(usize, usize, usize)>,
    signs: Vec<f64>,
}

impl Param {
    fn from_tf(template: &Template, k: &TFMatrix) -> Result<(Self, Vec<f64>)> {
        if k.rows() != template.rows || k.cols() != template.cols {
            return Err(Error::Dimension("initial controller does not match the template".into()));
        }
        let mut layout = Vec::new();
        let mut signs = Vec::new();
        let mut theta = Vec::new();
        for idx in 0..template.rows * template.cols {
            if template.zero[idx] {
                continue;
            }
            let (nd, dd) = (template.num_deg[idx], template.den_deg[idx]);
            let g = k.entry(idx / template.cols, idx % template.cols);
            let (num, den) = conform(g, nd, dd)?;
            let scale = |v: &[f64]| v.iter().fold(0.0_f64, |a, x| a.max(x.abs())).max(1e-300);
            let (ns, ds) = (scale(&num) * 1e-8, scale(&den) * 1e-8);
            for &c in &num {
                signs.push(if c < 0.0 { -1.0 } else { 1.0 });
                theta.push(c.abs().max(ns).ln());
            }
            for &c in &den[1..] {
                signs.push(if c < 0.0 { -1.0 } else { 1.0 });
                theta.push(c.abs().max(ds).ln());
            }
            layout.push((idx, nd + 1, dd));
        }
        Ok((Self { template: template.clone(), layout, signs }, theta))
    }

    /// Entry polynomials `(index, num, den)`.
    fn entries(&self, theta: &[f64]) -> Vec<(usize, Vec<f64>, Vec<f64>)> {
        let mut at = 0;
        let mut out = Vec::with_capacity(self.layout.len());
        for &(idx, nn, nd) in &self.layout {
            let c = |k: usize| self.signs[k] * theta[k].exp();
            let num: Vec<f64> = (at..at + nn).map(c).collect();
            let mut den = vec![1.0];
            den.extend((at + nn..at + nn + nd).map(c));
            at += nn + nd;
            out.push((idx, num, den));
        }
        out
    }

    fn to_tf(&self, theta: &[f64]) -> Result<TFMatrix> {
        let (r, c) = (self.template.rows, self.template.cols);
        let mut e = vec![vec![RationalTF::constant(0.0); c]; r];
        for (idx, num, den) in self.entries(theta) {
            e[idx / c][idx % c] = RationalTF::new(num, den)?;
        }
        TFMatrix::new(e)
    }

    fn response(&self, theta: &[f64], omega: f64) -> CMat {
        let (r, c) = (self.template.rows, self.template.cols);
        let s = Complex64::new(0.0, omega);
        let mut k = CMat::zeros(r, c);
        for (idx, num, den) in self.entries(theta) {
            k[(idx / c, idx % c)] = horner(&num, s) / horner(&den, s);
        }
        k
    }
}

fn horner(c: &[f64], s: Complex64) -> Complex64 {
    c.iter().fold(Complex64::new(0.0, 0.0), |acc, &x| acc * s + x)
}

/// Monic denominator of degree `dd` and numerator with `nd + 1`
/// coefficients, zero-padded at the top.
fn conform(g: &RationalTF, nd: usize, dd: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if g.degree() > dd || (g.num().len() > nd + 1 && !g.is_zero()) {
        return Err(Error::Dimension(format!("initial entry {g:?} exceeds the template degrees ({nd}, {dd})")));
    }
    let lead = g.den()[0];
    let mut den: Vec<f64> = g.den().iter().map(|x| x / lead).collect();
    let mut num: Vec<f64> = g.num().iter().map(|x| x / lead).collect();
    // Extra denominator degree becomes a fast pole far above the data.
    while den.len() < dd + 1 {
        let p = 1e3 * (1.0 + den.iter().fold(0.0_f64, |a, x| a.max(x.abs())));
        den = mul_poly(&den, &[1.0 / p, 1.0]);
        num = mul_poly(&num, &[1.0 / p, 1.0]);
        let l = den[0];
        den.iter_mut().for_each(|x| *x /= l);
        num.iter_mut().for_each(|x| *x /= l);
    }
    let pad = (nd + 1).saturating_sub(num.len());
    let mut n = vec![0.0; pad];
    n.extend(num.iter().skip(num.len().saturating_sub(nd + 1)));
    Ok((n, den))
}

fn mul_poly(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Sanathanan–Koerner fit of a proper rational function to frequency
/// samples, started from Levy's linearization. Unstable poles are
/// reflected into the left half-plane and the numerator refitted.
pub fn fit_rational(resp: &[Complex64], grid: &FrequencyGrid, num_deg: usize, den_deg: usize) -> Result<RationalTF> {
    let w = grid.points();
    if resp.len() != w.len() {
        return Err(Error::Dimension(format!("{} samples on a {}-point grid", resp.len(), w.len())));
    }
    if num_deg > den_deg {
        return Err(Error::InvalidArgument("fit must be proper".into()));
    }
    if resp.iter().all(|h| h.norm() == 0.0) {
        return Ok(RationalTF::constant(0.0));
    }
    // Work in s̃ = s/ω₀ for conditioning.
    let w0 = (w[0] * w[w.len() - 1]).sqrt();
    let sn: Vec<Complex64> = w.iter().map(|&x| Complex64::new(0.0, x / w0)).collect();
    let nn = num_deg + 1;
    let mut den = vec![1.0; den_deg + 1];
    let mut weights = vec![1.0; w.len()];
    for _ in 0..30 {
        let rows = 2 * w.len();
        let mut a = Mat::zeros(rows, nn + den_deg);
        let mut b = DVector::zeros(rows);
        for (k, (&s, &h)) in sn.iter().zip(resp).enumerate() {
            let wt = weights[k];
            // N(s) − H Σ_{j<dd} a_j s^j = H s^dd
            for i in 0..nn {
                let v = s.powu((num_deg - i) as u32) * wt;
                a[(2 * k, i)] = v.re;
                a[(2 * k + 1, i)] = v.im;
            }
            for j in 0..den_deg {
                let v = -h * s.powu((den_deg - 1 - j) as u32) * wt;
                a[(2 * k, nn + j)] = v.re;
                a[(2 * k + 1, nn + j)] = v.im;
            }
            let r = h * s.powu(den_deg as u32) * wt;
            b[2 * k] = r.re;
            b[2 * k + 1] = r.im;
        }
        let x = lstsq(&a, &b)?;
        let mut new_den = vec![1.0];
        new_den.extend(x.iter().skip(nn));
        let change = new_den.iter().zip(&den).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        den = new_den;
        for (k, &s) in sn.iter().enumerate() {
            weights[k] = 1.0 / horner(&den, s).norm().max(1e-300);
        }
        if change < 1e-10 * (1.0 + den.iter().fold(0.0_f64, |a, v| a.max(v.abs()))) {
            break;
        }
    }
    // Reflect unstable poles, then refit the numerator with the denominator fixed.
    let roots: Vec<Complex64> = poly_roots(&den)
        .into_iter()
        .map(|r| if r.re > 0.0 { Complex64::new(-r.re, r.im) } else if r.re == 0.0 { Complex64::new(-1e-6, r.im) } else { r })
        .collect();
    den = poly_from_roots(&roots);
    let rows = 2 * w.len();
    let mut a = Mat::zeros(rows, nn);
    let mut b = DVector::zeros(rows);
    for (k, (&s, &h)) in sn.iter().zip(resp).enumerate() {
        let dk = horner(&den, s);
        for i in 0..nn {
            let v = s.powu((num_deg - i) as u32) / dk;
            a[(2 * k, i)] = v.re;
            a[(2 * k + 1, i)] = v.im;
        }
        b[2 * k] = h.re;
        b[2 * k + 1] = h.im;
    }
    let num = lstsq(&a, &b)?;
    // Back to s: coefficient of s^k picks up ω₀^(dd − k).
    let den_s: Vec<f64> = den.iter().enumerate().map(|(i, c)| c * w0.powi(i as i32)).collect();
    let num_s: Vec<f64> = num.iter().enumerate().map(|(i, c)| c * w0.powi((den_deg - num_deg + i) as i32)).collect();
    RationalTF::new(num_s, den_s)
}

fn lstsq(a: &Mat, b: &DVector<f64>) -> Result<Vec<f64>> {
    // Column equilibration before the SVD solve.
    let scale: Vec<f64> = (0..a.ncols()).map(|j| a.column(j).norm().max(1e-300)).collect();
    let mut an = a.clone();
    for (j, s) in scale.iter().enumerate() {
        an.column_mut(j).scale_mut(1.0 / s);
    }
    let x = an
        .svd(true, true)
        .solve(b, 1e-12)
        .map_err(|e| Error::Singular(format!("least squares: {e}")))?;
    Ok(x.iter().zip(&scale).map(|(v, s)| v / s).collect())
}

/// Fits every entry of a (full-order) controller to the template.
pub fn reduce_to_template(k: &StateSpace, template: &Template, grid: &FrequencyGrid) -> Result<TFMatrix> {
    template.validate()?;
    if k.ny() != template.rows || k.nu() != template.cols {
        return Err(Error::Dimension("controller does not match the template".into()));
    }
    let resp = grid.points().iter().map(|&w| k.freq_response(w)).collect::<Result<Vec<_>>>()?;
    let mut e = vec![vec![RationalTF::constant(0.0); template.cols]; template.rows];
    for i in 0..template.rows {
        for j in 0..template.cols {
            let idx = i * template.cols + j;
            if template.zero[idx] {
                continue;
            }
            let h: Vec<Complex64> = resp.iter().map(|m| m[(i, j)]).collect();
            e[i][j] = fit_rational(&h, grid, template.num_deg[idx], template.den_deg[idx])?;
        }
    }
    TFMatrix::new(e)
}

/// Fixed-D objective: `max_ω σ̄(D_ω F_l(P, K)(jω) D_ω⁻¹)` plus the
/// spectral-abscissa hinge.
struct Objective<'a> {
    p: &'a StateSpace,
    ds: &'a DeltaStructure,
    param: &'a Param,
    pw: Vec<CMat>,
    grid: &'a FrequencyGrid,
    dscales: Vec<Vec<f64>>,
    n_meas: usize,
    n_ctrl: usize,
    penalty: f64,
    margin: f64,
}

impl Objective<'_> {
    fn abscissa(&self, theta: &[f64]) -> f64 {
        let k = match self.param.to_tf(theta) {
            Ok(k) => k.to_ss(),
            Err(_) => return f64::INFINITY,
        };
        match lft_lower(self.p, &k, self.n_meas, self.n_ctrl).and_then(|cl| linalg::spectral_abscissa(cl.a())) {
            Ok(a) if a.is_finite() => a,
            _ => f64::INFINITY,
        }
    }

    fn peak(&self, theta: &[f64]) -> f64 {
        let (nz, nw) = (self.p.ny() - self.n_meas, self.p.nu() - self.n_ctrl);
        let mut peak = 0.0_f64;
        for (k, (&w, pw)) in self.grid.points().iter().zip(&self.pw).enumerate() {
            let kw = self.param.response(theta, w);
            let p11 = pw.view((0, 0), (nz, nw));
            let p12 = pw.view((0, nw), (nz, self.n_ctrl));
            let p21 = pw.view((nz, 0), (self.n_meas, nw));
            let p22 = pw.view((nz, nw), (self.n_meas, self.n_ctrl));
            let inner = CMat::identity(self.n_meas, self.n_meas) - p22 * &kw;
            let Ok(inv) = cinverse(&inner, "I - P22 K") else {
                return f64::INFINITY;
            };
            let m = p11 + p12 * &kw * inv * p21;
            let v = match apply_scaling(&m, self.ds, &self.dscales[k]) {
                Ok(s) => linalg::sigma_max(&s),
                Err(_) => f64::INFINITY,
            };
            if !v.is_finite() {
                return f64::INFINITY;
            }
            peak = peak.max(v);
        }
        peak
    }

    /// `(value, stable)`
    fn eval(&self, theta: &[f64]) -> (f64, bool) {
        let a = self.abscissa(theta);
        let hinge = (a + self.margin).max(0.0);
        let peak = self.peak(theta);
        let peak = if peak.is_finite() { peak } else { 1e12 };
        (peak + self.penalty * hinge.min(1e9), a < 0.0)
    }
}

struct SearchResult {
    theta: Vec<f64>,
    value: f64,
    stable: bool,
    exhausted: bool,
}

/// Compass search on the log-coefficients.
fn pattern_search(obj: &Objective, start: Vec<f64>, opts: &TuneOptions) -> SearchResult {
    let mut x = start;
    let (mut fx, mut stable) = obj.eval(&x);
    let mut h = opts.initial_step;
    let mut evals = 1;
    let n = x.len();
    while h > opts.min_step && evals < opts.max_evals {
        let mut improved = false;
        for i in 0..n {
            for sgn in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += sgn * h;
                let (fy, sy) = obj.eval(&y);
                evals += 1;
                if fy < fx {
                    x = y;
                    fx = fy;
                    stable = sy;
                    improved = true;
                    break;
                }
            }
            if evals >= opts.max_evals {
                break;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    SearchResult { theta: x, value: fx, stable, exhausted: evals >= opts.max_evals }
}

/// Fixed-structure μ-synthesis by multi-start compass search over the
/// template coefficients.
///
/// Each round freezes the per-frequency block scalings of the current
/// best controller and minimizes the scaled σ̄ peak, which bounds μ̄ from
/// above; the μ̄ curve is then recomputed with fresh scalings.
pub fn tune_fixed_structure(
    p: &StateSpace,
    ds: &DeltaStructure,
    template: &Template,
    n_meas: usize,
    n_ctrl: usize,
    opts: &TuneOptions,
) -> Result<(SynthesisReport, TFMatrix)> {
    template.validate()?;
    if template.rows != n_ctrl || template.cols != n_meas {
        return Err(Error::Dimension(format!("template is {}x{}, loop needs {n_ctrl}x{n_meas}", template.rows, template.cols)));
    }
    if p.ny() != ds.n_v() + n_meas || p.nu() != ds.n_d() + n_ctrl {
        return Err(Error::Dimension("plant channels do not match the structure".into()));
    }
    if opts.starts == 0 || opts.rounds == 0 {
        return Err(Error::InvalidArgument("need at least one start and one round".into()));
    }
    let initial = match (&opts.initial, &opts.full_order) {
        (Some(k), _) => k.clone(),
        (None, Some(k)) => reduce_to_template(k, template, &opts.grid)?,
        (None, None) => {
            let full = dk_iterate(p, ds, n_meas, n_ctrl, &opts.dk)?;
            reduce_to_template(&full.controller, template, &opts.grid)?
        }
    };
    let (param, theta0) = Param::from_tf(template, &initial)?;
    let pw = opts.grid.points().iter().map(|&w| p.freq_response(w)).collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let normal = Normal::new(0.0, opts.spread.max(0.0)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut starts = vec![theta0.clone()];
    for _ in 1..opts.starts {
        starts.push(theta0.iter().map(|t| t + normal.sample(&mut rng)).collect());
    }

    // Scalings of the starting point, or unit scalings if it does not
    // stabilize.
    let unit = vec![1.0; ds.len()];
    let curve_of = |theta: &[f64]| -> Result<MuCurve> {
        let k = param.to_tf(theta)?.to_ss();
        mu_upper_curve(&lft_lower(p, &k, n_meas, n_ctrl)?, ds, &opts.grid)
    };
    let mut dscales = match curve_of(&theta0) {
        Ok(c) => c.dscales,
        Err(_) => vec![unit; opts.grid.len()],
    };

    let mut best: Option<(Vec<f64>, MuCurve)> = None;
    let mut gamma_history = Vec::new();
    let mut mu_history = Vec::new();
    let mut accepted = Vec::new();
    let mut stop = StopReason::MaxIterations;
    for round in 0..opts.rounds {
        let obj = Objective {
            p,
            ds,
            param: &param,
            pw: pw.clone(),
            grid: &opts.grid,
            dscales: dscales.clone(),
            n_meas,
            n_ctrl,
            penalty: opts.penalty,
            margin: opts.abscissa_margin,
        };
        let round_starts: Vec<Vec<f64>> = match &best {
            None => starts.clone(),
            Some((theta, _)) => vec![theta.clone()],
        };
        #[cfg(feature = "parallel")]
        let results: Vec<SearchResult> = {
            use rayon::prelude::*;
            round_starts.into_par_iter().map(|s| pattern_search(&obj, s, opts)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let results: Vec<SearchResult> = round_starts.into_iter().map(|s| pattern_search(&obj, s, opts)).collect();

        let winner = results
            .into_iter()
            .filter(|r| r.stable)
            .min_by(|a, b| a.value.total_cmp(&b.value));
        let Some(win) = winner else {
            if best.is_none() {
                return Err(Error::NoStabilizingStart { starts: opts.starts });
            }
            stop = StopReason::Converged;
            break;
        };
        let curve = curve_of(&win.theta)?;
        let prev = best.as_ref().map_or(f64::INFINITY, |b| b.1.peak);
        gamma_history.push(win.value);
        mu_history.push(curve.peak);
        accepted.push(curve.peak < prev);
        dscales = curve.dscales.clone();
        let exhausted = win.exhausted;
        if curve.peak < prev {
            best = Some((win.theta, curve));
        }
        if round > 0 && prev - mu_history[round] < opts.tol {
            stop = if exhausted { StopReason::Budget } else { StopReason::Converged };
            break;
        }
    }
    let (theta, curve) = best.expect("first round produced a stabilizing controller");
    let tf = param.to_tf(&theta)?;
    let report = SynthesisReport {
        controller: tf.to_ss(),
        iterations: mu_history.len(),
        gamma_history,
        mu_history,
        accepted,
        verdict: Verdict::from_peak(curve.peak),
        curve,
        stop,
    };
    Ok((report, tf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hinf::{synthesize_hinf, HinfOptions};
    use crate::lti::tf_to_ss;

    fn tf(n: &[f64], d: &[f64]) -> RationalTF {
        RationalTF::new(n.to_vec(), d.to_vec()).unwrap()
    }

    #[test]
    fn levy_fit_recovers_exact_model() {
        let g = tf(&[2.0, 3.0], &[1.0, 5.0, 100.0, 10.0]);
        let grid = FrequencyGrid::logspace(1e-2, 1e3, 80).unwrap();
        let h: Vec<Complex64> = grid.points().iter().map(|&w| g.freq_response(w)).collect();
        let f = fit_rational(&h, &grid, 1, 3).unwrap();
        for &w in grid.points() {
            let e = (f.freq_response(w) - g.freq_response(w)).norm() / g.freq_response(w).norm();
            assert!(e < 1e-6, "{w}: {e}");
        }
    }

    #[test]
    fn fit_is_stable() {
        // unstable pole at +1
        let g = tf(&[1.0], &[1.0, -1.0]);
        let grid = FrequencyGrid::logspace(1e-2, 1e2, 40).unwrap();
        let h: Vec<Complex64> = grid.points().iter().map(|&w| g.freq_response(w)).collect();
        let f = fit_rational(&h, &grid, 0, 1).unwrap();
        assert!(f.poles().iter().all(|p| p.re < 0.0));
    }

    /// SISO mixed-sensitivity plant around G = 1/(s+1):
    /// outputs (z1 = W_S e, z2 = u/10, e), inputs (w, u).
    fn siso_plant() -> StateSpace {
        let a = Mat::from_row_slice(2, 2, &[-1.0, 0.0, -1.0, -0.1]);
        let b = Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let c = Mat::from_row_slice(3, 2, &[0.0, 1.0, 0.0, 0.0, -1.0, 0.0]);
        let d = Mat::from_row_slice(3, 2, &[0.5, 0.0, 0.0, 0.1, 1.0, 0.0]);
        StateSpace::new(a, b, c, d).unwrap()
    }

    #[test]
    fn full_order_template_matches_riccati() {
        let p = siso_plant();
        let syn = synthesize_hinf(&p, 1, 1, &HinfOptions::default()).unwrap();
        let ds = DeltaStructure::new(vec![super::super::Block::full(1, 2)]).unwrap();
        let n = syn.controller.nx();
        let opts = TuneOptions {
            full_order: Some(syn.controller.clone()),
            grid: FrequencyGrid::logspace(1e-3, 1e3, 60).unwrap(),
            starts: 2,
            max_evals: 400,
            rounds: 2,
            ..TuneOptions::default()
        };
        let (r, k) = tune_fixed_structure(&p, &ds, &Template::uniform(1, 1, n, n), 1, 1, &opts).unwrap();
        assert_eq!(k.entry(0, 0).degree(), n);
        assert!(r.peak() <= syn.gamma * 1.1, "{} vs {}", r.peak(), syn.gamma);
        assert!(lft_lower(&p, &r.controller, 1, 1).unwrap().is_hurwitz().unwrap().hurwitz);
    }

    #[test]
    fn zero_template_gives_open_loop() {
        let p = siso_plant();
        let ds = DeltaStructure::new(vec![super::super::Block::full(1, 2)]).unwrap();
        let mut t = Template::uniform(1, 1, 1, 1);
        t.zero[0] = true;
        let opts = TuneOptions {
            initial: Some(TFMatrix::new(vec![vec![RationalTF::constant(0.0)]]).unwrap()),
            grid: FrequencyGrid::logspace(1e-3, 1e3, 60).unwrap(),
            starts: 1,
            rounds: 1,
            ..TuneOptions::default()
        };
        let (r, k) = tune_fixed_structure(&p, &ds, &t, 1, 1, &opts).unwrap();
        assert!(k.entry(0, 0).is_zero());
        let open = mu_upper_curve(&lft_lower(&p, &tf_to_ss(&RationalTF::constant(0.0)), 1, 1).unwrap(), &ds, &opts.grid)
            .unwrap();
        assert!((r.peak() - open.peak).abs() < 1e-12);
    }

    #[test]
    fn no_stabilizing_start() {
        // unstable plant 1/(s−1) with the controller held at zero
        let p = StateSpace::new(
            Mat::from_element(1, 1, 1.0),
            Mat::from_row_slice(1, 2, &[1.0, 1.0]),
            Mat::from_row_slice(2, 1, &[1.0, 1.0]),
            Mat::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.0]),
        )
        .unwrap();
        let ds = DeltaStructure::new(vec![super::super::Block::full(1, 1)]).unwrap();
        let mut t = Template::uniform(1, 1, 0, 0);
        t.zero[0] = true;
        let opts = TuneOptions {
            initial: Some(TFMatrix::new(vec![vec![RationalTF::constant(0.0)]]).unwrap()),
            grid: FrequencyGrid::logspace(1e-2, 1e2, 10).unwrap(),
            starts: 2,
            ..TuneOptions::default()
        };
        assert!(matches!(tune_fixed_structure(&p, &ds, &t, 1, 1, &opts), Err(Error::NoStabilizingStart { .. })));
    }
}
