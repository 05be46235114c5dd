use serde::{Deserialize, Serialize};

use super::{fit_dscale, mu_upper_curve, DeltaStructure, MuCurve};
use crate::error::{Error, Result};
use crate::hinf::{synthesize_hinf, HinfOptions};
use crate::linalg::Mat;
use crate::lti::{blkdiag, lft_lower, series, FrequencyGrid, RationalTF, StateSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Robust,
    NotRobust,
}

impl Verdict {
    /// Main-loop condition `μ̄ < 1`.
    pub fn from_peak(peak: f64) -> Self {
        if peak < 1.0 {
            Verdict::Robust
        } else {
            Verdict::NotRobust
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// μ̄ peak improved by less than the tolerance.
    Converged,
    MaxIterations,
    /// No scaling freedom: a single H∞ synthesis is the answer.
    NoScalingFreedom,
    /// A K-step failed; the best earlier iterate is kept.
    SynthesisFailed(String),
    /// The optimizer ran out of budget (fixed-structure tuning).
    Budget,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisReport {
    pub controller: StateSpace,
    /// γ reached by each K-step (tuner: objective per round).
    pub gamma_history: Vec<f64>,
    /// μ̄ peak of each iterate.
    pub mu_history: Vec<f64>,
    /// Whether each iterate improved on the best so far.
    pub accepted: Vec<bool>,
    pub iterations: usize,
    pub verdict: Verdict,
    /// μ̄ curve of the returned controller.
    pub curve: MuCurve,
    pub stop: StopReason,
}

impl SynthesisReport {
    pub fn peak(&self) -> f64 {
        self.curve.peak
    }

    /// μ̄ peaks of the accepted iterates, in order.
    pub fn accepted_peaks(&self) -> Vec<f64> {
        self.mu_history.iter().zip(&self.accepted).filter(|(_, a)| **a).map(|(m, _)| *m).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DkOptions {
    pub max_iter: usize,
    /// Minimum improvement of the μ̄ peak to keep iterating.
    pub tol: f64,
    pub dfit_order: usize,
    pub grid: FrequencyGrid,
    pub hinf: HinfOptions,
}

impl Default for DkOptions {
    fn default() -> Self {
        Self {
            max_iter: 30,
            tol: 1e-3,
            dfit_order: 2,
            grid: FrequencyGrid::logspace(1e-3, 1e4, 100).expect("valid grid"),
            hinf: HinfOptions::default(),
        }
    }
}

/// `diag(g, …, g)` with `n` copies.
fn repeat(g: &StateSpace, n: usize) -> StateSpace {
    let copies: Vec<&StateSpace> = std::iter::repeat_n(g, n).collect();
    blkdiag(&copies)
}

/// Absorbs fitted block scalings into the plant:
/// `diag(D_L, I) · P · diag(D_R⁻¹, I)`.
pub fn scale_plant(
    p: &StateSpace,
    ds: &DeltaStructure,
    fits: &[RationalTF],
    n_meas: usize,
    n_ctrl: usize,
) -> Result<StateSpace> {
    if fits.len() != ds.len() {
        return Err(Error::Dimension("one fitted scaling per block required".into()));
    }
    if p.ny() != ds.n_v() + n_meas || p.nu() != ds.n_d() + n_ctrl {
        return Err(Error::Dimension("plant channels do not match the structure".into()));
    }
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (b, f) in ds.blocks().iter().zip(fits) {
        let inv = RationalTF::new(f.den().to_vec(), f.num().to_vec())?;
        left.push(repeat(&f.to_ss(), b.v_dim()));
        right.push(repeat(&inv.to_ss(), b.d_dim()));
    }
    left.push(StateSpace::static_gain(Mat::identity(n_meas, n_meas)));
    right.push(StateSpace::static_gain(Mat::identity(n_ctrl, n_ctrl)));
    let l = blkdiag(&left.iter().collect::<Vec<_>>());
    let r = blkdiag(&right.iter().collect::<Vec<_>>());
    Ok(series(&series(&r, p)?, &l)?.balanced())
}

/// D-K iteration: alternates H∞ synthesis on the scaled plant with μ̄
/// analysis of the true closed loop and rational fitting of the scalings.
///
/// `p` has outputs `(v, z, y)` and inputs `(d, w, u)`; `ds` must already
/// include the performance block as its last block.
pub fn dk_iterate(p: &StateSpace, ds: &DeltaStructure, n_meas: usize, n_ctrl: usize, opts: &DkOptions) -> Result<SynthesisReport> {
    if p.ny() != ds.n_v() + n_meas || p.nu() != ds.n_d() + n_ctrl {
        return Err(Error::Dimension(format!(
            "plant is {}x{}, structure and loop need {}x{}",
            p.ny(),
            p.nu(),
            ds.n_v() + n_meas,
            ds.n_d() + n_ctrl
        )));
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be positive".into()));
    }
    let mut scaled = p.clone();
    let mut best: Option<(StateSpace, MuCurve)> = None;
    let mut gamma_history = Vec::new();
    let mut mu_history = Vec::new();
    let mut accepted = Vec::new();
    let mut stop = StopReason::MaxIterations;
    for it in 0..opts.max_iter {
        let syn = match synthesize_hinf(&scaled, n_meas, n_ctrl, &opts.hinf) {
            Ok(s) => s,
            Err(e) if best.is_some() => {
                stop = StopReason::SynthesisFailed(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        let closed = lft_lower(p, &syn.controller, n_meas, n_ctrl)?;
        let curve = match mu_upper_curve(&closed, ds, &opts.grid) {
            Ok(c) => c,
            Err(e @ Error::Unstable { .. }) if best.is_some() => {
                stop = StopReason::SynthesisFailed(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        let prev = best.as_ref().map_or(f64::INFINITY, |b| b.1.peak);
        let peak = curve.peak;
        gamma_history.push(syn.gamma);
        mu_history.push(peak);
        accepted.push(peak < prev);
        let fits = if ds.len() > 1 { Some(fit_all(&curve, ds, opts)?) } else { None };
        if peak < prev {
            best = Some((syn.controller, curve));
        }
        if ds.len() == 1 {
            stop = StopReason::NoScalingFreedom;
            break;
        }
        if it > 0 && prev - peak < opts.tol {
            stop = StopReason::Converged;
            break;
        }
        if it + 1 == opts.max_iter {
            break;
        }
        scaled = scale_plant(p, ds, &fits.expect("fitted above"), n_meas, n_ctrl)?;
    }
    let (controller, curve) = best.expect("first iteration succeeded");
    Ok(SynthesisReport {
        controller,
        iterations: mu_history.len(),
        gamma_history,
        mu_history,
        accepted,
        verdict: Verdict::from_peak(curve.peak),
        curve,
        stop,
    })
}

fn fit_all(curve: &MuCurve, ds: &DeltaStructure, opts: &DkOptions) -> Result<Vec<RationalTF>> {
    let last = ds.len() - 1;
    (0..ds.len())
        .map(|k| {
            if k == last {
                return Ok(RationalTF::constant(1.0));
            }
            let samples: Vec<f64> = curve.dscales.iter().map(|d| d[k]).collect();
            fit_dscale(&samples, &opts.grid, opts.dfit_order)
        })
        .collect()
}
