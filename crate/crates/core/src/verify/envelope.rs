use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vertex::closed_loop;
use crate::error::{Error, Result};
use crate::linalg::{cinverse, CMat};
use crate::lti::{FrequencyGrid, StateSpace, TFMatrix};
use crate::robot::UncertainPlant;

/// Pointwise maxima of `|S|` and `|T|` over the nominal plant and the
/// sampled parameter points.
///
/// A channel is an output row: its gain is the Euclidean norm of row `i`
/// of `S(jω)` (or `T(jω)`), which is what the diagonal weight `W_i`
/// scales. Entry magnitudes are kept too, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub grid: FrequencyGrid,
    pub samples: usize,
    pub seed: u64,
    /// `[ω][i]`
    pub s_channel: Vec<Vec<f64>>,
    pub t_channel: Vec<Vec<f64>>,
    /// `[ω][i·n + j]`
    pub s_entries: Vec<Vec<f64>>,
    pub t_entries: Vec<Vec<f64>>,
    /// `1/|W_S,i(jω)|` and `1/|W_T,i(jω)|`.
    pub s_template: Vec<Vec<f64>>,
    pub t_template: Vec<Vec<f64>>,
    /// Parameter points whose closed loop is not stable; excluded from the
    /// envelopes.
    pub unstable: Vec<Vec<f64>>,
    /// Smallest template-minus-envelope gap in dB over both loops.
    pub margin_db: f64,
}

impl EnvelopeReport {
    pub fn channels(&self) -> usize {
        self.s_channel.first().map_or(0, |r| r.len())
    }

    /// Multiplies every template by `f` and recomputes the margin.
    pub fn scale_templates(&mut self, f: f64) {
        for row in self.s_template.iter_mut().chain(self.t_template.iter_mut()) {
            for v in row.iter_mut() {
                *v *= f;
            }
        }
        self.margin_db = margin(self);
    }

    /// Largest envelope-to-template ratio over both loops.
    pub fn worst_ratio(&self) -> f64 {
        ratios(self).map(|(_, _, r)| r).fold(0.0, f64::max)
    }
}

fn db(x: f64) -> f64 {
    20.0 * x.log10()
}

fn ratios(r: &EnvelopeReport) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    let n = r.channels();
    (0..r.grid.len()).flat_map(move |k| {
        (0..n).flat_map(move |i| {
            [r.s_channel[k][i] / r.s_template[k][i], r.t_channel[k][i] / r.t_template[k][i]]
                .into_iter()
                .map(move |q| (k, i, if q.is_nan() { f64::INFINITY } else { q }))
        })
    })
}

fn margin(r: &EnvelopeReport) -> f64 {
    -db(r.worst_ratio())
}

struct Sample {
    s: Vec<CMat>,
    stable: bool,
}

fn loop_sample(g: &StateSpace, k: &StateSpace, kw: &[CMat], grid: &FrequencyGrid) -> Result<Sample> {
    let stable = closed_loop(g, k)?.is_hurwitz()?.hurwitz;
    if !stable {
        return Ok(Sample { s: vec![], stable });
    }
    let n = g.ny();
    let s = grid
        .points()
        .iter()
        .zip(kw)
        .map(|(&w, kw)| {
            let l = g.freq_response(w)? * kw;
            cinverse(&(CMat::identity(n, n) + l), "I + G K")
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sample { s, stable })
}

/// Sensitivity envelopes of the loop `u = K(r − y)` around the nominal
/// plant and `n` parameter points drawn uniformly from `[−1, 1]^p`.
///
/// Draws are sequential from one seeded stream, so a larger `n` with the
/// same seed extends the smaller sample set.
pub fn monte_carlo_freq(
    k: &StateSpace,
    up: &UncertainPlant,
    ws: &TFMatrix,
    wt: &TFMatrix,
    n: usize,
    seed: u64,
    grid: &FrequencyGrid,
) -> Result<EnvelopeReport> {
    let ny = up.ny();
    if k.nu() != ny || k.ny() != up.nu() {
        return Err(Error::Dimension(format!("controller is {}x{}, plant is {}x{}", k.ny(), k.nu(), ny, up.nu())));
    }
    if ws.rows() != ny || wt.rows() != ny {
        return Err(Error::Dimension(format!("weights must have {ny} channels")));
    }
    if !closed_loop(&up.nominal, k)?.is_hurwitz()?.hurwitz {
        return Err(Error::InvalidArgument("controller does not stabilize the nominal plant".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = up.n_delta();
    let deltas: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
    let kw = grid.points().iter().map(|&w| k.freq_response(w)).collect::<Result<Vec<_>>>()?;

    let run = |delta: Option<&Vec<f64>>| -> Result<Sample> {
        let g = match delta {
            Some(d) => up.at(d)?,
            None => up.nominal.clone(),
        };
        loop_sample(&g, k, &kw, grid)
    };
    let points: Vec<Option<&Vec<f64>>> = std::iter::once(None).chain(deltas.iter().map(Some)).collect();
    #[cfg(feature = "parallel")]
    let results: Vec<Result<Sample>> = {
        use rayon::prelude::*;
        points.par_iter().map(|d| run(*d)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Sample>> = points.iter().map(|d| run(*d)).collect();

    let nw = grid.len();
    let mut s_channel = vec![vec![0.0; ny]; nw];
    let mut t_channel = vec![vec![0.0; ny]; nw];
    let mut s_entries = vec![vec![0.0; ny * ny]; nw];
    let mut t_entries = vec![vec![0.0; ny * ny]; nw];
    let mut unstable = Vec::new();
    for (pt, res) in points.iter().zip(results) {
        let sample = res?;
        if !sample.stable {
            unstable.push(pt.cloned().unwrap_or_else(|| vec![0.0; p]));
            continue;
        }
        for (kk, s) in sample.s.iter().enumerate() {
            let t = CMat::identity(ny, ny) - s;
            for i in 0..ny {
                let sr = s.row(i).norm();
                let tr = t.row(i).norm();
                s_channel[kk][i] = f64::max(s_channel[kk][i], sr);
                t_channel[kk][i] = f64::max(t_channel[kk][i], tr);
                for j in 0..ny {
                    s_entries[kk][i * ny + j] = f64::max(s_entries[kk][i * ny + j], s[(i, j)].norm());
                    t_entries[kk][i * ny + j] = f64::max(t_entries[kk][i * ny + j], t[(i, j)].norm());
                }
            }
        }
    }
    let template = |w: &TFMatrix| -> Vec<Vec<f64>> {
        grid.points().iter().map(|&om| (0..ny).map(|i| 1.0 / w.entry(i, i).freq_response(om).norm()).collect()).collect()
    };
    let mut report = EnvelopeReport {
        grid: grid.clone(),
        samples: n,
        seed,
        s_channel,
        t_channel,
        s_entries,
        t_entries,
        s_template: template(ws),
        t_template: template(wt),
        unstable,
        margin_db: 0.0,
    };
    report.margin_db = margin(&report);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightCheck {
    pub pass: bool,
    pub margin_db: f64,
    pub worst_omega: f64,
    pub worst_channel: usize,
    /// Frequencies at which some channel exceeds its slackened template.
    pub failing: Vec<f64>,
    pub unstable_samples: usize,
}

/// Passes iff every envelope stays below its template times `1 + slack`
/// and no sampled loop was unstable.
pub fn check_weight_bounds(report: &EnvelopeReport, slack: f64) -> WeightCheck {
    let limit = 1.0 + slack.max(0.0);
    let mut worst = (0, 0, f64::NEG_INFINITY);
    let mut failing = Vec::new();
    for (k, i, q) in ratios(report) {
        if q > worst.2 {
            worst = (k, i, q);
        }
        let w = report.grid.points()[k];
        if q > limit && failing.last() != Some(&w) {
            failing.push(w);
        }
    }
    WeightCheck {
        pass: failing.is_empty() && report.unstable.is_empty(),
        margin_db: report.margin_db,
        worst_omega: report.grid.points()[worst.0],
        worst_channel: worst.1,
        failing,
        unstable_samples: report.unstable.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::lti::RationalTF;
    use crate::robot::{build_uncertain_plant, IntervalMatrixBounds};

    fn setup() -> (StateSpace, UncertainPlant, TFMatrix, TFMatrix, FrequencyGrid) {
        let up = build_uncertain_plant(&IntervalMatrixBounds::paper_2r()).unwrap();
        let a = Mat::from_diagonal_element(2, 2, -100.0);
        let b = Mat::from_diagonal_element(2, 2, 1.0);
        let c = Mat::from_diagonal_element(2, 2, -6e6);
        let d = Mat::from_diagonal_element(2, 2, 62000.0);
        let k = StateSpace::new(a, b, c, d).unwrap();
        let loose = RationalTF::constant(0.1);
        let w = TFMatrix::diagonal(vec![loose.clone(), loose]);
        (k, up, w.clone(), w, FrequencyGrid::logspace(1e-2, 1e3, 40).unwrap())
    }

    #[test]
    fn nominal_only_and_nesting() {
        let (k, up, ws, wt, grid) = setup();
        let r0 = monte_carlo_freq(&k, &up, &ws, &wt, 0, 1, &grid).unwrap();
        assert_eq!(r0.samples, 0);
        assert!(r0.margin_db.is_finite());
        let r20 = monte_carlo_freq(&k, &up, &ws, &wt, 20, 1, &grid).unwrap();
        let r40 = monte_carlo_freq(&k, &up, &ws, &wt, 40, 1, &grid).unwrap();
        for kk in 0..grid.len() {
            for i in 0..2 {
                assert!(r40.s_channel[kk][i] >= r20.s_channel[kk][i]);
                assert!(r20.s_channel[kk][i] >= r0.s_channel[kk][i]);
                assert!(r40.t_channel[kk][i] >= r20.t_channel[kk][i]);
            }
        }
        assert_eq!(r20, monte_carlo_freq(&k, &up, &ws, &wt, 20, 1, &grid).unwrap());
    }

    #[test]
    fn zero_template_fails_everywhere() {
        let (k, up, ws, wt, grid) = setup();
        let mut r = monte_carlo_freq(&k, &up, &ws, &wt, 3, 2, &grid).unwrap();
        assert!(check_weight_bounds(&r, 0.0).pass, "{}", r.worst_ratio());
        r.scale_templates(0.0);
        let c = check_weight_bounds(&r, 0.0);
        assert!(!c.pass);
        assert_eq!(c.failing.len(), grid.len());
    }

    #[test]
    fn row_norm_bounds_entries() {
        let (k, up, ws, wt, grid) = setup();
        let r = monte_carlo_freq(&k, &up, &ws, &wt, 5, 9, &grid).unwrap();
        for kk in 0..grid.len() {
            for i in 0..2 {
                for j in 0..2 {
                    assert!(r.s_entries[kk][i * 2 + j] <= r.s_channel[kk][i] * (1.0 + 1e-12));
                }
            }
        }
    }
}
