//! Browser bindings: weight templates, vertex stability of a scaled K*,
//! and a nonlinear step response.

use mucontrol::lti::{FrequencyGrid, StateSpace, TFMatrix};
use mucontrol::robot::{build_pldi, make_weights, paper_2r_controller, IntervalMatrixBounds, TwoLink, VertexMode, WeightSpec};
use mucontrol::verify::{simulate_closed_loop, vertex_stability, Reference, SimOptions};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// `K*` with every entry multiplied by `gain`.
fn scaled_controller(gain: f64) -> StateSpace {
    let k = paper_2r_controller().to_ss();
    let (a, b, c, d) = k.into_parts();
    StateSpace::new(a, b, c * gain, d * gain).expect("same shapes")
}

/// Template magnitudes `1/|W_S|` and `1/|W_T|` for one channel.
///
/// Returns `[ω_0.., 1/|W_S|.., 1/|W_T|..]`, each block `points` long.
#[wasm_bindgen]
pub fn weight_templates(m_s: f64, a_s: f64, omega_b: f64, m_t: f64, a_t: f64, omega_bt: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let spec = WeightSpec {
        m_s: vec![m_s],
        a_s: vec![a_s],
        omega_b: vec![omega_b],
        m_t: vec![m_t],
        a_t: vec![a_t],
        omega_bt: vec![omega_bt],
    };
    let (ws, wt): (TFMatrix, TFMatrix) = make_weights(&spec).map_err(err)?;
    let grid = FrequencyGrid::logspace(1e-3, 1e4, points).map_err(err)?;
    let w = grid.points();
    let mut out = w.to_vec();
    out.extend(w.iter().map(|&x| 1.0 / ws.entry(0, 0).freq_response(x).norm()));
    out.extend(w.iter().map(|&x| 1.0 / wt.entry(0, 0).freq_response(x).norm()));
    Ok(out)
}

/// Vertex test of `gain · K*` on the 1024-vertex interval plant.
///
/// Returns `[unstable_count, worst_abscissa, abscissa_0, .., abscissa_1023]`.
#[wasm_bindgen]
pub fn vertex_scan(gain: f64) -> Result<Vec<f64>, JsError> {
    let pldi = build_pldi(&IntervalMatrixBounds::paper_2r(), VertexMode::Full).map_err(err)?;
    let r = vertex_stability(&scaled_controller(gain), &pldi).map_err(err)?;
    let mut out = vec![r.unstable_count() as f64, r.worst_abscissa];
    out.extend(r.verdicts.iter().map(|v| v.abscissa));
    Ok(out)
}

/// Nonlinear two-link step response under `gain · K*`.
///
/// Returns `[t.., q1.., q2..]`, decimated to at most 500 samples.
#[wasm_bindgen]
pub fn step_response(r1: f64, r2: f64, gain: f64, t_end: f64) -> Result<Vec<f64>, JsError> {
    let reference = Reference::Step { value: vec![r1, r2], at: 0.0 };
    let opts = SimOptions { t_end, dt: 1e-3 * t_end.min(1.0), x0: None };
    let trace = simulate_closed_loop(&TwoLink::paper_2r(), &scaled_controller(gain), &reference, &opts).map_err(err)?;
    let stride = trace.len().div_ceil(500).max(1);
    let idx: Vec<usize> = (0..trace.len()).step_by(stride).collect();
    let mut out: Vec<f64> = idx.iter().map(|&i| trace.t[i]).collect();
    out.extend(idx.iter().map(|&i| trace.x[i][0]));
    out.extend(idx.iter().map(|&i| trace.x[i][1]));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_reach_high_frequency_gain() {
        let v = weight_templates(2.0, 0.01, 0.5, 2.0, 0.01, 10.0, 50).unwrap();
        assert_eq!(v.len(), 150);
        // 1/|W_S| tends to M_S at high frequency, 1/|W_T| to M_T at low.
        assert!((v[99] - 2.0).abs() < 1e-2);
        assert!((v[100] - 2.0).abs() < 1e-2);
    }

    #[test]
    fn vertex_scan_matches_cli_count() {
        let v = vertex_scan(1.0).unwrap();
        assert_eq!(v.len(), 2 + 1024);
        assert_eq!(v[0], 165.0);
    }

    #[test]
    fn step_response_tracks() {
        let v = step_response(0.1, 0.0, 1.0, 5.0).unwrap();
        let n = v.len() / 3;
        assert!(n <= 501);
        assert!((v[2 * n - 1] - 0.1).abs() < 1e-3);
    }
}
