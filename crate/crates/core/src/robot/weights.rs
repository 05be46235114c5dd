use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{RationalTF, TFMatrix};

/// Per-output shaping parameters of the sensitivity weights.
///
/// `W_S = (s/M_S + ω_B)/(s + ω_B A_S)` bounds `|S|` by `A_S` at low
/// frequency and `M_S` at high frequency; `W_T = (s + ω_BT)/(A_T s + ω_BT M_T)`
/// bounds `|T|` by `M_T` below `ω_BT` and `A_T` above.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub m_s: Vec<f64>,
    pub a_s: Vec<f64>,
    pub omega_b: Vec<f64>,
    pub m_t: Vec<f64>,
    pub a_t: Vec<f64>,
    pub omega_bt: Vec<f64>,
}

impl WeightSpec {
    /// Hyperparameters of the worked 2R example.
    pub fn paper_2r() -> Self {
        Self {
            m_s: vec![2.0, 3.0],
            a_s: vec![1e-2, 2e-2],
            omega_b: vec![0.5, 0.1],
            m_t: vec![2.1, 3.0],
            a_t: vec![1e-2, 1e-2],
            omega_bt: vec![10.0, 12.0],
        }
    }

    pub fn channels(&self) -> usize {
        self.m_s.len()
    }

    /// Checks the shaping conventions. `strict` additionally requires
    /// `M > 1`, `A < 1` and `ω_BT > 10 ω_B`.
    pub fn validate(&self, strict: bool) -> Result<()> {
        let n = self.channels();
        let lens = [self.a_s.len(), self.omega_b.len(), self.m_t.len(), self.a_t.len(), self.omega_bt.len()];
        if n == 0 || lens.iter().any(|&l| l != n) {
            return Err(Error::Dimension("every weight parameter needs one value per output".into()));
        }
        let all = [&self.m_s, &self.a_s, &self.omega_b, &self.m_t, &self.a_t, &self.omega_bt];
        if all.iter().any(|v| v.iter().any(|x| !(*x > 0.0) || !x.is_finite())) {
            return Err(Error::InvalidArgument("weight parameters must be positive".into()));
        }
        if strict {
            for i in 0..n {
                if !(self.m_s[i] > 1.0 && self.m_t[i] > 1.0) {
                    return Err(Error::InvalidArgument(format!("channel {i}: peak bounds M must exceed 1")));
                }
                if !(self.a_s[i] < 1.0 && self.a_t[i] < 1.0) {
                    return Err(Error::InvalidArgument(format!("channel {i}: A must lie in (0, 1)")));
                }
                if !(self.omega_bt[i] > 10.0 * self.omega_b[i]) {
                    return Err(Error::InvalidArgument(format!("channel {i}: need omega_BT > 10 omega_B")));
                }
            }
        }
        Ok(())
    }
}

/// Diagonal `W_S`, `W_T` from the shaping parameters.
///
/// Only positivity is enforced; see [`WeightSpec::validate`] for the
/// stricter design conventions.
pub fn make_weights(spec: &WeightSpec) -> Result<(TFMatrix, TFMatrix)> {
    spec.validate(false)?;
    let n = spec.channels();
    let mut ws = Vec::with_capacity(n);
    let mut wt = Vec::with_capacity(n);
    for i in 0..n {
        let wb = spec.omega_b[i];
        ws.push(RationalTF::new(vec![1.0 / spec.m_s[i], wb], vec![1.0, wb * spec.a_s[i]])?);
        let wbt = spec.omega_bt[i];
        wt.push(RationalTF::new(vec![1.0, wbt], vec![spec.a_t[i], wbt * spec.m_t[i]])?);
    }
    Ok((TFMatrix::diagonal(ws), TFMatrix::diagonal(wt)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn preset_weights() {
        let (ws, wt) = make_weights(&WeightSpec::paper_2r()).unwrap();
        assert_eq!(ws.entry(0, 0).num(), &[0.5, 0.5]);
        assert_eq!(ws.entry(0, 0).den(), &[1.0, 0.005]);
        assert!((ws.entry(1, 1).num()[0] - 0.3333).abs() < 1e-4);
        assert!((ws.entry(1, 1).num()[1] - 0.1).abs() < 1e-15);
        assert!((ws.entry(1, 1).den()[1] - 0.002).abs() < 1e-15);
        assert_eq!(wt.entry(0, 0).num(), &[1.0, 10.0]);
        assert!((wt.entry(0, 0).den()[1] - 21.0).abs() < 1e-12);
        assert_eq!(wt.entry(1, 1).den(), &[0.01, 36.0]);
        assert!(ws.entry(0, 1).is_zero());
    }

    #[test]
    fn unit_weight() {
        let spec = WeightSpec { m_s: vec![1.0], a_s: vec![1.0], omega_b: vec![1.0], m_t: vec![1.0], a_t: vec![1.0], omega_bt: vec![1.0] };
        let (ws, _) = make_weights(&spec).unwrap();
        for w in [0.0, 1.0, 1e3] {
            assert!((ws.entry(0, 0).freq_response(w) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
        assert!(spec.validate(true).is_err());
    }

    #[test]
    fn dc_gain_is_inverse_a() {
        let (ws, _) = make_weights(&WeightSpec::paper_2r()).unwrap();
        assert!((ws.entry(0, 0).freq_response(0.0).norm() - 100.0).abs() < 1e-9);
        assert!((ws.entry(1, 1).freq_response(0.0).norm() - 50.0).abs() < 1e-9);
    }

    #[test]
    fn preset_weights_meet_conventions() {
        WeightSpec::paper_2r().validate(true).unwrap();
        let mut bad = WeightSpec::paper_2r();
        bad.omega_bt[0] = 1.0;
        assert!(bad.validate(true).is_err());
        bad.m_s.pop();
        assert!(make_weights(&bad).is_err());
    }
}
