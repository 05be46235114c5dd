use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing list of positive frequencies in rad/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("frequency grid is empty".into()));
        }
        if points.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument("frequency grid points must be finite and > 0".into()));
        }
        if points.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidArgument("frequency grid must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `n` logarithmically spaced points on `[lo, hi]`.
    pub fn logspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || n < 2 {
            return Err(Error::InvalidArgument(format!("bad log grid [{lo}, {hi}] with {n} points")));
        }
        let (l0, l1) = (lo.log10(), hi.log10());
        Self::new(
            (0..n)
                .map(|i| 10f64.powf(l0 + (l1 - l0) * i as f64 / (n - 1) as f64))
                .collect(),
        )
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        *self.points.last().unwrap()
    }
}

impl Default for FrequencyGrid {
    /// 200 points, 1e-3 to 1e4 rad/s.
    fn default() -> Self {
        Self::logspace(1e-3, 1e4, 200).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = FrequencyGrid::default();
        assert_eq!(g.len(), 200);
        assert!((g.first() - 1e-3).abs() < 1e-15);
        assert!((g.last() - 1e4).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_points() {
        assert!(FrequencyGrid::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![0.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![]).is_err());
    }
}
