use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bounds::{IntervalMatrixBounds, Which};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::lti::StateSpace;

/// Largest interval count enumerated exhaustively.
pub const MAX_FULL_VERTEX_INTERVALS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexMode {
    Full,
    Sampled { k: usize, seed: u64 },
}

/// Polytopic family `ẋ = A_i x + B_i u`, `y = C x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pldi {
    pub vertices: Vec<(Mat, Mat)>,
    pub c: Mat,
    /// Sign pattern of each vertex (`true` = upper endpoint), one flag per
    /// non-degenerate interval.
    pub patterns: Vec<Vec<bool>>,
}

impl Pldi {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex_system(&self, i: usize) -> StateSpace {
        let (a, b) = &self.vertices[i];
        let d = Mat::zeros(self.c.nrows(), b.ncols());
        StateSpace::new(a.clone(), b.clone(), self.c.clone(), d).expect("vertex shapes are consistent")
    }
}

/// Position output `C = [I_m 0]` for a state `(q, q̇)` of size `2m`.
pub fn position_output(nx: usize) -> Mat {
    let m = nx / 2;
    Mat::from_fn(m, nx, |i, j| if i == j { 1.0 } else { 0.0 })
}

/// Vertex pair for one sign pattern.
pub fn vertex_at(bounds: &IntervalMatrixBounds, pattern: &[bool]) -> Result<(Mat, Mat)> {
    let entries = bounds.uncertain_entries();
    if pattern.len() != entries.len() {
        return Err(Error::Dimension(format!("{} signs for {} intervals", pattern.len(), entries.len())));
    }
    let mut a = bounds.a_lo.clone();
    let mut b = bounds.b_lo.clone();
    for (e, &up) in entries.iter().zip(pattern) {
        let v = if up { e.hi } else { e.lo };
        match e.which {
            Which::A => a[(e.row, e.col)] = v,
            Which::B => b[(e.row, e.col)] = v,
        }
    }
    Ok((a, b))
}

/// Vertex systems of the interval family.
///
/// In full mode vertex `i` takes the upper endpoint of interval `j` iff
/// bit `j` of `i` is set.
pub fn build_pldi(bounds: &IntervalMatrixBounds, mode: VertexMode) -> Result<Pldi> {
    let n = bounds.uncertain_entries().len();
    let patterns: Vec<Vec<bool>> = match mode {
        VertexMode::Full => {
            if n > MAX_FULL_VERTEX_INTERVALS {
                return Err(Error::InvalidArgument(format!(
                    "{n} uncertain entries give 2^{n} vertices; use sampled mode"
                )));
            }
            (0..1usize << n).map(|i| (0..n).map(|j| (i >> j) & 1 == 1).collect()).collect()
        }
        VertexMode::Sampled { k, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..k).map(|_| (0..n).map(|_| rng.gen::<bool>()).collect()).collect()
        }
    };
    let vertices = patterns.iter().map(|p| vertex_at(bounds, p)).collect::<Result<Vec<_>>>()?;
    Ok(Pldi { vertices, c: position_output(bounds.nx()), patterns })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_interval() -> IntervalMatrixBounds {
        let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let mut a_hi = a.clone();
        a_hi[(1, 0)] = 2.0;
        IntervalMatrixBounds::new(a, a_hi, Mat::from_row_slice(2, 1, &[0.0, 1.0]), Mat::from_row_slice(2, 1, &[0.0, 1.0]))
            .unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(build_pldi(&one_interval(), VertexMode::Full).unwrap().len(), 2);
        let b = IntervalMatrixBounds::paper_2r();
        let p = build_pldi(&b, VertexMode::Full).unwrap();
        assert_eq!(p.len(), 1024);
        assert_eq!(p.c, Mat::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn degenerate_bounds_give_nominal() {
        let a = Mat::identity(2, 2);
        let b = Mat::zeros(2, 1);
        let bounds = IntervalMatrixBounds::new(a.clone(), a.clone(), b.clone(), b.clone()).unwrap();
        let p = build_pldi(&bounds, VertexMode::Full).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.vertices[0].0, a);
    }

    #[test]
    fn vertices_are_endpoints() {
        let b = IntervalMatrixBounds::paper_2r();
        let p = build_pldi(&b, VertexMode::Sampled { k: 5, seed: 3 }).unwrap();
        for (a, bb) in &p.vertices {
            for e in b.uncertain_entries() {
                let v = if e.which == Which::A { a[(e.row, e.col)] } else { bb[(e.row, e.col)] };
                assert!(v == e.lo || v == e.hi);
            }
        }
        assert_eq!(p, build_pldi(&b, VertexMode::Sampled { k: 5, seed: 3 }).unwrap());
    }

    #[test]
    fn guard_on_interval_count() {
        let n = 6;
        let lo = Mat::zeros(n, n);
        let hi = Mat::from_element(n, n, 1.0);
        let b = IntervalMatrixBounds::new(lo, hi, Mat::zeros(n, 1), Mat::zeros(n, 1)).unwrap();
        assert!(build_pldi(&b, VertexMode::Full).is_err());
        assert_eq!(build_pldi(&b, VertexMode::Sampled { k: 4, seed: 0 }).unwrap().len(), 4);
    }
}
