use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Mat};

/// Continuous-time LTI realization `ẋ = Ax + Bu, y = Cx + Du`.
///
/// `n_x = 0` is allowed and represents a static gain.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    a: Mat,
    b: Mat,
    c: Mat,
    d: Mat,
}

/// Outcome of a Hurwitz test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stability {
    pub hurwitz: bool,
    /// Largest real part over the spectrum of `A` (`-inf` when `n_x = 0`).
    pub abscissa: f64,
}

impl StateSpace {
    pub fn new(a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("A is {}x{}, must be square", n, a.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!("C has {} columns, expected {n}", c.ncols())));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn static_gain(d: Mat) -> Self {
        let (ny, nu) = d.shape();
        Self {
            a: Mat::zeros(0, 0),
            b: Mat::zeros(0, nu),
            c: Mat::zeros(ny, 0),
            d,
        }
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }
    pub fn b(&self) -> &Mat {
        &self.b
    }
    pub fn c(&self) -> &Mat {
        &self.c
    }
    pub fn d(&self) -> &Mat {
        &self.d
    }

    pub fn nx(&self) -> usize {
        self.a.nrows()
    }
    pub fn nu(&self) -> usize {
        self.b.ncols()
    }
    pub fn ny(&self) -> usize {
        self.c.nrows()
    }

    pub fn into_parts(self) -> (Mat, Mat, Mat, Mat) {
        (self.a, self.b, self.c, self.d)
    }

    /// Transfer matrix `C(sI − A)⁻¹B + D` at an arbitrary complex point.
    pub fn eval(&self, s: Complex64) -> Result<CMat> {
        let n = self.nx();
        let d = linalg::to_complex(&self.d);
        if n == 0 {
            return Ok(d);
        }
        let mut m = linalg::to_complex(&self.a) * Complex64::new(-1.0, 0.0);
        for i in 0..n {
            m[(i, i)] += s;
        }
        let lu = m.lu();
        let x = lu
            .solve(&linalg::to_complex(&self.b))
            .filter(|x| x.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
            .ok_or(Error::PoleOnAxis { omega: s.im })?;
        Ok(linalg::to_complex(&self.c) * x + d)
    }

    /// Frequency response at `omega` rad/s.
    pub fn freq_response(&self, omega: f64) -> Result<CMat> {
        if !omega.is_finite() || omega < 0.0 {
            return Err(Error::InvalidArgument(format!("frequency must be finite and >= 0, got {omega}")));
        }
        self.eval(Complex64::new(0.0, omega))
    }

    pub fn dc_gain(&self) -> Result<Mat> {
        Ok(self.freq_response(0.0)?.map(|z| z.re))
    }

    pub fn is_hurwitz(&self) -> Result<Stability> {
        let abscissa = linalg::spectral_abscissa(&self.a)?;
        Ok(Stability { hurwitz: abscissa < 0.0, abscissa })
    }

    /// Restricts the system to the given output rows and input columns.
    pub fn subsystem(&self, outputs: &[usize], inputs: &[usize]) -> Self {
        let b = Mat::from_fn(self.nx(), inputs.len(), |i, j| self.b[(i, inputs[j])]);
        let c = Mat::from_fn(outputs.len(), self.nx(), |i, j| self.c[(outputs[i], j)]);
        let d = Mat::from_fn(outputs.len(), inputs.len(), |i, j| self.d[(outputs[i], inputs[j])]);
        Self { a: self.a.clone(), b, c, d }
    }

    /// Premultiplies the output map: `y' = L y`.
    pub fn scale_outputs(&self, l: &Mat) -> Result<Self> {
        if l.ncols() != self.ny() {
            return Err(Error::Dimension("output scaling width".into()));
        }
        Self::new(self.a.clone(), self.b.clone(), l * &self.c, l * &self.d)
    }

    /// Postmultiplies the input map: `u = R u'`.
    pub fn scale_inputs(&self, r: &Mat) -> Result<Self> {
        if r.nrows() != self.nu() {
            return Err(Error::Dimension("input scaling height".into()));
        }
        Self::new(self.a.clone(), &self.b * r, self.c.clone(), &self.d * r)
    }

    /// State-coordinate change `x = T x̃` given `T` diagonal.
    pub fn diag_similarity(&self, t: &[f64]) -> Self {
        let n = self.nx();
        let a = Mat::from_fn(n, n, |i, j| self.a[(i, j)] * t[j] / t[i]);
        let b = Mat::from_fn(n, self.nu(), |i, j| self.b[(i, j)] / t[i]);
        let c = Mat::from_fn(self.ny(), n, |i, j| self.c[(i, j)] * t[j]);
        Self { a, b, c, d: self.d.clone() }
    }

    /// Diagonal state scaling that balances `[[A, B], [C, 0]]`.
    ///
    /// The input/output map is unchanged; the realization becomes much
    /// better conditioned when states live on widely different scales.
    pub fn balanced(&self) -> Self {
        let n = self.nx();
        if n == 0 {
            return self.clone();
        }
        let mut t = vec![1.0; n];
        for _ in 0..60 {
            let mut changed = false;
            for i in 0..n {
                let mut col = 0.0;
                let mut row = 0.0;
                for k in 0..n {
                    if k != i {
                        col += (self.a[(k, i)] * t[i] / t[k]).abs();
                        row += (self.a[(i, k)] * t[k] / t[i]).abs();
                    }
                }
                for k in 0..self.ny() {
                    col += (self.c[(k, i)] * t[i]).abs();
                }
                for k in 0..self.nu() {
                    row += (self.b[(i, k)] / t[i]).abs();
                }
                if col > 0.0 && row > 0.0 {
                    let f = (row / col).sqrt();
                    if (f - 1.0).abs() > 1e-3 {
                        t[i] *= f;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        self.diag_similarity(&t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_order() -> StateSpace {
        StateSpace::new(
            Mat::from_element(1, 1, -1.0),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
            Mat::zeros(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let r = StateSpace::new(Mat::zeros(2, 2), Mat::zeros(1, 1), Mat::zeros(1, 2), Mat::zeros(1, 1));
        assert!(matches!(r, Err(Error::Dimension(_))));
        let r = StateSpace::new(Mat::zeros(2, 2), Mat::zeros(2, 1), Mat::zeros(1, 2), Mat::zeros(2, 1));
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn first_order_response() {
        let h = first_order().freq_response(1.0).unwrap()[(0, 0)];
        assert!((h.re - 0.5).abs() < 1e-14);
        assert!((h.im + 0.5).abs() < 1e-14);
        assert!((h.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5);
    }

    #[test]
    fn integrator_response_and_axis_pole() {
        let g = StateSpace::new(Mat::zeros(1, 1), Mat::from_element(1, 1, 1.0), Mat::from_element(1, 1, 1.0), Mat::zeros(1, 1))
            .unwrap();
        let h = g.freq_response(10.0).unwrap()[(0, 0)];
        assert!(h.re.abs() < 1e-15 && (h.im + 0.1).abs() < 1e-15);
        assert!(matches!(g.freq_response(0.0), Err(Error::PoleOnAxis { .. })));
        assert!(g.freq_response(-1.0).is_err());
    }

    #[test]
    fn hurwitz_examples() {
        let s = first_order().is_hurwitz().unwrap();
        assert!(s.hurwitz);
        assert!((s.abscissa + 1.0).abs() < 1e-12);
        let osc = StateSpace::new(
            Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
            Mat::zeros(2, 1),
            Mat::zeros(1, 2),
            Mat::zeros(1, 1),
        )
        .unwrap();
        let s = osc.is_hurwitz().unwrap();
        assert!(!s.hurwitz);
        assert!(s.abscissa.abs() < 1e-12);
        assert!(StateSpace::static_gain(Mat::identity(2, 2)).is_hurwitz().unwrap().hurwitz);
    }

    #[test]
    fn balancing_keeps_response() {
        let g = StateSpace::new(
            Mat::from_row_slice(2, 2, &[-1.0, 1e5, 0.0, -2.0]),
            Mat::from_row_slice(2, 1, &[0.0, 1e-3]),
            Mat::from_row_slice(1, 2, &[1e3, 0.0]),
            Mat::zeros(1, 1),
        )
        .unwrap();
        let b = g.balanced();
        for w in [0.1, 1.0, 10.0] {
            let e = (g.freq_response(w).unwrap() - b.freq_response(w).unwrap()).norm();
            assert!(e < 1e-9 * g.freq_response(w).unwrap().norm());
        }
    }
}
