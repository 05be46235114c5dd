//! Continuous-time algebraic Riccati equations.
//!
//! Solutions are read off the stable invariant subspace of the
//! Hamiltonian matrix, computed with an ordered complex Schur form.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, block2, max_abs, symmetrize, CMat, Mat};

/// `AᵀX + XA − (XB + S) R⁻¹ (BᵀX + Sᵀ) + Q = 0`
#[derive(Clone, Debug)]
pub struct CareProblem {
    pub a: Mat,
    pub b: Mat,
    pub q: Mat,
    pub r: Mat,
    pub s: Mat,
}

impl CareProblem {
    pub fn new(a: Mat, b: Mat, q: Mat, r: Mat, s: Option<Mat>) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
            return Err(Error::Dimension("CARE data have inconsistent sizes".into()));
        }
        let s = s.unwrap_or_else(|| Mat::zeros(n, m));
        if s.shape() != (n, m) {
            return Err(Error::Dimension("CARE cross term must be n x m".into()));
        }
        if max_abs(&(&q - q.transpose())) > 1e-12 * (1.0 + max_abs(&q)) {
            return Err(Error::InvalidArgument("Q is not symmetric".into()));
        }
        if max_abs(&(&r - r.transpose())) > 1e-12 * (1.0 + max_abs(&r)) || r.clone().cholesky().is_none() {
            return Err(Error::InvalidArgument("R is not symmetric positive-definite".into()));
        }
        Ok(Self { a, b, q, r, s })
    }

    pub fn residual(&self, x: &Mat) -> Mat {
        let rinv = linalg::inverse(&self.r, "R").expect("R validated");
        let xbs = x * &self.b + &self.s;
        self.a.transpose() * x + x * &self.a - &xbs * rinv * xbs.transpose() + &self.q
    }

    /// Closed-loop matrix `A − B R⁻¹ (BᵀX + Sᵀ)`.
    pub fn closed_loop(&self, x: &Mat) -> Mat {
        let rinv = linalg::inverse(&self.r, "R").expect("R validated");
        &self.a - &self.b * rinv * (self.b.transpose() * x + self.s.transpose())
    }
}

pub fn solve_care(p: &CareProblem) -> Result<Mat> {
    let rinv = linalg::inverse(&p.r, "R")?;
    let at = &p.a - &p.b * &rinv * p.s.transpose();
    let qt = &p.q - &p.s * &rinv * p.s.transpose();
    let g = &p.b * &rinv * p.b.transpose();
    let h = block2(&at, &(-g), &(-qt), &(-at.transpose()));
    let x = stabilizing_solution(&h)?;
    let acl = p.closed_loop(&x);
    let abscissa = linalg::spectral_abscissa(&acl)?;
    if abscissa >= 0.0 {
        return Err(Error::NoStabilizingSolution(format!("closed loop abscissa {abscissa}")));
    }
    Ok(x)
}

/// Stabilizing solution `X = U₂U₁⁻¹` of the Riccati equation associated
/// with a Hamiltonian `h` (2n × 2n), from its stable invariant subspace.
///
/// The subspace is computed from `h` as given and, when that fails or is
/// inaccurate, from a balanced copy; the candidate with the smaller
/// residual wins.
pub fn stabilizing_solution(h: &Mat) -> Result<Mat> {
    let n2 = h.nrows();
    if !n2.is_multiple_of(2) || h.ncols() != n2 {
        return Err(Error::Dimension("Hamiltonian must be 2n x 2n".into()));
    }
    let n = n2 / 2;
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::NoStabilizingSolution("non-finite Hamiltonian".into()));
    }
    let raw = subspace_solution(h, &vec![1.0; n2], h);
    if let Ok(x) = &raw {
        if residual(h, x) <= 1e-10 {
            return raw;
        }
    }
    let (d, hb) = linalg::balance(h);
    let bal = subspace_solution(h, &d, &hb);
    match (raw, bal) {
        (Ok(x), Ok(y)) => Ok(if residual(h, &y) < residual(h, &x) { y } else { x }),
        (Ok(x), Err(_)) | (Err(_), Ok(x)) => Ok(x),
        (Err(e), Err(_)) => Err(e),
    }
}

/// Relative residual of `H [I; X] = [I; X] (H₁₁ + H₁₂X)`.
fn residual(h: &Mat, x: &Mat) -> f64 {
    let n = x.nrows();
    let h11 = h.view((0, 0), (n, n));
    let h12 = h.view((0, n), (n, n));
    let h21 = h.view((n, 0), (n, n));
    let h22 = h.view((n, n), (n, n));
    let r = h21 + h22 * x - x * h11 - x * h12 * x;
    let scale = h.norm() * (1.0 + x.norm()).powi(2);
    r.norm() / scale.max(f64::MIN_POSITIVE)
}

/// Solution from the stable subspace of `hb = D⁻¹ h D`, `D = diag(d)`.
fn subspace_solution(h: &Mat, d: &[f64], hb: &Mat) -> Result<Mat> {
    let n2 = h.nrows();
    let n = n2 / 2;
    let hnorm = hb.norm().max(f64::MIN_POSITIVE);
    let (q, t, k) = linalg::ordered_schur(&linalg::to_complex(hb), |l| l.re < 0.0)?;
    // Axis contact: real part within 1e-8 of the eigenvalue's size, or at
    // the rounding level of the (balanced) Hamiltonian.
    let axis = |l: Complex64| l.re.abs() <= 1e-8 * l.norm().max(1e-8) + 1e3 * f64::EPSILON * hnorm;
    if (0..n2).any(|i| axis(t[(i, i)])) {
        return Err(Error::NoStabilizingSolution("Hamiltonian has eigenvalues on the imaginary axis".into()));
    }
    if k != n {
        return Err(Error::NoStabilizingSolution(format!("{k} stable eigenvalues, expected {n}")));
    }
    // Undo the balancing on the basis before splitting it.
    let mut u = q.columns(0, n).into_owned();
    for i in 0..n2 {
        for j in 0..n {
            u[(i, j)] *= Complex64::new(d[i], 0.0);
        }
    }
    let u1 = u.rows(0, n).into_owned();
    let u2 = u.rows(n, n).into_owned();
    // X = U2 U1⁻¹  ⇔  U1ᵀ Xᵀ = U2ᵀ
    let u1_cond = u1.clone().svd(false, false);
    let smax = u1_cond.singular_values.max();
    let smin = u1_cond.singular_values.min();
    if !(smin > 1e-13 * smax) {
        return Err(Error::NoStabilizingSolution("stable subspace is not a graph (U1 singular)".into()));
    }
    let xt: CMat = u1
        .transpose()
        .lu()
        .solve(&u2.transpose())
        .ok_or_else(|| Error::NoStabilizingSolution("U1 singular".into()))?;
    let x = xt.transpose();
    let re = x.map(|z| z.re);
    let im = x.map(|z| z.im);
    if max_abs(&im) > 1e-6 * (1.0 + max_abs(&re)) {
        return Err(Error::NoStabilizingSolution("solution is not real".into()));
    }
    Ok(symmetrize(&re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eye;

    fn m(r: usize, c: usize, v: &[f64]) -> Mat {
        Mat::from_row_slice(r, c, v)
    }

    #[test]
    fn scalar_care() {
        let p = CareProblem::new(m(1, 1, &[-1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), None).unwrap();
        let x = solve_care(&p).unwrap();
        assert!((x[(0, 0)] - (2f64.sqrt() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn double_integrator_care() {
        let p = CareProblem::new(m(2, 2, &[0.0, 1.0, 0.0, 0.0]), m(2, 1, &[0.0, 1.0]), eye(2), m(1, 1, &[1.0]), None)
            .unwrap();
        let x = solve_care(&p).unwrap();
        let s3 = 3f64.sqrt();
        let expect = m(2, 2, &[s3, 1.0, 1.0, s3]);
        assert!(max_abs(&(x - expect)) < 1e-8);
    }

    #[test]
    fn hurwitz_with_zero_cost_gives_zero() {
        let p = CareProblem::new(
            m(2, 2, &[-1.0, 2.0, 0.0, -3.0]),
            m(2, 1, &[0.0, 1.0]),
            Mat::zeros(2, 2),
            m(1, 1, &[1.0]),
            None,
        )
        .unwrap();
        let x = solve_care(&p).unwrap();
        assert!(max_abs(&x) < 1e-12);
    }

    #[test]
    fn cross_term_is_honored() {
        let p = CareProblem::new(
            m(2, 2, &[0.0, 1.0, -2.0, -0.3]),
            m(2, 1, &[0.0, 1.0]),
            m(2, 2, &[2.0, 0.1, 0.1, 1.0]),
            m(1, 1, &[0.5]),
            Some(m(2, 1, &[0.2, -0.1])),
        )
        .unwrap();
        let x = solve_care(&p).unwrap();
        assert!(max_abs(&p.residual(&x)) < 1e-8 * (1.0 + max_abs(&x)));
        assert!(linalg::spectral_abscissa(&p.closed_loop(&x)).unwrap() < 0.0);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(CareProblem::new(eye(1), eye(1), eye(1), m(1, 1, &[-1.0]), None).is_err());
        assert!(CareProblem::new(eye(2), m(2, 1, &[1.0, 0.0]), m(2, 2, &[1.0, 2.0, 0.0, 1.0]), eye(1), None).is_err());
    }

    #[test]
    fn axis_eigenvalues_reported() {
        // Uncontrollable, unobservable oscillator: Hamiltonian has jω eigenvalues.
        let p = CareProblem::new(
            m(2, 2, &[0.0, 1.0, -1.0, 0.0]),
            m(2, 1, &[0.0, 0.0]),
            Mat::zeros(2, 2),
            eye(1),
            None,
        )
        .unwrap();
        assert!(matches!(solve_care(&p), Err(Error::NoStabilizingSolution(_))));
    }
}
