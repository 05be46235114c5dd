use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::StateSpace;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Mat};

/// SISO rational transfer function, coefficients in descending powers of `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTF", into = "RawTF")]
pub struct RationalTF {
    num: Vec<f64>,
    den: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTF {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TryFrom<RawTF> for RationalTF {
    type Error = Error;
    fn try_from(r: RawTF) -> Result<Self> {
        RationalTF::new(r.num, r.den)
    }
}

impl From<RationalTF> for RawTF {
    fn from(t: RationalTF) -> Self {
        RawTF { num: t.num, den: t.den }
    }
}

fn strip_leading_zeros(mut v: Vec<f64>) -> Vec<f64> {
    while v.len() > 1 && v[0] == 0.0 {
        v.remove(0);
    }
    v
}

impl RationalTF {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(Error::InvalidArgument("empty coefficient list".into()));
        }
        if num.iter().chain(den.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        let num = strip_leading_zeros(num);
        if den[0] == 0.0 {
            return Err(Error::InvalidArgument("denominator leading coefficient is zero".into()));
        }
        if num.len() > den.len() && !(num.len() == 1 && num[0] == 0.0) {
            return Err(Error::Improper { num: num.len() - 1, den: den.len() - 1 });
        }
        Ok(Self { num, den })
    }

    pub fn constant(k: f64) -> Self {
        Self { num: vec![k], den: vec![1.0] }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(|&x| x == 0.0)
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        horner(&self.num, s) / horner(&self.den, s)
    }

    pub fn freq_response(&self, omega: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, omega))
    }

    /// Controllable canonical realization.
    pub fn to_ss(&self) -> StateSpace {
        let n = self.degree();
        let lead = self.den[0];
        let a_coef: Vec<f64> = self.den.iter().map(|x| x / lead).collect();
        let mut b_coef = vec![0.0; n + 1 - self.num.len()];
        b_coef.extend(self.num.iter().map(|x| x / lead));
        let d = b_coef[0];
        if n == 0 {
            return StateSpace::static_gain(Mat::from_element(1, 1, d));
        }
        let mut a = Mat::zeros(n, n);
        for j in 0..n {
            a[(0, j)] = -a_coef[j + 1];
        }
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        let mut b = Mat::zeros(n, 1);
        b[(0, 0)] = 1.0;
        let c = Mat::from_fn(1, n, |_, j| b_coef[j + 1] - d * a_coef[j + 1]);
        StateSpace::new(a, b, c, Mat::from_element(1, 1, d)).expect("canonical realization is consistent")
    }

    /// Roots of the denominator.
    pub fn poles(&self) -> Vec<Complex64> {
        poly_roots(&self.den)
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        poly_roots(&self.num)
    }
}

pub(crate) fn horner(c: &[f64], s: Complex64) -> Complex64 {
    c.iter().fold(Complex64::new(0.0, 0.0), |acc, &x| acc * s + x)
}

/// Polynomial roots through the companion matrix.
pub fn poly_roots(c: &[f64]) -> Vec<Complex64> {
    let c = strip_leading_zeros(c.to_vec());
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let mut m = Mat::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    linalg::eigenvalues(&m).unwrap_or_default()
}

/// Monic polynomial with the given roots (conjugate pairs assumed closed).
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut p = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut q = vec![Complex64::new(0.0, 0.0); p.len() + 1];
        for (i, &c) in p.iter().enumerate() {
            q[i] += c;
            q[i + 1] -= c * r;
        }
        p = q;
    }
    p.iter().map(|z| z.re).collect()
}

/// Rectangular grid of SISO transfer functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TFMatrix {
    entries: Vec<Vec<RationalTF>>,
}

impl TFMatrix {
    pub fn new(entries: Vec<Vec<RationalTF>>) -> Result<Self> {
        let cols = entries.first().map_or(0, |r| r.len());
        if entries.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged transfer matrix".into()));
        }
        Ok(Self { entries })
    }

    pub fn diagonal(diag: Vec<RationalTF>) -> Self {
        let n = diag.len();
        let mut entries = vec![vec![RationalTF::constant(0.0); n]; n];
        for (i, g) in diag.into_iter().enumerate() {
            entries[i][i] = g;
        }
        Self { entries }
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries.first().map_or(0, |r| r.len())
    }

    pub fn entry(&self, i: usize, j: usize) -> &RationalTF {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<RationalTF>] {
        &self.entries
    }

    pub fn eval(&self, s: Complex64) -> CMat {
        CMat::from_fn(self.rows(), self.cols(), |i, j| self.entries[i][j].eval(s))
    }

    pub fn freq_response(&self, omega: f64) -> CMat {
        self.eval(Complex64::new(0.0, omega))
    }

    /// Realization assembled entry by entry (not minimal).
    pub fn to_ss(&self) -> StateSpace {
        let (ny, nu) = (self.rows(), self.cols());
        let parts: Vec<(usize, usize, StateSpace)> = (0..ny)
            .flat_map(|i| (0..nu).map(move |j| (i, j)))
            .filter(|&(i, j)| !self.entries[i][j].is_zero())
            .map(|(i, j)| (i, j, self.entries[i][j].to_ss()))
            .collect();
        let n: usize = parts.iter().map(|p| p.2.nx()).sum();
        let mut a = Mat::zeros(n, n);
        let mut b = Mat::zeros(n, nu);
        let mut c = Mat::zeros(ny, n);
        let mut d = Mat::zeros(ny, nu);
        let mut o = 0;
        for (i, j, g) in &parts {
            let k = g.nx();
            a.view_mut((o, o), (k, k)).copy_from(g.a());
            b.view_mut((o, *j), (k, 1)).copy_from(g.b());
            c.view_mut((*i, o), (1, k)).copy_from(g.c());
            d[(*i, *j)] = g.d()[(0, 0)];
            o += k;
        }
        StateSpace::new(a, b, c, d).expect("assembled realization is consistent")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_canonical_form() {
        let g = RationalTF::new(vec![1.0], vec![1.0, 1.0]).unwrap().to_ss();
        assert_eq!(g.a()[(0, 0)], -1.0);
        assert_eq!(g.b()[(0, 0)], 1.0);
        assert_eq!(g.c()[(0, 0)], 1.0);
        assert_eq!(g.d()[(0, 0)], 0.0);
    }

    #[test]
    fn weight_entry_realization() {
        let g = RationalTF::new(vec![0.5, 0.5], vec![1.0, 0.005]).unwrap().to_ss();
        assert!((g.a()[(0, 0)] + 0.005).abs() < 1e-15);
        assert_eq!(g.b()[(0, 0)], 1.0);
        assert!((g.c()[(0, 0)] - 0.4975).abs() < 1e-15);
        assert!((g.d()[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn static_gain_has_no_states() {
        let g = RationalTF::constant(2.0).to_ss();
        assert_eq!(g.nx(), 0);
        assert_eq!(g.d()[(0, 0)], 2.0);
    }

    #[test]
    fn improper_rejected() {
        let r = RationalTF::new(vec![1.0, 0.0, 0.0], vec![1.0, 1.0]);
        assert_eq!(r, Err(Error::Improper { num: 2, den: 1 }));
        assert!(RationalTF::new(vec![1.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn realization_matches_tf_on_higher_order() {
        let g = RationalTF::new(vec![1.07e5, 1.392e5, 44157.0], vec![0.02, 4.0, 200.0, 1.0]).unwrap();
        let ss = g.to_ss();
        for w in [1e-3, 0.1, 1.0, 37.0, 1e3] {
            let a = g.freq_response(w);
            let b = ss.freq_response(w).unwrap()[(0, 0)];
            assert!((a - b).norm() <= 1e-10 * a.norm(), "w={w}");
        }
    }

    #[test]
    fn leading_zero_numerators_are_stripped() {
        let g = RationalTF::new(vec![0.0, 0.0, 3.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(g.num(), &[3.0]);
    }

    #[test]
    fn roots_round_trip() {
        let p = poly_from_roots(&[Complex64::new(-1.0, 2.0), Complex64::new(-1.0, -2.0), Complex64::new(-3.0, 0.0)]);
        let mut r = poly_roots(&p);
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        assert!((r[0] - Complex64::new(-3.0, 0.0)).norm() < 1e-10);
        assert!((r[1] - Complex64::new(-1.0, -2.0)).norm() < 1e-10);
    }

    #[test]
    fn matrix_realization_matches_entries() {
        let k = TFMatrix::new(vec![
            vec![RationalTF::new(vec![1.0], vec![1.0, 1.0]).unwrap(), RationalTF::constant(2.0)],
            vec![RationalTF::constant(0.0), RationalTF::new(vec![1.0, 3.0], vec![1.0, 2.0, 5.0]).unwrap()],
        ])
        .unwrap();
        let ss = k.to_ss();
        assert_eq!(ss.nx(), 3);
        for w in [0.0, 0.7, 4.0] {
            let e = (ss.freq_response(w).unwrap() - k.freq_response(w)).norm();
            assert!(e < 1e-12);
        }
    }
}
