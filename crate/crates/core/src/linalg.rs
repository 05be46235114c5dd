//! Dense linear-algebra helpers shared by the control modules.
//!
//! Everything here works on `nalgebra` dynamic matrices. The ordered
//! complex Schur form is the workhorse behind the Riccati solvers; the
//! remaining helpers are block assembly, balancing and small
//! spectral utilities.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

pub const J: Complex64 = Complex64::new(0.0, 1.0);

pub fn zeros(r: usize, c: usize) -> Mat {
    Mat::zeros(r, c)
}

pub fn eye(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Horizontal concatenation. All blocks must share the row count.
pub fn hcat(blocks: &[&Mat]) -> Mat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hcat row mismatch");
        out.view_mut((0, c0), (rows, b.ncols())).copy_from(*b);
        c0 += b.ncols();
    }
    out
}

/// Vertical concatenation. All blocks must share the column count.
pub fn vcat(blocks: &[&Mat]) -> Mat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vcat column mismatch");
        out.view_mut((r0, 0), (b.nrows(), cols)).copy_from(*b);
        r0 += b.nrows();
    }
    out
}

/// 2x2 block matrix `[[a, b], [c, d]]`.
pub fn block2(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Mat {
    vcat(&[&hcat(&[a, b]), &hcat(&[c, d])])
}

pub fn block_diag(blocks: &[&Mat]) -> Mat {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(*b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

pub fn sub(m: &Mat, r0: usize, c0: usize, nr: usize, nc: usize) -> Mat {
    m.view((r0, c0), (nr, nc)).into_owned()
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Diagonal similarity balancing (Parlett–Reinsch, powers of two).
///
/// Returns `(d, balanced)` with `balanced = D⁻¹ A D`, `D = diag(d)`.
pub fn balance(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut d = vec![1.0; n];
    const RADIX: f64 = 2.0;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let g = r / RADIX;
            while cc < g {
                f *= RADIX;
                cc *= RADIX * RADIX;
            }
            let g = r * RADIX;
            while cc > g {
                f /= RADIX;
                cc /= RADIX * RADIX;
            }
            if (cc + r / f) < 0.95 * s * f && f.is_finite() && f > 0.0 {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
    (d, m)
}

/// Schur decomposition, retried with a slightly looser deflation
/// threshold when the QR sweep stalls at machine precision.
fn schur<T: nalgebra::ComplexField<RealField = f64>>(a: DMatrix<T>) -> Result<Schur<T, nalgebra::Dyn>> {
    for eps in [f64::EPSILON, 4.0 * f64::EPSILON, 32.0 * f64::EPSILON, 256.0 * f64::EPSILON] {
        if let Some(s) = Schur::try_new(a.clone(), eps, 10_000) {
            return Ok(s);
        }
    }
    Err(Error::NoConvergence)
}

/// Eigenvalues of a real square matrix (balanced real Schur).
pub fn eigenvalues(a: &Mat) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension("eigenvalues of non-square matrix".into()));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let (_, bal) = balance(a);
    let schur = schur(bal)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest real part of the spectrum; `-inf` for an empty matrix.
pub fn spectral_abscissa(a: &Mat) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn sigma_max(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |a, &b| a.max(b))
}

pub fn sigma_max_real(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |a, &b| a.max(b))
}

pub fn sigma_min_real(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

pub fn inverse(m: &Mat, what: &str) -> Result<Mat> {
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    m.clone()
        .try_inverse()
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular(what.to_string()))
}

pub fn cinverse(m: &CMat, what: &str) -> Result<CMat> {
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    m.clone()
        .try_inverse()
        .filter(|x| x.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
        .ok_or_else(|| Error::Singular(what.to_string()))
}

/// Complex Schur form `A = Q T Qᴴ` reordered so that the eigenvalues for
/// which `select` holds occupy the leading diagonal positions.
///
/// Returns `(Q, T, k)` with `k` the number of selected eigenvalues.
pub fn ordered_schur(a: &CMat, select: impl Fn(Complex64) -> bool) -> Result<(CMat, CMat, usize)> {
    let n = a.nrows();
    let schur = schur(a.clone())?;
    let (mut q, mut t) = schur.unpack();
    for i in 1..n {
        for j in 0..i {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    // Bubble selected eigenvalues to the front with adjacent swaps.
    let mut k = 0;
    for i in 0..n {
        if select(t[(i, i)]) {
            let mut pos = i;
            while pos > k {
                swap_adjacent(&mut t, &mut q, pos - 1);
                pos -= 1;
            }
            k += 1;
        }
    }
    Ok((q, t, k))
}

/// Swaps diagonal entries `k` and `k+1` of an upper-triangular `t` by a
/// unitary similarity, accumulating the rotation into `q`.
fn swap_adjacent(t: &mut CMat, q: &mut CMat, k: usize) {
    let n = t.nrows();
    let a = t[(k, k)];
    let b = t[(k + 1, k + 1)];
    let c = t[(k, k + 1)];
    // Eigenvector of [[a, c], [0, b]] for eigenvalue b.
    let v1 = c;
    let v2 = b - a;
    let nrm = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
    if nrm == 0.0 {
        return;
    }
    let (g11, g21) = (v1 / nrm, v2 / nrm);
    let (g12, g22) = (-g21.conj(), g11.conj());
    // t <- Gᴴ t on rows k, k+1
    for j in 0..n {
        let x = t[(k, j)];
        let y = t[(k + 1, j)];
        t[(k, j)] = g11.conj() * x + g21.conj() * y;
        t[(k + 1, j)] = g12.conj() * x + g22.conj() * y;
    }
    // t <- t G and q <- q G on columns k, k+1
    for i in 0..n {
        let x = t[(i, k)];
        let y = t[(i, k + 1)];
        t[(i, k)] = x * g11 + y * g21;
        t[(i, k + 1)] = x * g12 + y * g22;
        let x = q[(i, k)];
        let y = q[(i, k + 1)];
        q[(i, k)] = x * g11 + y * g21;
        q[(i, k + 1)] = x * g12 + y * g22;
    }
    t[(k + 1, k)] = Complex64::new(0.0, 0.0);
    t[(k, k)] = b;
    t[(k + 1, k + 1)] = a;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_schur_moves_stable_block_first() {
        let a = Mat::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, -1.0, 3.0, 1.0, 0.0, -4.0]);
        let ac = to_complex(&a);
        let (q, t, k) = ordered_schur(&ac, |l| l.re < 0.0).unwrap();
        let eig = eigenvalues(&a).unwrap();
        assert_eq!(k, eig.iter().filter(|l| l.re < 0.0).count());
        for i in 0..k {
            assert!(t[(i, i)].re < 0.0);
        }
        for i in k..3 {
            assert!(t[(i, i)].re >= 0.0);
        }
        let recon = &q * &t * q.adjoint();
        assert!((recon - ac).norm() < 1e-10);
    }

    #[test]
    fn balance_preserves_spectrum() {
        let a = Mat::from_row_slice(3, 3, &[1.0, 1e6, 0.0, 1e-6, 2.0, 1e4, 0.0, 1e-4, 3.0]);
        let (d, b) = balance(&a);
        let dm = Mat::from_diagonal(&nalgebra::DVector::from_vec(d.clone()));
        let back = &dm * &b * inverse(&dm, "d").unwrap();
        assert!((back - &a).norm() / a.norm() < 1e-12);
    }

    #[test]
    fn block_helpers() {
        let a = eye(2);
        let b = zeros(2, 1);
        let m = block2(&a, &b, &b.transpose(), &Mat::from_element(1, 1, 5.0));
        assert_eq!(m.shape(), (3, 3));
        assert_eq!(m[(2, 2)], 5.0);
        assert_eq!(block_diag(&[&a, &Mat::from_element(1, 1, 3.0)])[(2, 2)], 3.0);
    }
}
