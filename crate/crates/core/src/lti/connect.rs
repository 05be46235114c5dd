//! Series, parallel, feedback and linear-fractional interconnections.

use crate::error::{Error, Result};
use crate::linalg::{self, block2, block_diag, eye, hcat, sub, vcat, CMat, Mat};

use super::StateSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connection {
    /// `u → g1 → g2 → y`
    Series,
    /// `y = g1 u + g2 u`
    Parallel,
    /// Negative feedback `y = g1 (u − g2 y)`.
    Feedback,
}

pub fn interconnect(kind: Connection, g1: &StateSpace, g2: &StateSpace) -> Result<StateSpace> {
    match kind {
        Connection::Series => series(g1, g2),
        Connection::Parallel => parallel(g1, g2),
        Connection::Feedback => feedback(g1, g2),
    }
}

/// `g2 ∘ g1`: the output of `g1` drives `g2`.
pub fn series(g1: &StateSpace, g2: &StateSpace) -> Result<StateSpace> {
    if g1.ny() != g2.nu() {
        return Err(Error::Dimension(format!("series: g1 has {} outputs, g2 has {} inputs", g1.ny(), g2.nu())));
    }
    let (n1, n2) = (g1.nx(), g2.nx());
    let a = block2(g1.a(), &Mat::zeros(n1, n2), &(g2.b() * g1.c()), g2.a());
    let b = vcat(&[g1.b(), &(g2.b() * g1.d())]);
    let c = hcat(&[&(g2.d() * g1.c()), g2.c()]);
    StateSpace::new(a, b, c, g2.d() * g1.d())
}

pub fn parallel(g1: &StateSpace, g2: &StateSpace) -> Result<StateSpace> {
    if g1.nu() != g2.nu() || g1.ny() != g2.ny() {
        return Err(Error::Dimension("parallel: systems must share input and output counts".into()));
    }
    StateSpace::new(
        block_diag(&[g1.a(), g2.a()]),
        vcat(&[g1.b(), g2.b()]),
        hcat(&[g1.c(), g2.c()]),
        g1.d() + g2.d(),
    )
}

pub fn feedback(g1: &StateSpace, g2: &StateSpace) -> Result<StateSpace> {
    if g2.nu() != g1.ny() || g2.ny() != g1.nu() {
        return Err(Error::Dimension("feedback: g2 must map g1's outputs to g1's inputs".into()));
    }
    let f = linalg::inverse(&(eye(g1.nu()) + g2.d() * g1.d()), "I + D2 D1")
        .map_err(|_| Error::IllPosed("algebraic loop: I + D2 D1 singular".into()))?;
    let (a1, b1, c1, d1) = (g1.a(), g1.b(), g1.c(), g1.d());
    let (a2, b2, c2, d2) = (g2.a(), g2.b(), g2.c(), g2.d());
    let fd2c1 = &f * d2 * c1;
    let fc2 = &f * c2;
    let a = block2(
        &(a1 - b1 * &fd2c1),
        &(-(b1 * &fc2)),
        &(b2 * (c1 - d1 * &fd2c1)),
        &(a2 - b2 * d1 * &fc2),
    );
    let b = vcat(&[&(b1 * &f), &(b2 * d1 * &f)]);
    let c = hcat(&[&(c1 - d1 * &fd2c1), &(-(d1 * &fc2))]);
    StateSpace::new(a, b, c, d1 * &f)
}

pub fn blkdiag(systems: &[&StateSpace]) -> StateSpace {
    let a: Vec<&Mat> = systems.iter().map(|g| g.a()).collect();
    let b: Vec<&Mat> = systems.iter().map(|g| g.b()).collect();
    let c: Vec<&Mat> = systems.iter().map(|g| g.c()).collect();
    let d: Vec<&Mat> = systems.iter().map(|g| g.d()).collect();
    StateSpace::new(block_diag(&a), block_diag(&b), block_diag(&c), block_diag(&d))
        .expect("block-diagonal realization is consistent")
}

/// Lower LFT: closes `u = K y` over the last `n_ctrl` inputs and last
/// `n_meas` outputs of `p`.
pub fn lft_lower(p: &StateSpace, k: &StateSpace, n_meas: usize, n_ctrl: usize) -> Result<StateSpace> {
    if n_meas > p.ny() || n_ctrl > p.nu() {
        return Err(Error::Dimension("lft_lower: channel counts exceed plant size".into()));
    }
    if k.nu() != n_meas || k.ny() != n_ctrl {
        return Err(Error::Dimension(format!(
            "lft_lower: controller is {}x{}, expected {}x{}",
            k.ny(),
            k.nu(),
            n_ctrl,
            n_meas
        )));
    }
    let n = p.nx();
    let nw = p.nu() - n_ctrl;
    let nz = p.ny() - n_meas;
    let b1 = sub(p.b(), 0, 0, n, nw);
    let b2 = sub(p.b(), 0, nw, n, n_ctrl);
    let c1 = sub(p.c(), 0, 0, nz, n);
    let c2 = sub(p.c(), nz, 0, n_meas, n);
    let d11 = sub(p.d(), 0, 0, nz, nw);
    let d12 = sub(p.d(), 0, nw, nz, n_ctrl);
    let d21 = sub(p.d(), nz, 0, n_meas, nw);
    let d22 = sub(p.d(), nz, nw, n_meas, n_ctrl);
    let (ak, bk, ck, dk) = (k.a(), k.b(), k.c(), k.d());

    let r = linalg::inverse(&(eye(n_meas) - &d22 * dk), "I - D22 Dk")
        .map_err(|_| Error::IllPosed("I - D22 Dk is singular".into()))?;
    let s = linalg::inverse(&(eye(n_ctrl) - dk * &d22), "I - Dk D22")
        .map_err(|_| Error::IllPosed("I - Dk D22 is singular".into()))?;

    let sdk = &s * dk;
    let a = block2(
        &(p.a() + &b2 * &sdk * &c2),
        &(&b2 * &s * ck),
        &(bk * &r * &c2),
        &(ak + bk * &r * &d22 * ck),
    );
    let b = vcat(&[&(&b1 + &b2 * &sdk * &d21), &(bk * &r * &d21)]);
    let c = hcat(&[&(&c1 + &d12 * &sdk * &c2), &(&d12 * &s * ck)]);
    let d = &d11 + &d12 * &sdk * &d21;
    StateSpace::new(a, b, c, d)
}

/// Upper LFT at one frequency: closes `d = Δ v` over the first
/// `Δ.ncols()` outputs and first `Δ.nrows()` inputs of `m = P(jω)`.
///
/// A singular `I − M11 Δ` is reported as [`Error::IllPosed`], which is
/// exactly the destabilizing condition the structured singular value
/// measures.
pub fn lft_upper(m: &CMat, delta: &CMat) -> Result<CMat> {
    let nd = delta.nrows();
    let nv = delta.ncols();
    if nv > m.nrows() || nd > m.ncols() {
        return Err(Error::Dimension("lft_upper: uncertainty larger than system".into()));
    }
    let (ny, nu) = (m.nrows() - nv, m.ncols() - nd);
    let m11 = m.view((0, 0), (nv, nd)).into_owned();
    let m12 = m.view((0, nd), (nv, nu)).into_owned();
    let m21 = m.view((nv, 0), (ny, nd)).into_owned();
    let m22 = m.view((nv, nd), (ny, nu)).into_owned();
    let i_m = CMat::identity(nv, nv) - &m11 * delta;
    let lu = i_m.clone().lu();
    let det = lu.determinant();
    let scale = i_m.norm().max(1.0);
    if det.norm() <= 1e-12 * scale.powi(nv as i32) {
        return Err(Error::IllPosed("det(I - M11 Δ) = 0: Δ destabilizes the loop".into()));
    }
    let x = lu
        .solve(&m12)
        .ok_or_else(|| Error::IllPosed("det(I - M11 Δ) = 0: Δ destabilizes the loop".into()))?;
    Ok(m22 + m21 * delta * x)
}

/// Upper LFT with a constant real `Δ`, as a state-space system.
pub fn lft_upper_static(p: &StateSpace, delta: &Mat) -> Result<StateSpace> {
    let nd = delta.nrows();
    let nv = delta.ncols();
    if nv > p.ny() || nd > p.nu() {
        return Err(Error::Dimension("lft_upper: uncertainty larger than system".into()));
    }
    let n = p.nx();
    let (ny, nu) = (p.ny() - nv, p.nu() - nd);
    let b1 = sub(p.b(), 0, 0, n, nd);
    let b2 = sub(p.b(), 0, nd, n, nu);
    let c1 = sub(p.c(), 0, 0, nv, n);
    let c2 = sub(p.c(), nv, 0, ny, n);
    let d11 = sub(p.d(), 0, 0, nv, nd);
    let d12 = sub(p.d(), 0, nd, nv, nu);
    let d21 = sub(p.d(), nv, 0, ny, nd);
    let d22 = sub(p.d(), nv, nd, ny, nu);
    let e = linalg::inverse(&(eye(nd) - delta * &d11), "I - Δ D11")
        .map_err(|_| Error::IllPosed("I - Δ D11 singular".into()))?
        * delta;
    StateSpace::new(
        p.a() + &b1 * &e * &c1,
        &b2 + &b1 * &e * &d12,
        &c2 + &d21 * &e * &c1,
        &d22 + &d21 * &e * &d12,
    )
}
