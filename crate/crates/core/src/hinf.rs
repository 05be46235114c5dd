//! H∞ norm computation and full-order H∞ synthesis.
//!
//! The synthesis follows the two-Riccati (DGKF) state-space solution in
//! its general form: nonzero `D11` is handled, and the plant is brought
//! to the normalized coordinates `D12 = [0; I]`, `D21 = [0 I]` by
//! orthogonal changes of the exogenous channels plus input/measurement
//! scalings. The γ search is a binary search over a geometric lattice,
//! so enlarging the upper end of the search range never moves the
//! answer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, block2, block_diag, eye, hcat, sigma_max, sigma_max_real, sub, vcat, Mat};
use crate::lti::{feedback, lft_lower, StateSpace};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HinfNorm {
    pub gamma: f64,
    /// Frequency (rad/s) where the peak gain was observed; `inf` for a
    /// feedthrough-dominated peak.
    pub peak_omega: f64,
}

/// Largest singular value of `sys(jω)`.
pub fn sigma_at(sys: &StateSpace, omega: f64) -> Result<f64> {
    Ok(sigma_max(&sys.freq_response(omega)?))
}

fn norm_hamiltonian(sys: &StateSpace, gamma: f64) -> Result<Mat> {
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let r = eye(sys.nu()) * (gamma * gamma) - d.transpose() * d;
    let ri = linalg::inverse(&r, "γ²I − DᵀD")?;
    let ak = a + b * &ri * d.transpose() * c;
    Ok(block2(
        &ak,
        &(b * &ri * b.transpose()),
        &(-(c.transpose() * (eye(sys.ny()) + d * &ri * d.transpose()) * c)),
        &(-ak.transpose()),
    ))
}

/// H∞ norm of a stable system by Hamiltonian bisection.
///
/// `tol` is the relative accuracy of the returned value, in `(0, 0.1]`.
pub fn hinf_norm(sys: &StateSpace, tol: f64) -> Result<HinfNorm> {
    if !(tol > 0.0 && tol <= 0.1) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} outside (0, 0.1]")));
    }
    let st = sys.is_hurwitz()?;
    if !st.hurwitz {
        return Err(Error::Unstable { abscissa: st.abscissa });
    }
    let d_gain = sigma_max_real(sys.d());
    let mut best = HinfNorm { gamma: d_gain, peak_omega: f64::INFINITY };
    if sys.nx() == 0 || sys.nu() == 0 || sys.ny() == 0 {
        return Ok(best);
    }
    // Lower bound from DC, the pole magnitudes and a coarse sweep.
    let mut probes: Vec<f64> = vec![0.0];
    for l in linalg::eigenvalues(sys.a())? {
        probes.push(l.norm());
        probes.push(l.im.abs());
    }
    probes.extend((0..=60).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / 60.0)));
    for w in probes {
        let s = sigma_at(sys, w)?;
        if s > best.gamma {
            best = HinfNorm { gamma: s, peak_omega: w };
        }
    }
    if best.gamma == 0.0 {
        return Ok(best);
    }

    // Imaginary-axis eigenvalues of H(γ) mark frequencies where σ̄ = γ.
    let crossings = |gamma: f64| -> Result<Vec<f64>> {
        let h = norm_hamiltonian(sys, gamma)?;
        let hn = h.norm();
        let mut w: Vec<f64> = linalg::eigenvalues(&h)?
            .into_iter()
            .filter(|l| l.re.abs() <= 1e-8 * hn || l.re.abs() <= 1e-6 * l.norm())
            .map(|l| l.im.abs())
            .collect();
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        w.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        Ok(w)
    };

    let mut lo = best.gamma;
    let mut hi = lo * (1.0 + 2.0 * tol);
    let mut iters = 0;
    loop {
        iters += 1;
        if iters > 200 {
            return Err(Error::NoConvergence);
        }
        let gamma = if hi <= lo * (1.0 + 2.0 * tol) && iters == 1 { hi } else { 0.5 * (lo + hi) };
        let ws = crossings(gamma)?;
        let mut exceeded = false;
        let mut probe = ws.clone();
        probe.extend(ws.windows(2).map(|p| 0.5 * (p[0] + p[1])));
        for w in probe {
            let s = sigma_at(sys, w)?;
            if s > best.gamma {
                best = HinfNorm { gamma: s, peak_omega: w };
            }
            if s >= gamma * (1.0 - 1e-9) {
                exceeded = true;
            }
        }
        lo = lo.max(best.gamma);
        if exceeded {
            if iters == 1 {
                hi = lo * 2.0;
                while !crossings(hi)?.is_empty() && hi < 1e300 {
                    lo = lo.max(hi * 0.5);
                    hi *= 2.0;
                }
            } else {
                hi = hi.max(lo);
            }
        } else {
            hi = gamma;
        }
        if hi - lo <= tol * lo {
            break;
        }
    }
    Ok(HinfNorm { gamma: best.gamma.max(lo), peak_omega: best.peak_omega })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HinfOptions {
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    /// Relative γ resolution.
    pub tol: f64,
    pub max_iter: usize,
    /// Padding applied to rank-deficient `D12`/`D21`.
    pub reg_eps: f64,
}

impl Default for HinfOptions {
    fn default() -> Self {
        Self { gamma_lo: 1e-3, gamma_hi: 1e6, tol: 1e-3, max_iter: 60, reg_eps: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct HinfResult {
    pub controller: StateSpace,
    pub gamma: f64,
    pub iterations: usize,
}

struct Partition {
    a: Mat,
    b1: Mat,
    b2: Mat,
    c1: Mat,
    c2: Mat,
    d11: Mat,
    d12: Mat,
    d21: Mat,
    d22: Mat,
}

impl Partition {
    fn new(p: &StateSpace, n_meas: usize, n_ctrl: usize) -> Result<Self> {
        if n_meas == 0 || n_ctrl == 0 || n_meas > p.ny() || n_ctrl > p.nu() {
            return Err(Error::Dimension("invalid controller channel counts".into()));
        }
        let n = p.nx();
        let (nw, nz) = (p.nu() - n_ctrl, p.ny() - n_meas);
        Ok(Self {
            a: p.a().clone(),
            b1: sub(p.b(), 0, 0, n, nw),
            b2: sub(p.b(), 0, nw, n, n_ctrl),
            c1: sub(p.c(), 0, 0, nz, n),
            c2: sub(p.c(), nz, 0, n_meas, n),
            d11: sub(p.d(), 0, 0, nz, nw),
            d12: sub(p.d(), 0, nw, nz, n_ctrl),
            d21: sub(p.d(), nz, 0, n_meas, nw),
            d22: sub(p.d(), nz, nw, n_meas, n_ctrl),
        })
    }
}

/// Plant data in normalized coordinates together with the maps back to
/// the original controller channels.
struct Normalized {
    a: Mat,
    b1: Mat,
    b2: Mat,
    c1: Mat,
    c2: Mat,
    d11: Mat,
    /// `u = tu ũ`
    tu: Mat,
    /// `ỹ = ty y`
    ty: Mat,
}

fn normalize(part: &Partition, reg_eps: f64, state_reg: u8) -> Result<Normalized> {
    let n = part.a.nrows();
    let m2 = part.b2.ncols();
    let p2 = part.c2.nrows();
    let mut c1 = part.c1.clone();
    let mut b1 = part.b1.clone();
    let mut d11 = part.d11.clone();
    let mut d12 = part.d12.clone();
    let mut d21 = part.d21.clone();

    // √ε-level disturbance on (level 1) and penalty of (level 2) every
    // state, for plants whose imaginary-axis modes are not reached by w or
    // not seen by z.
    let e = reg_eps.sqrt();
    if state_reg >= 1 && n > 0 {
        b1 = hcat(&[&b1, &(eye(n) * e)]);
        d11 = hcat(&[&d11, &Mat::zeros(d11.nrows(), n)]);
        d21 = hcat(&[&d21, &Mat::zeros(p2, n)]);
    }
    if state_reg >= 2 && n > 0 {
        c1 = vcat(&[&c1, &(eye(n) * e)]);
        d11 = vcat(&[&d11, &Mat::zeros(n, d11.ncols())]);
        d12 = vcat(&[&d12, &Mat::zeros(n, m2)]);
    }

    if d12.nrows() < m2 || linalg::sigma_min_real(&d12) < reg_eps || d12.nrows() == 0 {
        c1 = vcat(&[&c1, &Mat::zeros(m2, n)]);
        d11 = vcat(&[&d11, &Mat::zeros(m2, d11.ncols())]);
        d12 = vcat(&[&d12, &(eye(m2) * reg_eps)]);
    }
    if d21.ncols() < p2 || linalg::sigma_min_real(&d21) < reg_eps || d21.ncols() == 0 {
        b1 = hcat(&[&b1, &Mat::zeros(n, p2)]);
        d11 = hcat(&[&d11, &Mat::zeros(d11.nrows(), p2)]);
        d21 = hcat(&[&d21, &(eye(p2) * reg_eps)]);
    }
    let (p1, m1) = d11.shape();

    // D12 = U Σ Vᵀ: rotate z so the range of D12 comes last, scale u.
    let svd = d12.clone().svd(true, true);
    let (u, s, vt) = (svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap());
    let uf = full_orthonormal(&u, p1);
    let uo = hcat(&[&sub(&uf, 0, m2, p1, p1 - m2), &sub(&uf, 0, 0, p1, m2)]);
    let tu = vt.transpose() * Mat::from_diagonal(&s.map(|x| 1.0 / x));

    // D21 = U Σ Vᵀ: rotate w so the co-range of D21 comes last, scale y.
    let svd = d21.clone().svd(true, true);
    let (u2, s2, v2t) = (svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap());
    let vf = full_orthonormal(&v2t.transpose(), m1);
    let vo = hcat(&[&sub(&vf, 0, p2, m1, m1 - p2), &sub(&vf, 0, 0, m1, p2)]);
    let ty = Mat::from_diagonal(&s2.map(|x| 1.0 / x)) * u2.transpose();

    Ok(Normalized {
        a: part.a.clone(),
        b1: &b1 * &vo,
        b2: &part.b2 * &tu,
        c1: uo.transpose() * &c1,
        c2: &ty * &part.c2,
        d11: uo.transpose() * &d11 * &vo,
        tu,
        ty,
    })
}

/// Completes the orthonormal columns of `q` to a square orthogonal matrix.
fn full_orthonormal(q: &Mat, n: usize) -> Mat {
    let k = q.ncols();
    if k >= n {
        return q.columns(0, n).into_owned();
    }
    let mut cols: Vec<nalgebra::DVector<f64>> = (0..k).map(|j| q.column(j).into_owned()).collect();
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = nalgebra::DVector::from_fn(n, |i, _| if i == e { 1.0 } else { 0.0 });
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dot(&v);
                v -= c * proj;
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            cols.push(v / nv);
        }
    }
    Mat::from_columns(&cols)
}

/// Central controller at a fixed γ for normalized data, or `None` when
/// the Riccati conditions fail.
fn central_normalized(nz: &Normalized, gamma: f64) -> Option<StateSpace> {
    let n = nz.a.nrows();
    let m2 = nz.b2.ncols();
    let p2 = nz.c2.nrows();
    let (p1, m1) = nz.d11.shape();
    let g2 = gamma * gamma;
    let d1111 = sub(&nz.d11, 0, 0, p1 - m2, m1 - p2);
    let d1112 = sub(&nz.d11, 0, m1 - p2, p1 - m2, p2);
    let d1121 = sub(&nz.d11, p1 - m2, 0, m2, m1 - p2);
    let d1122 = sub(&nz.d11, p1 - m2, m1 - p2, m2, p2);
    let c_lim = sigma_max_real(&hcat(&[&d1111, &d1112])).max(sigma_max_real(&vcat(&[&d1111, &d1121])));
    if gamma <= c_lim * (1.0 + 1e-9) {
        return None;
    }

    let b = hcat(&[&nz.b1, &nz.b2]);
    let c = vcat(&[&nz.c1, &nz.c2]);
    let d12 = vcat(&[&Mat::zeros(p1 - m2, m2), &eye(m2)]);
    let d21 = hcat(&[&Mat::zeros(p2, m1 - p2), &eye(p2)]);
    let d1d = hcat(&[&nz.d11, &d12]);
    let dd1 = vcat(&[&nz.d11, &d21]);
    let r = d1d.transpose() * &d1d - block_diag(&[&(eye(m1) * g2), &Mat::zeros(m2, m2)]);
    let rt = &dd1 * dd1.transpose() - block_diag(&[&(eye(p1) * g2), &Mat::zeros(p2, p2)]);
    let ri = linalg::inverse(&r, "R").ok()?;
    let rti = linalg::inverse(&rt, "R~").ok()?;

    let ax = &nz.a - &b * &ri * d1d.transpose() * &nz.c1;
    let hx = block2(
        &ax,
        &(-(&b * &ri * b.transpose())),
        &(-(nz.c1.transpose() * &nz.c1) + nz.c1.transpose() * &d1d * &ri * d1d.transpose() * &nz.c1),
        &(-ax.transpose()),
    );
    let ay = &nz.a - &nz.b1 * dd1.transpose() * &rti * &c;
    let jy = block2(
        &ay.transpose(),
        &(-(c.transpose() * &rti * &c)),
        &(-(&nz.b1 * nz.b1.transpose()) + &nz.b1 * dd1.transpose() * &rti * &dd1 * nz.b1.transpose()),
        &(-ay.clone()),
    );
    let x = crate::riccati::stabilizing_solution(&hx).ok()?;
    let y = crate::riccati::stabilizing_solution(&jy).ok()?;
    let psd_tol = |m: &Mat| -1e-5 * (1.0 + linalg::max_abs(m));
    let min_eig = |m: &Mat| m.clone().symmetric_eigen().eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if n > 0 && (min_eig(&x) < psd_tol(&x) || min_eig(&y) < psd_tol(&y)) {
        return None;
    }
    if n > 0 {
        let rho = linalg::eigenvalues(&(&x * &y)).ok()?.iter().fold(0.0_f64, |a, l| a.max(l.norm()));
        if rho >= g2 {
            return None;
        }
    }

    let f = -(&ri * (d1d.transpose() * &nz.c1 + b.transpose() * &x));
    let l = -((&nz.b1 * dd1.transpose() + &y * c.transpose()) * &rti);
    let f12 = sub(&f, m1 - p2, 0, p2, n);
    let f2 = sub(&f, m1, 0, m2, n);
    let l12 = sub(&l, 0, p1 - m2, n, m2);
    let l2 = sub(&l, 0, p1, n, p2);

    let (d11h, m12, m21) = if d1111.nrows() > 0 && d1111.ncols() > 0 {
        let w1 = linalg::inverse(&(eye(p1 - m2) * g2 - &d1111 * d1111.transpose()), "γ²I − D1111D1111ᵀ").ok()?;
        let w2 = linalg::inverse(&(eye(m1 - p2) * g2 - d1111.transpose() * &d1111), "γ²I − D1111ᵀD1111").ok()?;
        (
            -(&d1121 * d1111.transpose() * &w1 * &d1112) - &d1122,
            eye(m2) - &d1121 * &w2 * d1121.transpose(),
            eye(p2) - d1112.transpose() * &w1 * &d1112,
        )
    } else {
        (
            -d1122.clone(),
            eye(m2) - &d1121 * d1121.transpose() / g2,
            eye(p2) - d1112.transpose() * &d1112 / g2,
        )
    };
    let d12h = m12.cholesky()?.l();
    let d21h = m21.cholesky()?.l().transpose();
    let z = linalg::inverse(&(eye(n) - &y * &x / g2), "I − YX/γ²").ok()?;
    let d12h_inv = linalg::inverse(&d12h, "D̂12").ok()?;
    let d21h_inv = linalg::inverse(&d21h, "D̂21").ok()?;
    let b2h = &z * (&nz.b2 + &l12) * &d12h;
    let c2h = -(&d21h * (&nz.c2 + &f12));
    let b1h = -(&z * &l2) + &b2h * &d12h_inv * &d11h;
    let c1h = &f2 + &d11h * &d21h_inv * &c2h;
    let ah = &nz.a + &b * &f + &b1h * &d21h_inv * &c2h;

    let k = StateSpace::new(ah, &b1h * &nz.ty, &nz.tu * c1h, &nz.tu * d11h * &nz.ty).ok()?;
    if k.a().iter().chain(k.b().iter()).chain(k.c().iter()).chain(k.d().iter()).any(|v| !v.is_finite()) {
        return None;
    }
    Some(k)
}

/// Central H∞ controller for `p` at a fixed `gamma`.
///
/// Returns `None` if the Riccati conditions fail or the controller does
/// not stabilize the loop.
pub fn central_controller(p: &StateSpace, n_meas: usize, n_ctrl: usize, gamma: f64, reg_eps: f64) -> Result<Option<StateSpace>> {
    central(p, n_meas, n_ctrl, gamma, reg_eps, 0)
}

fn central(p: &StateSpace, n_meas: usize, n_ctrl: usize, gamma: f64, reg_eps: f64, state_reg: u8) -> Result<Option<StateSpace>> {
    let p = p.balanced();
    let part = Partition::new(&p, n_meas, n_ctrl)?;
    let has_d22 = linalg::max_abs(&part.d22) > 0.0;
    let nz = normalize(&part, reg_eps, state_reg)?;
    let Some(k0) = central_normalized(&nz, gamma) else {
        return Ok(None);
    };
    // u = K̃ (y − D22 u)
    let k = if has_d22 { feedback(&k0, &StateSpace::static_gain(part.d22.clone()))? } else { k0 };
    let cl = match lft_lower(&p, &k, n_meas, n_ctrl) {
        Ok(cl) => cl,
        Err(Error::IllPosed(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    if !cl.is_hurwitz()?.hurwitz {
        return Ok(None);
    }
    Ok(Some(k))
}

/// γ-optimal full-order H∞ synthesis.
///
/// Searches the lattice `γₖ = lo·(1+tol)ᵏ` for the smallest feasible
/// level and certifies the result with an independent norm evaluation;
/// if certification fails the level is raised along the lattice.
pub fn synthesize_hinf(p: &StateSpace, n_meas: usize, n_ctrl: usize, opts: &HinfOptions) -> Result<HinfResult> {
    if !(opts.gamma_lo > 0.0 && opts.gamma_hi > opts.gamma_lo && opts.tol > 0.0) {
        return Err(Error::InvalidArgument("bad γ range or tolerance".into()));
    }
    let part = Partition::new(p, n_meas, n_ctrl)?;
    let lo = opts.gamma_lo;
    let step = (1.0 + opts.tol).ln();
    let k_max = ((opts.gamma_hi / lo).ln() / step).ceil() as i64;
    let gamma_of = |k: i64| lo * (step * k as f64).exp();
    // Levels at or below the feedthrough limit are infeasible outright.
    let d_lim = sigma_max_real(&part.d11);
    let mut iterations = 0;

    let mut lattice_lo: i64 = -1; // known infeasible (or below range)
    let mut lattice_hi: i64 = k_max;
    // Fall back to state regularization when the plain problem has no
    // solution even at the top of the range.
    let mut state_reg = 0;
    let mut top = central(p, n_meas, n_ctrl, gamma_of(k_max), opts.reg_eps, 0)?;
    while top.is_none() && state_reg < 2 {
        state_reg += 1;
        top = central(p, n_meas, n_ctrl, gamma_of(k_max), opts.reg_eps, state_reg)?;
    }
    let central_controller = |p: &StateSpace, n_meas, n_ctrl, g, eps| central(p, n_meas, n_ctrl, g, eps, state_reg);
    let mut best = match top {
        Some(k) => (k_max, k),
        None => {
            return Err(Error::Infeasible {
                lo: opts.gamma_lo,
                hi: opts.gamma_hi,
                reason: "no stabilizing central controller at the top of the range".into(),
            })
        }
    };
    while lattice_hi - lattice_lo > 1 && iterations < opts.max_iter {
        iterations += 1;
        let mid = lattice_lo + (lattice_hi - lattice_lo) / 2;
        let g = gamma_of(mid);
        let feasible = if g < d_lim { None } else { central_controller(p, n_meas, n_ctrl, g, opts.reg_eps)? };
        match feasible {
            Some(k) => {
                lattice_hi = mid;
                best = (mid, k);
            }
            None => lattice_lo = mid,
        }
    }
    let (mut level, mut k) = best;
    // Certification: the central controller may degrade right at the
    // optimum; raise γ along the lattice until the bound is verified.
    for _ in 0..200 {
        let cl = lft_lower(p, &k, n_meas, n_ctrl)?;
        let g = gamma_of(level);
        let achieved = match hinf_norm(&cl, (opts.tol * 0.25).min(0.1)) {
            Ok(n) => n.gamma,
            Err(Error::Unstable { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if achieved <= g * (1.0 + opts.tol) {
            return Ok(HinfResult { controller: k, gamma: g, iterations });
        }
        loop {
            level += 1;
            iterations += 1;
            if let Some(kk) = central_controller(p, n_meas, n_ctrl, gamma_of(level), opts.reg_eps)? {
                k = kk;
                break;
            }
            if level > k_max + 200 {
                return Err(Error::Infeasible { lo: opts.gamma_lo, hi: opts.gamma_hi, reason: "certification failed".into() });
            }
        }
    }
    Err(Error::Infeasible { lo: opts.gamma_lo, hi: opts.gamma_hi, reason: "certification failed".into() })
}
