use super::bounds::{IntervalEntry, IntervalMatrixBounds, Which};
use super::pldi::position_output;
use crate::error::{Error, Result};
use crate::linalg::{hcat, vcat, Mat};
use crate::lti::{lft_upper_static, StateSpace, TFMatrix};
use crate::mu::{Block, DeltaStructure};

/// Interval plant written as an upper LFT of normalized real scalars.
///
/// `uncertainty_map` has inputs `(d, u)` and outputs `(v, y)`; closing
/// `d = diag(δ) v` with `δ_i ∈ [−1, 1]` gives the plant at that point.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertainPlant {
    pub nominal: StateSpace,
    pub uncertainty_map: StateSpace,
    /// One real scalar block per parameter; `None` without uncertainty.
    pub ds: Option<DeltaStructure>,
    pub params: Vec<IntervalEntry>,
}

impl UncertainPlant {
    /// Parametric blocks followed by the full performance block
    /// (`n_w` rows, `n_z` columns) for robust-performance analysis.
    pub fn rp_structure(&self, n_w: usize, n_z: usize) -> Result<DeltaStructure> {
        match &self.ds {
            Some(ds) => ds.with_performance(n_w, n_z),
            None => DeltaStructure::new(vec![Block::full(n_w, n_z)]),
        }
    }

    pub fn n_delta(&self) -> usize {
        self.params.len()
    }

    pub fn ny(&self) -> usize {
        self.nominal.ny()
    }

    pub fn nu(&self) -> usize {
        self.nominal.nu()
    }

    /// Plant at the normalized parameter point `delta`.
    pub fn at(&self, delta: &[f64]) -> Result<StateSpace> {
        if delta.len() != self.n_delta() {
            return Err(Error::Dimension(format!("{} parameters for {} channels", delta.len(), self.n_delta())));
        }
        lft_upper_static(&self.uncertainty_map, &Mat::from_diagonal(&nalgebra::DVector::from_column_slice(delta)))
    }

    /// Plant at a vertex (`true` = upper endpoint).
    pub fn at_vertex(&self, pattern: &[bool]) -> Result<StateSpace> {
        let delta: Vec<f64> = pattern.iter().map(|&s| if s { 1.0 } else { -1.0 }).collect();
        self.at(&delta)
    }
}

/// One rank-one additive channel per non-degenerate interval entry.
///
/// The half-width `h` is split as `√h` on both the injection and the
/// pick-off so the channels are balanced.
pub fn build_uncertain_plant(bounds: &IntervalMatrixBounds) -> Result<UncertainPlant> {
    let params = bounds.uncertain_entries();
    let nx = bounds.nx();
    let nu = bounds.nu();
    let nd = params.len();
    let c = position_output(nx);
    let ny = c.nrows();
    let a0 = bounds.a_mid();
    let b0 = bounds.b_mid();
    let mut bd = Mat::zeros(nx, nd);
    let mut cv = Mat::zeros(nd, nx);
    let mut dvu = Mat::zeros(nd, nu);
    for (i, e) in params.iter().enumerate() {
        let g = e.half_width().sqrt();
        bd[(e.row, i)] = g;
        match e.which {
            Which::A => cv[(i, e.col)] = g,
            Which::B => dvu[(i, e.col)] = g,
        }
    }
    let nominal = StateSpace::new(a0.clone(), b0.clone(), c.clone(), Mat::zeros(ny, nu))?;
    let uncertainty_map = StateSpace::new(
        a0,
        hcat(&[&bd, &b0]),
        vcat(&[&cv, &c]),
        vcat(&[&hcat(&[&Mat::zeros(nd, nd), &dvu]), &Mat::zeros(ny, nd + nu)]),
    )?;
    let ds = if nd == 0 { None } else { Some(DeltaStructure::real_scalars(nd)?) };
    Ok(UncertainPlant { nominal, uncertainty_map, ds, params })
}

/// Generalized plant for mixed-sensitivity μ-synthesis.
///
/// Outputs `(v, z₁, z₂, e)` and inputs `(d, w, u)` with
/// `z₁ = W_S (w − y)`, `z₂ = W_T y` and the measured tracking error
/// `e = w − y`; the controller closes `u = K e`.
pub fn augment(g: &UncertainPlant, ws: &TFMatrix, wt: &TFMatrix) -> Result<StateSpace> {
    let ny = g.ny();
    if ws.rows() != ws.cols() || ws.cols() != ny || wt.rows() != wt.cols() || wt.cols() != ny {
        return Err(Error::Dimension(format!("weights must be {ny}x{ny}")));
    }
    let nd = g.n_delta();
    let nu = g.nu();
    let m = &g.uncertainty_map;
    let nx = m.nx();
    let bdv = m.b().columns(0, nd).into_owned();
    let bu = m.b().columns(nd, nu).into_owned();
    let cv = m.c().rows(0, nd).into_owned();
    let cy = m.c().rows(nd, ny).into_owned();
    let dvd = m.d().view((0, 0), (nd, nd)).into_owned();
    let dvu = m.d().view((0, nd), (nd, nu)).into_owned();
    let dyd = m.d().view((nd, 0), (ny, nd)).into_owned();
    let dyu = m.d().view((nd, nd), (ny, nu)).into_owned();

    let s = ws.to_ss();
    let t = wt.to_ss();
    let (ns, nt) = (s.nx(), t.nx());
    let nz1 = ws.rows();
    let nz2 = wt.rows();
    let iw = Mat::identity(ny, ny);
    let z = Mat::zeros;

    // States (x, x_S, x_T); e = w − (C_y x + D_yd d + D_yu u).
    let a = vcat(&[
        &hcat(&[m.a(), &z(nx, ns), &z(nx, nt)]),
        &hcat(&[&(-(s.b() * &cy)), s.a(), &z(ns, nt)]),
        &hcat(&[&(t.b() * &cy), &z(nt, ns), t.a()]),
    ]);
    let b = vcat(&[
        &hcat(&[&bdv, &z(nx, ny), &bu]),
        &hcat(&[&(-(s.b() * &dyd)), s.b(), &(-(s.b() * &dyu))]),
        &hcat(&[&(t.b() * &dyd), &z(nt, ny), &(t.b() * &dyu)]),
    ]);
    let c = vcat(&[
        &hcat(&[&cv, &z(nd, ns), &z(nd, nt)]),
        &hcat(&[&(-(s.d() * &cy)), s.c(), &z(nz1, nt)]),
        &hcat(&[&(t.d() * &cy), &z(nz2, ns), t.c()]),
        &hcat(&[&(-&cy), &z(ny, ns), &z(ny, nt)]),
    ]);
    let d = vcat(&[
        &hcat(&[&dvd, &z(nd, ny), &dvu]),
        &hcat(&[&(-(s.d() * &dyd)), s.d(), &(-(s.d() * &dyu))]),
        &hcat(&[&(t.d() * &dyd), &z(nz2, ny), &(t.d() * &dyu)]),
        &hcat(&[&(-&dyd), &iw, &(-&dyu)]),
    ]);
    StateSpace::new(a, b, c, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{lft_lower, RationalTF};
    use crate::robot::pldi::vertex_at;

    #[test]
    fn midpoints_and_channels() {
        let up = build_uncertain_plant(&IntervalMatrixBounds::paper_2r()).unwrap();
        assert_eq!(up.n_delta(), 10);
        assert!((up.nominal.a()[(2, 1)] - 0.25660).abs() < 1e-12);
        assert_eq!(up.uncertainty_map.nu(), 12);
        assert_eq!(up.uncertainty_map.ny(), 12);
    }

    #[test]
    fn all_upper_endpoints_reproduce_hi() {
        let b = IntervalMatrixBounds::paper_2r();
        let up = build_uncertain_plant(&b).unwrap();
        let g = up.at(&[1.0; 10]).unwrap();
        assert!((g.a() - &b.a_hi).abs().max() < 1e-12);
        assert!((g.b() - &b.b_hi).abs().max() < 1e-12);
        let (a, bb) = vertex_at(&b, &[false; 10]).unwrap();
        let g = up.at_vertex(&[false; 10]).unwrap();
        assert!((g.a() - a).abs().max() < 1e-12 && (g.b() - bb).abs().max() < 1e-12);
    }

    #[test]
    fn degenerate_bounds_have_no_channels() {
        let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = Mat::from_row_slice(2, 1, &[0.0, 1.0]);
        let up = build_uncertain_plant(&IntervalMatrixBounds::new(a.clone(), a, b.clone(), b).unwrap()).unwrap();
        assert_eq!(up.n_delta(), 0);
        assert_eq!(up.uncertainty_map.nu(), 1);
        assert_eq!(up.rp_structure(1, 2).unwrap().len(), 1);
    }

    #[test]
    fn static_loop_gives_half_sensitivity() {
        // G = 1 (no states), W_S = 1, W_T = 0, K = 1.
        let up = UncertainPlant {
            nominal: StateSpace::static_gain(Mat::identity(1, 1)),
            uncertainty_map: StateSpace::static_gain(Mat::identity(1, 1)),
            ds: None,
            params: vec![],
        };
        let one = TFMatrix::diagonal(vec![RationalTF::constant(1.0)]);
        let zero = TFMatrix::diagonal(vec![RationalTF::constant(0.0)]);
        let p = augment(&up, &one, &zero).unwrap();
        assert_eq!((p.ny(), p.nu()), (3, 2));
        let cl = lft_lower(&p, &StateSpace::static_gain(Mat::identity(1, 1)), 1, 1).unwrap();
        for w in [0.0, 1.0, 100.0] {
            let h = cl.freq_response(w).unwrap();
            assert!((h[(0, 0)].re - 0.5).abs() < 1e-14);
            assert_eq!(h[(1, 0)].norm(), 0.0);
        }
    }
}
