use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::eye;
use crate::lti::{feedback, series, StateSpace};
use crate::robot::Pldi;

/// Unity negative feedback of `g` with `k` in the forward path.
pub fn closed_loop(g: &StateSpace, k: &StateSpace) -> Result<StateSpace> {
    if k.nu() != g.ny() || k.ny() != g.nu() {
        return Err(Error::Dimension(format!(
            "controller is {}x{}, plant is {}x{}",
            k.ny(),
            k.nu(),
            g.ny(),
            g.nu()
        )));
    }
    feedback(&series(k, g)?, &StateSpace::static_gain(eye(g.ny())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexVerdict {
    pub hurwitz: bool,
    pub abscissa: f64,
    /// Set when the loop could not be formed at this vertex.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexReport {
    pub verdicts: Vec<VertexVerdict>,
    pub worst_abscissa: f64,
    pub worst_index: usize,
}

impl VertexReport {
    pub fn all_stable(&self) -> bool {
        self.verdicts.iter().all(|v| v.hurwitz)
    }

    pub fn unstable_count(&self) -> usize {
        self.verdicts.iter().filter(|v| !v.hurwitz).count()
    }
}

fn check_vertex(g: &StateSpace, k: &StateSpace) -> VertexVerdict {
    match closed_loop(g, k).and_then(|cl| cl.is_hurwitz()) {
        Ok(s) => VertexVerdict { hurwitz: s.hurwitz, abscissa: s.abscissa, error: None },
        Err(e) => VertexVerdict { hurwitz: false, abscissa: f64::INFINITY, error: Some(e.to_string()) },
    }
}

/// Closed-loop Hurwitz test at every vertex of the family.
pub fn vertex_stability(k: &StateSpace, pldi: &Pldi) -> Result<VertexReport> {
    if pldi.is_empty() {
        return Err(Error::InvalidArgument("polytope has no vertices".into()));
    }
    let ny = pldi.c.nrows();
    let nu = pldi.vertices[0].1.ncols();
    if k.nu() != ny || k.ny() != nu {
        return Err(Error::Dimension(format!("controller is {}x{}, plant is {ny}x{nu}", k.ny(), k.nu())));
    }
    let run = |i: usize| check_vertex(&pldi.vertex_system(i), k);
    #[cfg(feature = "parallel")]
    let verdicts: Vec<VertexVerdict> = {
        use rayon::prelude::*;
        (0..pldi.len()).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let verdicts: Vec<VertexVerdict> = (0..pldi.len()).map(run).collect();
    let (worst_index, worst_abscissa) = verdicts
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v.abscissa > acc.1 { (i, v.abscissa) } else { acc });
    Ok(VertexReport { verdicts, worst_abscissa, worst_index })
}
