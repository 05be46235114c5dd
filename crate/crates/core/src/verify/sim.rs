use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::StateSpace;
use crate::robot::{dynamics_rhs, RobotModel};

/// Divergence threshold on the joint state norm.
const DIVERGENCE_NORM: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    Zero,
    /// `r(t) = value` for `t ≥ at`, zero before.
    Step { value: Vec<f64>, at: f64 },
}

impl Reference {
    fn eval(&self, t: f64, m: usize, out: &mut [f64]) {
        match self {
            Reference::Step { value, at } if t >= *at => out.copy_from_slice(&value[..m]),
            _ => out.iter_mut().for_each(|v| *v = 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Initial robot state `(q, q̇)`; zero when absent.
    pub x0: Option<Vec<f64>>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { t_end: 5.0, dt: 1e-3, x0: None }
    }
}

/// Uniformly sampled closed-loop trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub t: Vec<f64>,
    /// Robot state `(q, q̇)` per sample.
    pub x: Vec<Vec<f64>>,
    /// Joint torques.
    pub u: Vec<Vec<f64>>,
    /// Joint positions.
    pub y: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Final tracking error `r − y`.
    pub fn final_error(&self) -> Vec<f64> {
        let (r, y) = (self.r.last().unwrap(), self.y.last().unwrap());
        r.iter().zip(y).map(|(a, b)| a - b).collect()
    }
}

struct Loop<'a> {
    model: &'a dyn RobotModel,
    k: &'a StateSpace,
    reference: &'a Reference,
    m: usize,
}

impl Loop<'_> {
    /// Torque and tracking error at the combined state `(x, x_K)`.
    fn control(&self, t: f64, z: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = 2 * self.m;
        let mut r = vec![0.0; self.m];
        self.reference.eval(t, self.m, &mut r);
        let e = DVector::from_fn(self.m, |i, _| r[i] - z[i]);
        let xk = z.rows(n, self.k.nx());
        let u = self.k.c() * xk + self.k.d() * &e;
        (u, e)
    }

    fn rhs(&self, t: f64, z: &DVector<f64>) -> Result<DVector<f64>> {
        let n = 2 * self.m;
        let (u, e) = self.control(t, z);
        let dx = dynamics_rhs(self.model, &z.as_slice()[..n], u.as_slice())?;
        let dxk = self.k.a() * z.rows(n, self.k.nx()) + self.k.b() * e;
        let mut dz = DVector::zeros(z.len());
        dz.rows_mut(0, n).copy_from(&dx);
        dz.rows_mut(n, self.k.nx()).copy_from(&dxk);
        Ok(dz)
    }
}

/// Fixed-step RK4 of the nonlinear robot closed with `u = K(r − q)`.
///
/// The controller state is integrated jointly with the robot state and
/// starts at zero.
pub fn simulate_closed_loop(
    model: &dyn RobotModel,
    k: &StateSpace,
    reference: &Reference,
    opts: &SimOptions,
) -> Result<SimTrace> {
    let m = model.dof();
    let n = 2 * m;
    if k.nu() != m || k.ny() != m {
        return Err(Error::Dimension(format!("controller must be {m}x{m}, got {}x{}", k.ny(), k.nu())));
    }
    if let Reference::Step { value, at } = reference {
        if value.len() != m || !at.is_finite() {
            return Err(Error::InvalidArgument(format!("step reference needs {m} values and a finite time")));
        }
    }
    if !(opts.t_end > 0.0 && opts.t_end.is_finite()) {
        return Err(Error::InvalidArgument("t_end must be positive".into()));
    }
    if !(opts.dt > 0.0 && opts.dt <= 1e-3 * opts.t_end * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!("dt must lie in (0, 1e-3 t_end], got {}", opts.dt)));
    }
    let steps = (opts.t_end / opts.dt).round() as usize;
    let dt = opts.t_end / steps as f64;
    let x0 = opts.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    if x0.len() != n {
        return Err(Error::Dimension(format!("x0 has {} entries, expected {n}", x0.len())));
    }
    let lp = Loop { model, k, reference, m };
    let mut z = DVector::zeros(n + k.nx());
    z.rows_mut(0, n).copy_from_slice(&x0);

    let mut trace = SimTrace {
        t: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
        r: Vec::with_capacity(steps + 1),
    };
    let record = |t: f64, z: &DVector<f64>, tr: &mut SimTrace| {
        let (u, _) = lp.control(t, z);
        let mut r = vec![0.0; m];
        reference.eval(t, m, &mut r);
        tr.t.push(t);
        tr.x.push(z.as_slice()[..n].to_vec());
        tr.u.push(u.as_slice().to_vec());
        tr.y.push(z.as_slice()[..m].to_vec());
        tr.r.push(r);
    };
    record(0.0, &z, &mut trace);
    for i in 0..steps {
        let t = i as f64 * dt;
        let k1 = lp.rhs(t, &z)?;
        let k2 = lp.rhs(t + 0.5 * dt, &(&z + &k1 * (0.5 * dt)))?;
        let k3 = lp.rhs(t + 0.5 * dt, &(&z + &k2 * (0.5 * dt)))?;
        let k4 = lp.rhs(t + dt, &(&z + &k3 * dt))?;
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let t1 = (i + 1) as f64 * dt;
        let norm = z.rows(0, n).norm();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Diverged { t: t1, norm });
        }
        record(t1, &z, &mut trace);
    }
    Ok(trace)
}
