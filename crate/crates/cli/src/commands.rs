use std::fs;
use std::path::{Path, PathBuf};

use mucontrol::lti::{FrequencyGrid, StateSpace, TFMatrix};
use mucontrol::mu::{dk_iterate, tune_fixed_structure, DkOptions, SynthesisReport, Template, TuneOptions, Verdict};
use mucontrol::robot::{
    augment, build_pldi, build_uncertain_plant, jacobian_bounds, make_weights, IntervalMatrixBounds, Pldi, UncertainPlant,
};
use mucontrol::verify::csv::{Cell, CsvTable};
use mucontrol::verify::{check_weight_bounds, monte_carlo_freq, simulate_closed_loop, vertex_stability, Reference, SimOptions};
use mucontrol::Error;

use crate::config::{ConfigError, IntervalSource, RunConfig, SynthesisMode};
use crate::controller::{self, ControllerFile};

/// Outcome classes mapped onto process exit codes.
#[derive(Debug)]
pub enum Failure {
    Io(String),
    Validation(String),
    Infeasible(String),
    Verification(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Io(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Verification(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Io(m) | Failure::Validation(m) | Failure::Infeasible(m) | Failure::Verification(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Dimension(_) | Error::InvalidArgument(_) | Error::Improper { .. } => Failure::Validation(e.to_string()),
            Error::Infeasible { .. } | Error::NoStabilizingStart { .. } | Error::Unstable { .. } => Failure::Infeasible(e.to_string()),
            Error::Diverged { .. } => Failure::Verification(e.to_string()),
            _ => Failure::Io(e.to_string()),
        }
    }
}

pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
    /// `config=<hash> seed=<n>` stamped on every artifact.
    pub stamp: String,
}

impl Ctx {
    pub fn new(cfg: RunConfig, out: PathBuf) -> Result<Self, Failure> {
        fs::create_dir_all(&out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
        let stamp = format!("config={} seed={}", cfg.hash(), cfg.seed);
        Ok(Self { cfg, out, stamp })
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf, Failure> {
        let path = self.out.join(name);
        fs::write(&path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    fn table(&self, header: &[&str]) -> CsvTable {
        CsvTable::new(self.stamp.clone(), header.iter().map(|s| s.to_string()).collect())
    }

    fn summary(&self, name: &str, rows: Vec<(&str, Cell)>) -> Result<PathBuf, Failure> {
        let mut t = self.table(&["quantity", "value"]);
        for (k, v) in rows {
            t.push_cells(vec![k.into(), v]);
        }
        self.write(name, &t.render())
    }

    fn bounds(&self) -> Result<IntervalMatrixBounds, Failure> {
        Ok(match self.cfg.plant.intervals {
            IntervalSource::Paper2r => IntervalMatrixBounds::paper_2r(),
            IntervalSource::Computed => jacobian_bounds(&self.cfg.robot()?, self.cfg.plant.density)?,
        })
    }

    fn plant(&self) -> Result<(IntervalMatrixBounds, UncertainPlant, TFMatrix, TFMatrix), Failure> {
        let b = self.bounds()?;
        let up = build_uncertain_plant(&b)?;
        let (ws, wt) = make_weights(&self.cfg.weights)?;
        Ok((b, up, ws, wt))
    }

    fn pldi(&self, b: &IntervalMatrixBounds) -> Result<Pldi, Failure> {
        Ok(build_pldi(b, self.cfg.vertex_mode())?)
    }
}

/// Controller from `--controller` or the config's `[controller]` section.
pub fn load_controller(ctx: &Ctx, path: Option<&Path>) -> Result<ControllerFile, Failure> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
            controller::parse(&text).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())))
        }
        None => Ok(ControllerFile { ss: None, tf: Some(ctx.cfg.controller_tf()?) }),
    }
}

fn channel_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).flat_map(|i| (1..=n).map(move |j| format!("{prefix}{i}{j}"))).collect()
}

pub fn cmd_plant(ctx: &Ctx) -> Result<Vec<PathBuf>, Failure> {
    let (b, up, _, _) = ctx.plant()?;
    let pldi = ctx.pldi(&b)?;
    let mut files = Vec::new();

    let mut t = ctx.table(&["entry", "lo", "hi", "midpoint", "half_width"]);
    for e in b.uncertain_entries() {
        t.push_cells(vec![e.name().into(), e.lo.into(), e.hi.into(), e.midpoint().into(), e.half_width().into()]);
    }
    files.push(ctx.write("bounds.csv", &t.render())?);

    files.push(ctx.summary(
        "plant_summary.csv",
        vec![
            ("vertices", (pldi.len() as f64).into()),
            ("uncertain_entries", (up.n_delta() as f64).into()),
            ("states", (up.nominal.nx() as f64).into()),
            ("inputs", (up.nu() as f64).into()),
            ("outputs", (up.ny() as f64).into()),
        ],
    )?);
    files.push(ctx.write("nominal.ss", &controller::render(&ctx.stamp, Some(&up.nominal), None))?);

    // Open-loop magnitudes: nominal and the range over the vertices.
    let grid = ctx.cfg.grid()?;
    let (ny, nu) = (up.ny(), up.nu());
    let names: Vec<String> = (1..=ny).flat_map(|i| (1..=nu).map(move |j| format!("{i}{j}"))).collect();
    let mut header = vec!["omega".to_string()];
    for tag in ["nominal", "min", "max"] {
        header.extend(names.iter().map(|n| format!("{tag}_g{n}")));
    }
    let mut t = CsvTable::new(ctx.stamp.clone(), header);
    let vertex_systems: Vec<StateSpace> = (0..pldi.len()).map(|i| pldi.vertex_system(i)).collect();
    for &w in grid.points() {
        let nom = up.nominal.freq_response(w)?;
        let mut lo = vec![f64::INFINITY; ny * nu];
        let mut hi = vec![0.0_f64; ny * nu];
        for g in &vertex_systems {
            let h = g.freq_response(w)?;
            for k in 0..ny * nu {
                let v = h[(k / nu, k % nu)].norm();
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        let mut row = vec![w];
        row.extend((0..ny * nu).map(|k| nom[(k / nu, k % nu)].norm()));
        row.extend(lo);
        row.extend(hi);
        t.push(row);
    }
    files.push(ctx.write("bode.csv", &t.render())?);
    Ok(files)
}

fn dk_options(cfg: &RunConfig, grid: &FrequencyGrid) -> DkOptions {
    DkOptions {
        max_iter: cfg.synthesis.max_iter,
        tol: cfg.synthesis.tol,
        dfit_order: cfg.synthesis.dfit_order,
        grid: grid.clone(),
        ..DkOptions::default()
    }
}

fn write_report(ctx: &Ctx, r: &SynthesisReport, tf: Option<&TFMatrix>, files: &mut Vec<PathBuf>) -> Result<(), Failure> {
    files.push(ctx.write("controller.ctl", &controller::render(&ctx.stamp, Some(&r.controller), tf))?);
    let nb = r.curve.dscales.first().map_or(0, |d| d.len());
    let mut header = vec!["omega".to_string(), "mu_upper".to_string()];
    header.extend((1..=nb).map(|k| format!("d{k}")));
    let mut t = CsvTable::new(ctx.stamp.clone(), header);
    for ((&w, &m), d) in r.curve.grid.points().iter().zip(&r.curve.upper).zip(&r.curve.dscales) {
        let mut row = vec![w, m];
        row.extend(d);
        t.push(row);
    }
    files.push(ctx.write("mu.csv", &t.render())?);
    let k = &r.controller;
    let (ny, nu) = (k.ny(), k.nu());
    let mut header = vec!["omega".to_string()];
    header.extend((1..=ny).flat_map(|i| (1..=nu).map(move |j| format!("k{i}{j}"))));
    let mut t = CsvTable::new(ctx.stamp.clone(), header);
    for &w in r.curve.grid.points() {
        let h = k.freq_response(w)?;
        let mut row = vec![w];
        row.extend((0..ny * nu).map(|e| h[(e / nu, e % nu)].norm()));
        t.push(row);
    }
    files.push(ctx.write("controller_bode.csv", &t.render())?);
    let mut t = ctx.table(&["iteration", "gamma", "mu_peak", "accepted"]);
    for (i, ((g, m), a)) in r.gamma_history.iter().zip(&r.mu_history).zip(&r.accepted).enumerate() {
        t.push(vec![(i + 1) as f64, *g, *m, if *a { 1.0 } else { 0.0 }]);
    }
    files.push(ctx.write("iterations.csv", &t.render())?);
    files.push(ctx.summary(
        "synth_summary.csv",
        vec![
            ("mu_peak", r.peak().into()),
            ("peak_omega", r.curve.peak_omega.into()),
            ("iterations", (r.iterations as f64).into()),
            ("controller_order", (r.controller.nx() as f64).into()),
            ("verdict", format!("{:?}", r.verdict).to_lowercase().into()),
            ("stop", format!("{:?}", r.stop).into()),
        ],
    )?);
    Ok(())
}

pub fn cmd_synth(ctx: &Ctx) -> Result<Vec<PathBuf>, Failure> {
    let (_, up, ws, wt) = ctx.plant()?;
    let p = augment(&up, &ws, &wt)?;
    let (nw, nz) = (ws.rows(), ws.rows() + wt.rows());
    let ds = up.rp_structure(nw, nz)?;
    let grid = ctx.cfg.grid()?;
    let (n_meas, n_ctrl) = (up.ny(), up.nu());
    let mut files = Vec::new();
    let (report, tf) = match ctx.cfg.synthesis.mode {
        SynthesisMode::Unstructured => (dk_iterate(&p, &ds, n_meas, n_ctrl, &dk_options(&ctx.cfg, &grid))?, None),
        SynthesisMode::Fixed => {
            let s = &ctx.cfg.synthesis;
            let template = Template::uniform(n_ctrl, n_meas, s.num_degree, s.den_degree);
            let opts = TuneOptions {
                starts: s.starts,
                seed: ctx.cfg.seed,
                max_evals: s.max_evals,
                rounds: s.rounds,
                tol: s.tol,
                grid: grid.clone(),
                initial: ctx.cfg.controller.as_ref().map(|_| ctx.cfg.controller_tf()).transpose()?,
                dk: dk_options(&ctx.cfg, &grid),
                ..TuneOptions::default()
            };
            let (r, k) = tune_fixed_structure(&p, &ds, &template, n_meas, n_ctrl, &opts)?;
            (r, Some(k))
        }
    };
    write_report(ctx, &report, tf.as_ref(), &mut files)?;
    if report.verdict != Verdict::Robust {
        return Err(Failure::Infeasible(format!(
            "no robust design: mu peak {:.6} >= 1 (artifacts in {})",
            report.peak(),
            ctx.out.display()
        )));
    }
    Ok(files)
}

pub fn cmd_verify(ctx: &Ctx, controller: Option<&Path>) -> Result<Vec<PathBuf>, Failure> {
    let k = load_controller(ctx, controller)?.system();
    let (b, up, ws, wt) = ctx.plant()?;
    let pldi = ctx.pldi(&b)?;
    let mut files = Vec::new();

    let vr = vertex_stability(&k, &pldi)?;
    let mut t = ctx.table(&["vertex", "pattern", "hurwitz", "abscissa"]);
    for (i, (v, pat)) in vr.verdicts.iter().zip(&pldi.patterns).enumerate() {
        let bits: String = pat.iter().map(|&s| if s { '1' } else { '0' }).collect();
        t.push_cells(vec![(i as f64).into(), bits.into(), (if v.hurwitz { 1.0 } else { 0.0 }).into(), v.abscissa.into()]);
    }
    files.push(ctx.write("vertices.csv", &t.render())?);

    let grid = ctx.cfg.grid()?;
    let nominal_stable = mucontrol::verify::closed_loop(&up.nominal, &k)?.is_hurwitz()?.hurwitz;
    let mut rows: Vec<(&str, Cell)> = vec![
        ("vertices", (vr.verdicts.len() as f64).into()),
        ("unstable_vertices", (vr.unstable_count() as f64).into()),
        ("worst_abscissa", vr.worst_abscissa.into()),
        ("nominal_stable", (if nominal_stable { 1.0 } else { 0.0 }).into()),
    ];
    let mut envelope_pass = false;
    if nominal_stable {
        let env = monte_carlo_freq(&k, &up, &ws, &wt, ctx.cfg.verification.monte_carlo, ctx.cfg.seed, &grid)?;
        let check = check_weight_bounds(&env, ctx.cfg.verification.slack);
        envelope_pass = check.pass;
        let n = env.channels();
        let mut header = vec!["omega".to_string()];
        header.extend(channel_names("s", n));
        header.extend(channel_names("t", n));
        header.extend((1..=n).map(|i| format!("s_row{i}")));
        header.extend((1..=n).map(|i| format!("t_row{i}")));
        header.extend((1..=n).map(|i| format!("inv_ws{i}")));
        header.extend((1..=n).map(|i| format!("inv_wt{i}")));
        let mut t = CsvTable::new(ctx.stamp.clone(), header);
        for (kk, &w) in grid.points().iter().enumerate() {
            let mut row = vec![w];
            row.extend(&env.s_entries[kk]);
            row.extend(&env.t_entries[kk]);
            row.extend(&env.s_channel[kk]);
            row.extend(&env.t_channel[kk]);
            row.extend(&env.s_template[kk]);
            row.extend(&env.t_template[kk]);
            t.push(row);
        }
        files.push(ctx.write("envelope.csv", &t.render())?);
        rows.extend([
            ("monte_carlo_samples", (env.samples as f64).into()),
            ("unstable_samples", (check.unstable_samples as f64).into()),
            ("margin_db", check.margin_db.into()),
            ("worst_ratio", env.worst_ratio().into()),
            ("worst_omega", check.worst_omega.into()),
            ("envelope_pass", (if check.pass { 1.0 } else { 0.0 }).into()),
        ]);
    }
    files.push(ctx.summary("verify_summary.csv", rows)?);
    if !vr.all_stable() || !envelope_pass {
        return Err(Failure::Verification(format!(
            "{} of {} vertices unstable (worst abscissa {:.6e}); nominal stable: {nominal_stable}; envelope within templates: {envelope_pass}",
            vr.unstable_count(),
            vr.verdicts.len(),
            vr.worst_abscissa
        )));
    }
    Ok(files)
}

pub fn cmd_simulate(ctx: &Ctx, controller: Option<&Path>, check_dt: bool) -> Result<Vec<PathBuf>, Failure> {
    let k = load_controller(ctx, controller)?.system();
    let model = ctx.cfg.robot()?;
    let sim = &ctx.cfg.simulation;
    let reference = if sim.step.iter().all(|&v| v == 0.0) {
        Reference::Zero
    } else {
        Reference::Step { value: sim.step.clone(), at: 0.0 }
    };
    let opts = SimOptions { t_end: sim.t_end, dt: sim.dt, x0: None };
    let trace = simulate_closed_loop(&model, &k, &reference, &opts)?;
    let mut files = Vec::new();
    let m = trace.y[0].len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("q{i}")));
    header.extend((1..=m).map(|i| format!("qdot{i}")));
    header.extend((1..=m).map(|i| format!("u{i}")));
    header.extend((1..=m).map(|i| format!("y{i}")));
    header.extend((1..=m).map(|i| format!("r{i}")));
    header.extend((1..=m).map(|i| format!("e{i}")));
    let mut t = CsvTable::new(ctx.stamp.clone(), header);
    for i in 0..trace.len() {
        let mut row = vec![trace.t[i]];
        row.extend(&trace.x[i]);
        row.extend(&trace.u[i]);
        row.extend(&trace.y[i]);
        row.extend(&trace.r[i]);
        row.extend(trace.r[i].iter().zip(&trace.y[i]).map(|(r, y)| r - y));
        t.push(row);
    }
    files.push(ctx.write("trace.csv", &t.render())?);

    let err = trace.final_error();
    let mut rows: Vec<(&str, Cell)> = vec![("t_end", sim.t_end.into()), ("dt", sim.dt.into())];
    let names = ["final_error_1", "final_error_2"];
    for (name, e) in names.iter().zip(&err) {
        rows.push((name, (*e).into()));
    }
    if check_dt || sim.check_dt_halving {
        let half = simulate_closed_loop(&model, &k, &reference, &SimOptions { dt: sim.dt * 0.5, ..opts })?;
        let (a, b) = (trace.x.last().unwrap(), half.x.last().unwrap());
        let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let diff = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        rows.push(("final_state_delta_dt_halved", (if scale > 0.0 { diff / scale } else { diff }).into()));
    }
    files.push(ctx.summary("simulate_summary.csv", rows)?);
    Ok(files)
}
