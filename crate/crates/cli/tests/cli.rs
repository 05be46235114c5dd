use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const PRESET: &str = include_str!("../presets/paper2r.toml");

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mucontrol")).args(args).output().expect("spawn")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// Preset with a coarse grid and short horizons so the runs stay quick.
fn small_config(dir: &Path, extra: &[(&str, &str)]) -> String {
    let mut text = PRESET.replace("points = 100", "points = 20").replace("t_end = 10.0", "t_end = 2.0");
    for (from, to) in extra {
        text = text.replace(from, to);
    }
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn summary_value(text: &str, key: &str) -> String {
    text.lines().find_map(|l| l.strip_prefix(&format!("{key},"))).unwrap_or_else(|| panic!("no {key}")).to_string()
}

#[test]
fn plant_writes_bounds_and_bode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["plant", "--preset", "paper2r", "--out", out.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let bounds = read(&out, "bounds.csv");
    let mut lines = bounds.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# config=") && comment.ends_with("seed=7"));
    assert_eq!(lines.next().unwrap(), "entry,lo,hi,midpoint,half_width");
    assert_eq!(lines.count(), 10);
    assert_eq!(summary_value(&read(&out, "plant_summary.csv"), "vertices"), "1.0240000000000000e3");
    let bode = read(&out, "bode.csv");
    assert_eq!(bode.lines().count(), 2 + 100);
    // 17 significant digits in every numeric cell.
    let row = bode.lines().nth(2).unwrap();
    for cell in row.split(',') {
        let mantissa = cell.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 17, "{cell}");
    }
}

#[test]
fn verify_preset_controller_fails_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), &[]);
    let out = dir.path().join("v");
    let o = run(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    let s = read(&out, "verify_summary.csv");
    assert_eq!(summary_value(&s, "unstable_vertices"), "1.6500000000000000e2");
    assert_eq!(read(&out, "vertices.csv").lines().count(), 2 + 1024);
    assert!(read(&out, "envelope.csv").lines().nth(1).unwrap().starts_with("omega,s11,s12"));
}

#[test]
fn simulate_with_dt_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), &[]);
    let out = dir.path().join("s");
    let o = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--check-dt"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = read(&out, "simulate_summary.csv");
    let delta: f64 = summary_value(&s, "final_state_delta_dt_halved").parse().unwrap();
    assert!(delta < 1e-6, "{delta}");
    let trace = read(&out, "trace.csv");
    assert_eq!(trace.lines().nth(1).unwrap(), "t,q1,q2,qdot1,qdot2,u1,u2,y1,y2,r1,r2,e1,e2");
    assert_eq!(trace.lines().count(), 2 + 2001);
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = run(&["plant", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let bad = small_config(dir.path(), &[("density = 41", "density = 1")]);
    let o = run(&["plant", "--config", &bad, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("plant.density"));
    let o = run(&["plant", "--preset", "nope"]);
    assert_eq!(code(&o), 2);
    let ctl = dir.path().join("k.ctl");
    fs::write(&ctl, "[tf 1x1]\n1,1,num,1\n1,1,den,1,1\n").unwrap();
    let cfg = small_config(dir.path(), &[]);
    let o = run(&["verify", "--config", &cfg, "--controller", ctl.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn synth_not_robust_exits_3_with_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), &[("max_iter = 30", "max_iter = 1")]);
    let out = dir.path().join("k");
    let o = run(&["synth", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary_value(&read(&out, "synth_summary.csv"), "verdict"), "notrobust");
    assert_eq!(read(&out, "iterations.csv").lines().count(), 3);
    assert_eq!(read(&out, "mu.csv").lines().count(), 2 + 20);
    assert!(read(&out, "controller_bode.csv").lines().nth(1).unwrap() == "omega,k11,k12,k21,k22");

    // The synthesized controller file feeds back into verify.
    let ctl = out.join("controller.ctl");
    let o = run(&["verify", "--config", &cfg, "--controller", ctl.to_str().unwrap(), "--out", dir.path().join("v").to_str().unwrap()]);
    assert!(matches!(code(&o), 0 | 4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn fixed_structure_synth_writes_rational_block() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        dir.path(),
        &[
            ("mode = \"unstructured\"", "mode = \"fixed\""),
            ("starts = 8", "starts = 1"),
            ("max_evals = 3000", "max_evals = 40"),
            ("rounds = 4", "rounds = 1"),
        ],
    );
    let out = dir.path().join("f");
    let o = run(&["synth", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let ctl = read(&out, "controller.ctl");
    assert!(ctl.contains("[tf 2x2]") && ctl.contains("[A 12x12]"), "{ctl}");
}
