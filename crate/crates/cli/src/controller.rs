//! Controller files: state-space matrices as CSV blocks, optionally
//! followed or replaced by a rational-entry block.
//!
//! ```text
//! [A 2x2]
//! -1.0,0.0
//! 0.0,-2.0
//! [B 2x1]
//! ...
//! [tf 2x2]
//! 1,1,num,1.0,2.0
//! 1,1,den,1.0,3.0,2.0
//! ```

use std::fmt::Write as _;

use mucontrol::linalg::Mat;
use mucontrol::lti::{RationalTF, StateSpace, TFMatrix};
use mucontrol::verify::csv::fmt_f64;

#[derive(Clone, Debug, PartialEq)]
pub struct ControllerFile {
    pub ss: Option<StateSpace>,
    pub tf: Option<TFMatrix>,
}

impl ControllerFile {
    /// State-space form, realizing the rational form if that is all there is.
    pub fn system(&self) -> StateSpace {
        match (&self.ss, &self.tf) {
            (Some(ss), _) => ss.clone(),
            (None, Some(tf)) => tf.to_ss(),
            (None, None) => unreachable!("parser requires one form"),
        }
    }
}

fn write_matrix(out: &mut String, name: &str, m: &Mat) {
    let _ = writeln!(out, "[{name} {}x{}]", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
}

pub fn render(comment: &str, ss: Option<&StateSpace>, tf: Option<&TFMatrix>) -> String {
    let mut out = String::new();
    for line in comment.lines() {
        let _ = writeln!(out, "# {line}");
    }
    if let Some(ss) = ss {
        write_matrix(&mut out, "A", ss.a());
        write_matrix(&mut out, "B", ss.b());
        write_matrix(&mut out, "C", ss.c());
        write_matrix(&mut out, "D", ss.d());
    }
    if let Some(tf) = tf {
        let _ = writeln!(out, "[tf {}x{}]", tf.rows(), tf.cols());
        for i in 0..tf.rows() {
            for j in 0..tf.cols() {
                let g = tf.entry(i, j);
                for (tag, c) in [("num", g.num()), ("den", g.den())] {
                    let v: Vec<String> = c.iter().map(|&x| fmt_f64(x)).collect();
                    let _ = writeln!(out, "{},{},{tag},{}", i + 1, j + 1, v.join(","));
                }
            }
        }
    }
    out
}

fn parse_f64(s: &str, line: usize) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("line {line}: '{}' is not a number", s.trim()))
}

struct Section {
    name: String,
    rows: usize,
    cols: usize,
    lines: Vec<(usize, String)>,
}

fn header(line: &str, no: usize) -> Result<Section, String> {
    let inner = line.trim().trim_start_matches('[').trim_end_matches(']');
    let (name, dims) = inner.split_once(' ').ok_or(format!("line {no}: expected '[NAME RxC]'"))?;
    let (r, c) = dims.trim().split_once('x').ok_or(format!("line {no}: expected dimensions RxC"))?;
    let rows = r.parse().map_err(|_| format!("line {no}: bad row count"))?;
    let cols = c.parse().map_err(|_| format!("line {no}: bad column count"))?;
    Ok(Section { name: name.to_string(), rows, cols, lines: Vec::new() })
}

fn matrix(sec: &Section) -> Result<Mat, String> {
    // Rows of a zero-column matrix render as blank lines.
    if sec.cols == 0 && sec.lines.is_empty() {
        return Ok(Mat::zeros(sec.rows, 0));
    }
    if sec.lines.len() != sec.rows {
        return Err(format!("[{}]: {} rows, header says {}", sec.name, sec.lines.len(), sec.rows));
    }
    let mut m = Mat::zeros(sec.rows, sec.cols);
    for (i, (no, l)) in sec.lines.iter().enumerate() {
        let cells: Vec<&str> = l.split(',').collect();
        if cells.len() != sec.cols {
            return Err(format!("line {no}: {} values, expected {}", cells.len(), sec.cols));
        }
        for (j, c) in cells.iter().enumerate() {
            m[(i, j)] = parse_f64(c, *no)?;
        }
    }
    Ok(m)
}

fn transfer(sec: &Section) -> Result<TFMatrix, String> {
    let mut num = vec![vec![None; sec.cols]; sec.rows];
    let mut den = vec![vec![None; sec.cols]; sec.rows];
    for (no, l) in &sec.lines {
        let cells: Vec<&str> = l.split(',').map(str::trim).collect();
        if cells.len() < 4 {
            return Err(format!("line {no}: expected 'row,col,num|den,coefficients...'"));
        }
        let i: usize = cells[0].parse().map_err(|_| format!("line {no}: bad row index"))?;
        let j: usize = cells[1].parse().map_err(|_| format!("line {no}: bad column index"))?;
        if i == 0 || j == 0 || i > sec.rows || j > sec.cols {
            return Err(format!("line {no}: entry ({i}, {j}) outside {}x{}", sec.rows, sec.cols));
        }
        let coef = cells[3..].iter().map(|c| parse_f64(c, *no)).collect::<Result<Vec<_>, _>>()?;
        let slot = match cells[2] {
            "num" => &mut num[i - 1][j - 1],
            "den" => &mut den[i - 1][j - 1],
            other => return Err(format!("line {no}: expected num or den, got '{other}'")),
        };
        if slot.replace(coef).is_some() {
            return Err(format!("line {no}: duplicate {} for entry ({i}, {j})", cells[2]));
        }
    }
    let mut entries = vec![vec![RationalTF::constant(0.0); sec.cols]; sec.rows];
    for i in 0..sec.rows {
        for j in 0..sec.cols {
            match (num[i][j].take(), den[i][j].take()) {
                (None, None) => {}
                (Some(n), Some(d)) => {
                    entries[i][j] = RationalTF::new(n, d).map_err(|e| format!("entry ({}, {}): {e}", i + 1, j + 1))?
                }
                _ => return Err(format!("entry ({}, {}) needs both num and den", i + 1, j + 1)),
            }
        }
    }
    TFMatrix::new(entries).map_err(|e| e.to_string())
}

pub fn parse(text: &str) -> Result<ControllerFile, String> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            sections.push(header(line, no)?);
        } else {
            sections.last_mut().ok_or(format!("line {no}: data before any section"))?.lines.push((no, line.to_string()));
        }
    }
    let find = |n: &str| sections.iter().find(|s| s.name == n);
    let names: Vec<&str> = sections.iter().map(|s| s.name.as_str()).collect();
    if let Some(bad) = names.iter().find(|n| !["A", "B", "C", "D", "tf"].contains(n)) {
        return Err(format!("unknown section [{bad}]"));
    }
    let ss = match (find("A"), find("B"), find("C"), find("D")) {
        (None, None, None, None) => None,
        (Some(a), Some(b), Some(c), Some(d)) => Some(
            StateSpace::new(matrix(a)?, matrix(b)?, matrix(c)?, matrix(d)?).map_err(|e| e.to_string())?,
        ),
        _ => return Err("state-space form needs all of [A], [B], [C], [D]".into()),
    };
    let tf = find("tf").map(transfer).transpose()?;
    if ss.is_none() && tf.is_none() {
        return Err("no controller data".into());
    }
    if let (Some(s), Some(t)) = (&ss, &tf) {
        if s.ny() != t.rows() || s.nu() != t.cols() {
            return Err("state-space and rational forms disagree in size".into());
        }
    }
    Ok(ControllerFile { ss, tf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mucontrol::robot::paper_2r_controller;

    #[test]
    fn round_trip_both_forms() {
        let tf = paper_2r_controller();
        let ss = tf.to_ss();
        let text = render("config=abc seed=0", Some(&ss), Some(&tf));
        let f = parse(&text).unwrap();
        assert_eq!(f.ss.as_ref().unwrap(), &ss);
        assert_eq!(f.tf.as_ref().unwrap(), &tf);
    }

    #[test]
    fn rational_only() {
        let f = parse("[tf 1x2]\n1,1,num,1\n1,1,den,1,1\n").unwrap();
        let k = f.system();
        assert_eq!((k.ny(), k.nu(), k.nx()), (1, 2, 1));
    }

    #[test]
    fn static_gain() {
        let f = parse("[A 0x0]\n[B 0x2]\n[C 2x0]\n[D 2x2]\n0,0\n0,0\n").unwrap();
        assert_eq!(f.system().nx(), 0);
    }

    #[test]
    fn errors() {
        assert!(parse("").is_err());
        assert!(parse("[A 1x1]\n1\n").is_err());
        assert!(parse("[D 1x1]\n1,2\n").is_err());
        assert!(parse("[tf 1x1]\n1,1,num,1,2\n").is_err());
        assert!(parse("[tf 1x1]\n1,1,num,1,2,3\n1,1,den,1,1\n").is_err());
        assert!(parse("[Q 1x1]\n1\n").is_err());
    }
}
