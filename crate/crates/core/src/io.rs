//! CSV emission and parsing for solution tables, gap reports, and path
//! dumps.
//!
//! Files are bit-stable: '.' decimal point, ',' separator, LF line endings,
//! one header row, and floats printed with 17 significant digits
//! (`{:.16e}`), which round-trips every finite `f64` exactly.  Every writer
//! has a reader that reproduces the written values bit-for-bit.

use crate::mc::PathEnsemble;
use crate::solver::EquilibriumSolution;
use crate::verifier::{EquilibriumReport, GapCell, GapEstimate};
use std::io::{BufRead, Write};
use thiserror::Error;

pub const SOLUTION_HEADER: &str = "t,pi_tilde,a,f,m,c_star,K,clamped";
pub const GAP_HEADER: &str = "t,x,c_pert,pi_pert,h,gap,se,pass";
pub const PATHS_HEADER: &str = "path_id,X_T,utility_integral";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("expected header {expected:?}, got {got:?}")]
    Header { expected: &'static str, got: String },
    #[error("line {line}: expected {expected} fields, got {got}")]
    FieldCount {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}, field {field}: bad float {value:?}")]
    Float {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}, field {field}: bad integer {value:?}")]
    Int {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}, field {field}: expected true or false, got {value:?}")]
    Bool {
        line: usize,
        field: &'static str,
        value: String,
    },
}

/// 17 significant digits: the shortest format guaranteed to reproduce any
/// finite `f64` exactly on re-parse.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str, line: usize, field: &'static str) -> Result<f64, CsvError> {
    s.parse().map_err(|_| CsvError::Float {
        line,
        field,
        value: s.to_string(),
    })
}

fn parse_usize(s: &str, line: usize, field: &'static str) -> Result<usize, CsvError> {
    s.parse().map_err(|_| CsvError::Int {
        line,
        field,
        value: s.to_string(),
    })
}

fn parse_bool(s: &str, line: usize, field: &'static str) -> Result<bool, CsvError> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(CsvError::Bool {
            line,
            field,
            value: other.to_string(),
        }),
    }
}

fn split_fields(line: &str, n: usize, line_no: usize) -> Result<Vec<&str>, CsvError> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != n {
        return Err(CsvError::FieldCount {
            line: line_no,
            expected: n,
            got: fields.len(),
        });
    }
    Ok(fields)
}

fn check_header(
    lines: &mut impl Iterator<Item = std::io::Result<String>>,
    expected: &'static str,
) -> Result<(), CsvError> {
    let got = lines.next().transpose()?.unwrap_or_default();
    if got != expected {
        return Err(CsvError::Header { expected, got });
    }
    Ok(())
}

// === solution table =======================================================

/// One grid node of a solved model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionRow {
    pub t: f64,
    pub pi_tilde: f64,
    pub a: f64,
    pub f: f64,
    pub m: f64,
    pub c_star: f64,
    pub human_capital: f64,
    pub clamped: bool,
}

pub fn solution_rows(sol: &EquilibriumSolution) -> Vec<SolutionRow> {
    let grid = &sol.exposure.grid;
    (0..grid.n_nodes())
        .map(|i| SolutionRow {
            t: grid.node(i),
            pi_tilde: sol.exposure.pi_tilde[i],
            a: sol.exposure.a[i],
            f: sol.exposure.f[i],
            m: sol.policy.m[i],
            c_star: sol.policy.c_star[i],
            human_capital: sol.policy.human_capital[i],
            clamped: sol.policy.clamped[i],
        })
        .collect()
}

pub fn write_solution_csv<W: Write>(mut out: W, rows: &[SolutionRow]) -> Result<(), CsvError> {
    writeln!(out, "{SOLUTION_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt(r.t),
            fmt(r.pi_tilde),
            fmt(r.a),
            fmt(r.f),
            fmt(r.m),
            fmt(r.c_star),
            fmt(r.human_capital),
            r.clamped
        )?;
    }
    Ok(())
}

pub fn read_solution_csv<R: BufRead>(input: R) -> Result<Vec<SolutionRow>, CsvError> {
    let mut lines = input.lines();
    check_header(&mut lines, SOLUTION_HEADER)?;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let n = i + 2;
        let f = split_fields(&line, 8, n)?;
        rows.push(SolutionRow {
            t: parse_f64(f[0], n, "t")?,
            pi_tilde: parse_f64(f[1], n, "pi_tilde")?,
            a: parse_f64(f[2], n, "a")?,
            f: parse_f64(f[3], n, "f")?,
            m: parse_f64(f[4], n, "m")?,
            c_star: parse_f64(f[5], n, "c_star")?,
            human_capital: parse_f64(f[6], n, "K")?,
            clamped: parse_bool(f[7], n, "clamped")?,
        });
    }
    Ok(rows)
}

// === gap report ===========================================================

pub fn write_gap_report_csv<W: Write>(
    mut out: W,
    report: &EquilibriumReport,
) -> Result<(), CsvError> {
    writeln!(out, "{GAP_HEADER}")?;
    for cell in &report.cells {
        let e = &cell.estimate;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt(e.t),
            fmt(e.x),
            fmt(e.consumption),
            fmt(e.exposure),
            fmt(e.width),
            fmt(e.gap),
            fmt(e.se),
            cell.pass
        )?;
    }
    Ok(())
}

pub fn read_gap_report_csv<R: BufRead>(input: R) -> Result<Vec<GapCell>, CsvError> {
    let mut lines = input.lines();
    check_header(&mut lines, GAP_HEADER)?;
    let mut cells = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let n = i + 2;
        let f = split_fields(&line, 8, n)?;
        cells.push(GapCell {
            estimate: GapEstimate {
                t: parse_f64(f[0], n, "t")?,
                x: parse_f64(f[1], n, "x")?,
                consumption: parse_f64(f[2], n, "c_pert")?,
                exposure: parse_f64(f[3], n, "pi_pert")?,
                width: parse_f64(f[4], n, "h")?,
                gap: parse_f64(f[5], n, "gap")?,
                se: parse_f64(f[6], n, "se")?,
            },
            pass: parse_bool(f[7], n, "pass")?,
        });
    }
    Ok(cells)
}

// === path dump ============================================================

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRow {
    pub path_id: usize,
    pub terminal_wealth: f64,
    pub utility_integral: f64,
}

pub fn write_paths_csv<W: Write>(mut out: W, ensemble: &PathEnsemble) -> Result<(), CsvError> {
    writeln!(out, "{PATHS_HEADER}")?;
    for (i, (&x, &w)) in ensemble
        .terminal_wealth
        .iter()
        .zip(&ensemble.utility_integral)
        .enumerate()
    {
        writeln!(out, "{i},{},{}", fmt(x), fmt(w))?;
    }
    Ok(())
}

pub fn read_paths_csv<R: BufRead>(input: R) -> Result<Vec<PathRow>, CsvError> {
    let mut lines = input.lines();
    check_header(&mut lines, PATHS_HEADER)?;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let n = i + 2;
        let f = split_fields(&line, 3, n)?;
        rows.push(PathRow {
            path_id: parse_usize(f[0], n, "path_id")?,
            terminal_wealth: parse_f64(f[1], n, "X_T")?,
            utility_integral: parse_f64(f[2], n, "utility_integral")?,
        });
    }
    Ok(rows)
}

// === sweep table ==========================================================

/// One row of the long-format parameter-sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub t: f64,
    pub pi_tilde: f64,
    pub c_star: f64,
    pub human_capital: f64,
}

pub const SWEEP_HEADER: &str = "param,value,t,pi_tilde,c_star,K";

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<(), CsvError> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.param,
            fmt(r.value),
            fmt(r.t),
            fmt(r.pi_tilde),
            fmt(r.c_star),
            fmt(r.human_capital)
        )?;
    }
    Ok(())
}

pub fn read_sweep_csv<R: BufRead>(input: R) -> Result<Vec<SweepRow>, CsvError> {
    let mut lines = input.lines();
    check_header(&mut lines, SWEEP_HEADER)?;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let n = i + 2;
        let f = split_fields(&line, 6, n)?;
        rows.push(SweepRow {
            param: f[0].to_string(),
            value: parse_f64(f[1], n, "value")?,
            t: parse_f64(f[2], n, "t")?,
            pi_tilde: parse_f64(f[3], n, "pi_tilde")?,
            c_star: parse_f64(f[4], n, "c_star")?,
            human_capital: parse_f64(f[5], n, "K")?,
        });
    }
    Ok(rows)
}
