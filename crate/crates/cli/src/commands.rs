//! Subcommand implementations.  Each one writes its artifacts under the
//! resolved output directory and returns the process exit code.  Summaries
//! embed the fully materialized configuration and contain no timestamps, so
//! rerunning the same invocation reproduces every output byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use mvu_core::grid::TimeGrid;
use mvu_core::io::{
    write_gap_report_csv, write_paths_csv, write_solution_csv, write_sweep_csv, solution_rows,
    SweepRow,
};
use mvu_core::mc::{
    estimate_moments, estimate_objective, simulate_paths, Curve, MomentEstimate, StrategySpec,
};
use mvu_core::solver::{solve, Convention, EquilibriumSolution, SolveMethod};
use mvu_core::verifier::ExcludedPoint;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, EXIT_VERIFICATION};

pub const SOLUTION_CSV: &str = "solution.csv";
pub const SOLVE_SUMMARY: &str = "solve_summary.json";
pub const SIMULATE_SUMMARY: &str = "simulate_summary.json";
pub const PATHS_CSV: &str = "paths.csv";
pub const GAP_REPORT_CSV: &str = "gap_report.csv";
pub const VERIFY_SUMMARY: &str = "verify_summary.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_SUMMARY: &str = "sweep_summary.json";

fn solve_configured(config: &RunConfig) -> Result<EquilibriumSolution, CliError> {
    let grid = TimeGrid::new(config.model.horizon, config.grid.n_steps)?;
    Ok(solve(&config.model, &grid, &config.solver)?)
}

fn ensure_out_dir(config: &RunConfig) -> Result<&Path, CliError> {
    fs::create_dir_all(&config.out_dir)?;
    Ok(&config.out_dir)
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_csv<F>(path: PathBuf, emit: F) -> Result<(), CliError>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), mvu_core::io::CsvError>,
{
    let mut buf = Vec::new();
    emit(&mut buf).map_err(|e| match e {
        mvu_core::io::CsvError::Io(io) => CliError::Io(io),
        other => CliError::Usage(other.to_string()),
    })?;
    fs::write(path, buf)?;
    Ok(())
}

// === solve =================================================================

#[derive(Serialize)]
struct TerminalChecks {
    a: f64,
    f: f64,
    human_capital: f64,
    /// True iff a(T) = 1, f(T) = 1, K(T) = 0 hold exactly.
    exact: bool,
}

#[derive(Serialize)]
struct SolveResult {
    convention: Convention,
    method: SolveMethod,
    iterations: usize,
    residual: f64,
    /// Sup-norm disagreement of the two discretizations (method = both).
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_method_gap: Option<f64>,
    n_clamped: usize,
    terminal: TerminalChecks,
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    result: SolveResult,
    outputs: Vec<&'static str>,
}

fn solve_result(sol: &EquilibriumSolution) -> SolveResult {
    let n = sol.exposure.grid.n_steps();
    let (a_t, f_t, k_t) = (
        sol.exposure.a[n],
        sol.exposure.f[n],
        sol.policy.human_capital[n],
    );
    SolveResult {
        convention: sol.convention,
        method: sol.method,
        iterations: sol.exposure.iterations,
        residual: sol.exposure.residual,
        cross_method_gap: sol.cross_method_gap,
        n_clamped: sol.policy.n_clamped(),
        terminal: TerminalChecks {
            a: a_t,
            f: f_t,
            human_capital: k_t,
            exact: a_t == 1.0 && f_t == 1.0 && k_t == 0.0,
        },
    }
}

pub fn run_solve(config: &RunConfig) -> Result<i32, CliError> {
    let sol = solve_configured(config)?;
    let out = ensure_out_dir(config)?;
    let rows = solution_rows(&sol);
    write_csv(out.join(SOLUTION_CSV), |buf| {
        write_solution_csv(buf, &rows)
    })?;
    let summary = SolveSummary {
        command: "solve",
        config,
        result: solve_result(&sol),
        outputs: vec![SOLUTION_CSV],
    };
    write_json(out.join(SOLVE_SUMMARY), &summary)?;
    Ok(0)
}

// === simulate ==============================================================

/// A Monte Carlo estimate against its closed-form target.  The pass rule is
/// `|estimate - closed_form| <= 3 se` with a `1e-9 * max(1, |closed_form|)`
/// floor so the marker stays meaningful for deterministic runs whose
/// standard error is exactly zero.
#[derive(Serialize)]
struct MomentCheck {
    estimate: f64,
    se: f64,
    closed_form: f64,
    abs_error: f64,
    pass: bool,
}

fn check(estimate: f64, se: f64, closed_form: f64) -> MomentCheck {
    let abs_error = (estimate - closed_form).abs();
    MomentCheck {
        estimate,
        se,
        closed_form,
        abs_error,
        pass: abs_error <= 3.0 * se + 1e-9 * closed_form.abs().max(1.0),
    }
}

#[derive(Serialize)]
struct SimulateResult {
    moments: MomentEstimate,
    /// Variance-aversion scale `gamma / (x0 + K(0))` used in the objective.
    psi: f64,
    discounted_mean: MomentCheck,
    discounted_second_moment: MomentCheck,
    objective: MomentCheck,
    min_total_wealth: f64,
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    result: SimulateResult,
    outputs: Vec<&'static str>,
}

pub fn run_simulate(config: &RunConfig) -> Result<i32, CliError> {
    let sol = solve_configured(config)?;
    let cfg = &config.model;
    let x0 = cfg.initial_wealth;

    let strategy = StrategySpec::equilibrium(&sol);
    let capital = Curve::from_grid(&sol.policy.grid, &sol.policy.human_capital);
    let ensemble = simulate_paths(cfg, &strategy, &capital, &config.simulation, 0.0, x0)?;

    let moments = estimate_moments(&ensemble, cfg.preferences.delta, 0.0)?;
    let psi = cfg.preferences.gamma / (x0 + sol.capital_at(0.0));
    let objective = estimate_objective(&moments, psi, cfg.preferences.beta)?;
    let (y_cf, z_cf) = sol.expected_terminal_moments(0.0, x0)?;
    let value_cf = sol.value_function(0.0, x0)?;
    let min_total = ensemble
        .min_total_wealth
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    let out = ensure_out_dir(config)?;
    let mut outputs = Vec::new();
    if config.dump_paths {
        write_csv(out.join(PATHS_CSV), |buf| {
            write_paths_csv(buf, &ensemble)
        })?;
        outputs.push(PATHS_CSV);
    }
    let summary = SimulateSummary {
        command: "simulate",
        config,
        result: SimulateResult {
            moments,
            psi,
            discounted_mean: check(moments.y_hat, moments.se_y, y_cf),
            discounted_second_moment: check(moments.z_hat, moments.se_z, z_cf),
            objective: check(objective.value, objective.se, value_cf),
            min_total_wealth: min_total,
        },
        outputs,
    };
    write_json(out.join(SIMULATE_SUMMARY), &summary)?;
    Ok(0)
}

// === verify ================================================================

#[derive(Serialize)]
struct VerifySummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    all_pass: bool,
    n_cells: usize,
    n_pass: usize,
    pass_rate: f64,
    slack_coefficient: f64,
    seed: u64,
    excluded: &'a [ExcludedPoint],
    outputs: Vec<&'static str>,
}

pub fn run_verify(config: &RunConfig) -> Result<i32, CliError> {
    let sol = solve_configured(config)?;
    let report = config.verifier.run(&sol)?;
    let out = ensure_out_dir(config)?;
    write_csv(out.join(GAP_REPORT_CSV), |buf| {
        write_gap_report_csv(buf, &report)
    })?;
    let summary = VerifySummary {
        command: "verify",
        config,
        all_pass: report.all_pass(),
        n_cells: report.n_cells,
        n_pass: report.n_pass,
        pass_rate: report.pass_rate,
        slack_coefficient: report.slack_coefficient,
        seed: report.seed,
        excluded: &report.excluded,
        outputs: vec![GAP_REPORT_CSV],
    };
    write_json(out.join(VERIFY_SUMMARY), &summary)?;
    Ok(if report.all_pass() { 0 } else { EXIT_VERIFICATION })
}

// === sweep =================================================================

#[derive(Serialize)]
struct SweepValueStatus {
    value: f64,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    param: &'static str,
    n_ok: usize,
    n_error: usize,
    results: Vec<SweepValueStatus>,
    outputs: Vec<&'static str>,
}

/// One solve per value; failures are recorded per value and the sweep
/// continues, so a single bad input cannot hide results for the rest.
/// Expects `config.sweep` to be populated (from the config file or flags).
pub fn run_sweep(config: &RunConfig) -> Result<i32, CliError> {
    let section = config.sweep.as_ref().ok_or_else(|| {
        CliError::Usage(
            "sweep needs --param and --values, or a \"sweep\" section in the config".into(),
        )
    })?;
    let (param, values) = (section.param, &section.values);
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut results = Vec::with_capacity(values.len());
    for &value in values.iter() {
        let mut model = config.model.clone();
        param.apply(&mut model, value);
        let solved = TimeGrid::new(model.horizon, config.grid.n_steps)
            .map_err(CliError::from)
            .and_then(|grid| solve(&model, &grid, &config.solver).map_err(CliError::from));
        match solved {
            Ok(sol) => {
                let grid = &sol.exposure.grid;
                for i in 0..grid.n_nodes() {
                    rows.push(SweepRow {
                        param: param.name().to_owned(),
                        value,
                        t: grid.node(i),
                        pi_tilde: sol.exposure.pi_tilde[i],
                        c_star: sol.policy.c_star[i],
                        human_capital: sol.policy.human_capital[i],
                    });
                }
                results.push(SweepValueStatus {
                    value,
                    status: "ok",
                    iterations: Some(sol.exposure.iterations),
                    residual: Some(sol.exposure.residual),
                    kind: None,
                    message: None,
                });
            }
            Err(err) => results.push(SweepValueStatus {
                value,
                status: "error",
                iterations: None,
                residual: None,
                kind: Some(err.kind()),
                message: Some(err.to_string()),
            }),
        }
    }
    let out = ensure_out_dir(config)?;
    write_csv(out.join(SWEEP_CSV), |buf| write_sweep_csv(buf, &rows))?;
    let n_ok = results.iter().filter(|r| r.status == "ok").count();
    let summary = SweepSummary {
        command: "sweep",
        config,
        param: param.name(),
        n_ok,
        n_error: results.len() - n_ok,
        results,
        outputs: vec![SWEEP_CSV],
    };
    write_json(out.join(SWEEP_SUMMARY), &summary)?;
    Ok(0)
}
