//! Monte Carlo engine for the wealth dynamics
//! `dX = [r X + (mu - r) D(t) + l(t) - c(t)] dt + sigma D(t) dW`
//! under deterministic-in-time strategies, where `D(t)` is the dollar
//! amount held in the risky asset.
//!
//! Two stepping schemes are provided:
//!
//! * `exact-combined` — simulates total wealth `Z = X + K(t)` (financial
//!   plus human capital), which under an exposure proportional to `Z` is a
//!   geometric diffusion with
//!   `d ln Z = [r + (mu - r) pi - sigma^2 pi^2 / 2] dt + sigma pi dW`.
//!   The state is advanced by exponentiating per-step trapezoid quadratures
//!   of drift and variance, so the only error is in the time integrals,
//!   never in the state distribution, and `Z > 0` holds on every path by
//!   construction.
//! * `euler-wealth` — Euler-Maruyama directly on liquid wealth `X` with
//!   left-endpoint controls.  Wealth may go negative; this scheme exists
//!   for spike-perturbed strategies whose exposure is a fraction of `X`
//!   itself, where the combined-wealth closed form does not apply.
//!
//! Per-path randomness comes from counter-based substreams keyed by
//! `(seed, path index)`, so ensembles are bit-identical for a fixed seed
//! regardless of thread count, and two strategies simulated from the same
//! seed are paired increment-by-increment (common random numbers).

use crate::grid::TimeGrid;
use crate::model::{ModelConfig, ModelError};
use crate::solver::EquilibriumSolution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Time-stepping scheme for the wealth state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ExactCombined,
    EulerWealth,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::ExactCombined => write!(f, "exact-combined"),
            Scheme::EulerWealth => write!(f, "euler-wealth"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_paths: 100_000,
            n_steps: 500,
            seed: 42,
            scheme: Scheme::ExactCombined,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.n_paths == 0 {
            return Err(McError::NoPaths);
        }
        if self.n_steps == 0 {
            return Err(McError::NoSteps);
        }
        Ok(())
    }
}

/// A deterministic function of time on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Curve {
    Constant { value: f64 },
    /// Piecewise-linear through `(times[i], values[i])`, clamped to the end
    /// values outside the sampled range.
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

impl Curve {
    pub fn constant(value: f64) -> Self {
        Curve::Constant { value }
    }

    /// Samples per-node values from a solver grid.
    pub fn from_grid(grid: &TimeGrid, values: &[f64]) -> Self {
        debug_assert_eq!(values.len(), grid.n_nodes());
        Curve::Sampled {
            times: grid.nodes().collect(),
            values: values.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), McError> {
        match self {
            Curve::Constant { value } => {
                if !value.is_finite() {
                    return Err(McError::Curve {
                        reason: "constant value must be finite",
                    });
                }
            }
            Curve::Sampled { times, values } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(McError::Curve {
                        reason: "sampled curve needs matching times/values with at least 2 points",
                    });
                }
                if !times.windows(2).all(|w| w[0] < w[1]) {
                    return Err(McError::Curve {
                        reason: "sample times must be strictly increasing",
                    });
                }
                if times.iter().chain(values).any(|x| !x.is_finite()) {
                    return Err(McError::Curve {
                        reason: "sample times and values must be finite",
                    });
                }
            }
        }
        Ok(())
    }

    /// Value at `t`: linear interpolation between samples, clamped outside
    /// the sampled range, bitwise-exact on sample hits.
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Curve::Constant { value } => *value,
            Curve::Sampled { times, values } => {
                if t <= times[0] {
                    return values[0];
                }
                if t >= *times.last().unwrap() {
                    return *values.last().unwrap();
                }
                let i = times.partition_point(|&s| s <= t) - 1;
                let w = (t - times[i]) / (times[i + 1] - times[i]);
                if w == 0.0 {
                    values[i]
                } else if w == 1.0 {
                    values[i + 1]
                } else {
                    values[i] + w * (values[i + 1] - values[i])
                }
            }
        }
    }
}

/// Constant controls overriding the base strategy on the spike window
/// `[start, start + width)`, where `start` is the simulation start time.
/// On the spike the dollar position is `wealth_fraction * X` — a fraction
/// of *liquid* wealth, since an arbitrary deviation need not respect the
/// combined-wealth structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeOverride {
    pub consumption: f64,
    pub wealth_fraction: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StrategyMode {
    /// The solved equilibrium strategy.
    Equilibrium,
    /// Arbitrary deterministic curves supplied by the caller.
    Custom,
    /// Base curves with a constant-control spike at the start of the run.
    Perturbed { spike: SpikeOverride },
}

/// A deterministic strategy: exposure as a fraction of total wealth
/// `X + K(t)`, consumption as a rate, plus an optional spike override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub exposure: Curve,
    pub consumption: Curve,
    pub mode: StrategyMode,
}

impl StrategySpec {
    /// The solved equilibrium strategy as sampled curves.
    pub fn equilibrium(sol: &EquilibriumSolution) -> Self {
        let grid = &sol.exposure.grid;
        StrategySpec {
            exposure: Curve::from_grid(grid, &sol.exposure.pi_tilde),
            consumption: Curve::from_grid(grid, &sol.policy.c_star),
            mode: StrategyMode::Equilibrium,
        }
    }

    /// The equilibrium strategy with a constant-control spike on
    /// `[start, start + width)`.
    pub fn perturbed(sol: &EquilibriumSolution, spike: SpikeOverride) -> Self {
        StrategySpec {
            mode: StrategyMode::Perturbed { spike },
            ..StrategySpec::equilibrium(sol)
        }
    }

    fn spike(&self) -> Option<&SpikeOverride> {
        match &self.mode {
            StrategyMode::Perturbed { spike } => Some(spike),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("simulation needs at least one path")]
    NoPaths,
    #[error("simulation needs at least one time step")]
    NoSteps,
    #[error("start time {t} must lie in [0, {horizon})")]
    StartTime { t: f64, horizon: f64 },
    #[error("start wealth must be finite, got {x}")]
    StartWealth { x: f64 },
    #[error(
        "exact-combined scheme requires positive total wealth at the start, got x + K = {total}"
    )]
    NonPositiveStart { total: f64 },
    #[error("exact-combined scheme cannot simulate spike-perturbed strategies; use euler-wealth")]
    SchemeUnsupported,
    #[error("spike window must fit strictly inside the run: width {width}, available {available}")]
    SpikeWindow { width: f64, available: f64 },
    #[error("invalid curve: {reason}")]
    Curve { reason: &'static str },
    #[error("strategy consumption is negative at t = {t}: {c}")]
    NegativeConsumption { t: f64, c: f64 },
    #[error("non-finite wealth on path {path} at t = {t}")]
    NonFinite { path: usize, t: f64 },
    #[error("ensemble has no paths")]
    EmptyEnsemble,
    #[error("variance-aversion coefficient must be positive and finite, got {psi}")]
    PsiNotPositive { psi: f64 },
}

/// Immutable result of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    /// Liquid terminal wealth `X(T)` per path (undiscounted).
    pub terminal_wealth: Vec<f64>,
    /// `∫_t^T e^{-rho (s - t)} U(c(s)) ds` per path.  Identical across
    /// paths here because supported consumption plans are deterministic in
    /// time, but stored per path as part of the ensemble contract.
    pub utility_integral: Vec<f64>,
    /// `min_s [X(s) + K(s)]` over the step nodes of each path.
    pub min_total_wealth: Vec<f64>,
    pub start_time: f64,
    pub start_wealth: f64,
    pub horizon: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.terminal_wealth.len()
    }
}

/// Sample moments of discounted terminal wealth and the utility integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    /// Mean of `e^{-delta (T - t)} X(T)`.
    pub y_hat: f64,
    /// Mean of `[e^{-delta (T - t)} X(T)]^2`.
    pub z_hat: f64,
    /// Mean of the per-path utility integral.
    pub w_hat: f64,
    pub se_y: f64,
    pub se_z: f64,
    pub se_w: f64,
    pub n_paths: usize,
}

/// Objective value `y - psi/2 (z - y^2) + beta w` with a delta-method
/// standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveEstimate {
    pub value: f64,
    pub se: f64,
}

// === schedule and per-step plan ===========================================

/// One simulation substep `[t0, t0 + dt]` with everything deterministic
/// precomputed, so the per-path loop touches no curves.
struct StepPlan {
    t_start: f64,
    dt: f64,
    sqrt_dt: f64,
    /// Spike regime: exposure applies to liquid wealth `X`.
    spike: bool,
    /// Fraction of `X` (spike) or of `X + K` (base).
    exposure: f64,
    capital_start: f64,
    capital_end: f64,
    /// `l(t_start) - c(t_start)` under the step's own control regime.
    net_income: f64,
    /// Deterministic increment of the discounted utility integral.
    utility_increment: f64,
    /// Exact-combined: per-step trapezoid of `r + (mu-r) pi - sigma^2 pi^2 / 2`.
    log_drift: f64,
    /// Exact-combined: sqrt of the per-step trapezoid of `sigma^2 pi^2`.
    log_vol: f64,
}

/// Substep times: `[t0 .. t0+h]` in `m_spike` equal pieces followed by
/// `[t0+h .. T]` in `m_post` pieces (or just the second part when there is
/// no spike).  Piece counts keep the local step near `(T - t0) / n_steps`.
/// Endpoints are formed as convex combinations so the first node is exactly
/// `t0`, the spike boundary exactly `t0 + width`, and the last exactly `T`.
fn build_schedule(t0: f64, horizon: f64, n_steps: usize, spike_width: Option<f64>) -> (Vec<f64>, usize) {
    let dt_target = (horizon - t0) / n_steps as f64;
    match spike_width {
        None => {
            let sched = (0..=n_steps)
                .map(|k| {
                    let th = k as f64 / n_steps as f64;
                    (1.0 - th) * t0 + th * horizon
                })
                .collect();
            (sched, 0)
        }
        Some(h) => {
            let boundary = t0 + h;
            let m_spike = ((h / dt_target).round() as usize).max(1);
            let m_post = (((horizon - boundary) / dt_target).round() as usize).max(1);
            let mut sched = Vec::with_capacity(m_spike + m_post + 1);
            for k in 0..=m_spike {
                let th = k as f64 / m_spike as f64;
                sched.push((1.0 - th) * t0 + th * boundary);
            }
            for k in 1..=m_post {
                let th = k as f64 / m_post as f64;
                sched.push((1.0 - th) * boundary + th * horizon);
            }
            (sched, m_spike)
        }
    }
}

fn build_plan(
    cfg: &ModelConfig,
    strategy: &StrategySpec,
    capital: &Curve,
    start_time: f64,
    n_steps: usize,
) -> Result<Vec<StepPlan>, McError> {
    let horizon = cfg.horizon;
    let (r, mu, sigma) = (cfg.market.r, cfg.market.mu, cfg.market.sigma);
    let rho = cfg.preferences.rho;
    let spike = strategy.spike();
    let (sched, m_spike) = build_schedule(start_time, horizon, n_steps, spike.map(|s| s.width));

    // Log-diffusion coefficients of combined wealth under a base-regime
    // exposure fraction `pi`: drift `r + (mu - r) pi - sigma^2 pi^2 / 2`,
    // variance rate `sigma^2 pi^2`.
    let log_mu = |pi: f64| r + (mu - r) * pi - 0.5 * sigma * sigma * pi * pi;
    let log_s2 = |pi: f64| sigma * sigma * pi * pi;

    let mut plan = Vec::with_capacity(sched.len() - 1);
    for k in 0..sched.len() - 1 {
        let (ta, tb) = (sched[k], sched[k + 1]);
        let dt = tb - ta;
        let in_spike = k < m_spike;
        let (exposure, c_a, c_b) = if in_spike {
            let s = spike.expect("spike steps only exist for perturbed strategies");
            (s.wealth_fraction, s.consumption, s.consumption)
        } else {
            (
                strategy.exposure.at(ta),
                strategy.consumption.at(ta),
                strategy.consumption.at(tb),
            )
        };
        if !exposure.is_finite() {
            return Err(McError::Curve {
                reason: "exposure must be finite on the run window",
            });
        }
        if c_a < 0.0 {
            return Err(McError::NegativeConsumption { t: ta, c: c_a });
        }
        let disc_a = (-rho * (ta - start_time)).exp();
        let disc_b = (-rho * (tb - start_time)).exp();
        let utility_increment = 0.5
            * dt
            * (disc_a * cfg.utility.value(c_a)? + disc_b * cfg.utility.value(c_b)?);
        let (log_drift, log_vol) = if in_spike {
            (0.0, 0.0) // never used: the exact scheme rejects spikes
        } else {
            let pi_b = strategy.exposure.at(tb);
            (
                0.5 * dt * (log_mu(exposure) + log_mu(pi_b)),
                (0.5 * dt * (log_s2(exposure) + log_s2(pi_b))).sqrt(),
            )
        };
        plan.push(StepPlan {
            t_start: ta,
            dt,
            sqrt_dt: dt.sqrt(),
            spike: in_spike,
            exposure,
            capital_start: capital.at(ta),
            capital_end: capital.at(tb),
            net_income: cfg.income.rate_at(ta)? - c_a,
            utility_increment,
            log_drift,
            log_vol,
        });
    }
    Ok(plan)
}

// === simulation ===========================================================

/// Simulates `sim.n_paths` independent paths of the strategy from state
/// `(start_time, start_wealth)` to the horizon.
///
/// `capital` must be the discounted future net income `K` of the *base*
/// strategy (for the solved strategy, `PolicyPath::human_capital`): the
/// exact-combined scheme's state is `X + K`, and the euler scheme uses it
/// to convert the exposure fraction into dollars and to track `X + K`.
pub fn simulate_paths(
    cfg: &ModelConfig,
    strategy: &StrategySpec,
    capital: &Curve,
    sim: &SimulationConfig,
    start_time: f64,
    start_wealth: f64,
) -> Result<PathEnsemble, McError> {
    cfg.validate()?;
    sim.validate()?;
    strategy.exposure.validate()?;
    strategy.consumption.validate()?;
    capital.validate()?;
    let horizon = cfg.horizon;
    if !start_time.is_finite() || start_time < 0.0 || start_time >= horizon {
        return Err(McError::StartTime {
            t: start_time,
            horizon,
        });
    }
    if !start_wealth.is_finite() {
        return Err(McError::StartWealth { x: start_wealth });
    }
    if let Some(s) = strategy.spike() {
        if sim.scheme == Scheme::ExactCombined {
            return Err(McError::SchemeUnsupported);
        }
        let available = horizon - start_time;
        if !(s.width > 0.0) || s.width >= available {
            return Err(McError::SpikeWindow {
                width: s.width,
                available,
            });
        }
        if s.consumption < 0.0 {
            return Err(McError::NegativeConsumption {
                t: start_time,
                c: s.consumption,
            });
        }
        if !s.wealth_fraction.is_finite() {
            return Err(McError::Curve {
                reason: "spike exposure must be finite",
            });
        }
    }

    let plan = build_plan(cfg, strategy, capital, start_time, sim.n_steps)?;
    let start_total = start_wealth + capital.at(start_time);
    if sim.scheme == Scheme::ExactCombined && !(start_total > 0.0) {
        return Err(McError::NonPositiveStart { total: start_total });
    }
    let utility_total: f64 = plan.iter().map(|s| s.utility_increment).sum();
    let terminal_capital = capital.at(horizon);
    let (r, mu, sigma) = (cfg.market.r, cfg.market.mu, cfg.market.sigma);

    // (terminal X, min over nodes of X + K); Err carries the failing time.
    let run_one = |path: usize| -> Result<(f64, f64), f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
        rng.set_stream(path as u64);
        match sim.scheme {
            Scheme::ExactCombined => {
                let mut ln_z = start_total.ln();
                let mut min_total = start_total;
                for step in &plan {
                    let xi: f64 = rng.sample(StandardNormal);
                    ln_z += step.log_drift + step.log_vol * xi;
                    if !ln_z.is_finite() {
                        return Err(step.t_start);
                    }
                    min_total = min_total.min(ln_z.exp());
                }
                Ok((ln_z.exp() - terminal_capital, min_total))
            }
            Scheme::EulerWealth => {
                let mut x = start_wealth;
                let mut min_total = start_total;
                for step in &plan {
                    let xi: f64 = rng.sample(StandardNormal);
                    let dollars = if step.spike {
                        step.exposure * x
                    } else {
                        step.exposure * (x + step.capital_start)
                    };
                    x += (r * x + (mu - r) * dollars + step.net_income) * step.dt
                        + sigma * dollars * step.sqrt_dt * xi;
                    if !x.is_finite() {
                        return Err(step.t_start);
                    }
                    min_total = min_total.min(x + step.capital_end);
                }
                Ok((x, min_total))
            }
        }
    };

    let raw: Vec<Result<(f64, f64), f64>> = (0..sim.n_paths).into_par_iter().map(run_one).collect();
    let mut terminal_wealth = Vec::with_capacity(sim.n_paths);
    let mut min_total_wealth = Vec::with_capacity(sim.n_paths);
    for (path, res) in raw.into_iter().enumerate() {
        match res {
            Ok((x, m)) => {
                terminal_wealth.push(x);
                min_total_wealth.push(m);
            }
            Err(t) => return Err(McError::NonFinite { path, t }),
        }
    }
    Ok(PathEnsemble {
        utility_integral: vec![utility_total; sim.n_paths],
        terminal_wealth,
        min_total_wealth,
        start_time,
        start_wealth,
        horizon,
        seed: sim.seed,
        scheme: sim.scheme,
    })
}

// === estimators ===========================================================

/// Single-pass mean and standard error (sample std over sqrt n).  Exact
/// zeros in, exact zero out: a constant sample yields `se == 0.0` bitwise.
pub(crate) fn mean_and_se(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let mut n = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for x in values {
        n += 1;
        let d = x - mean;
        mean += d / n as f64;
        m2 += d * (x - mean);
    }
    let se = if n > 1 {
        (m2 / ((n - 1) as f64 * n as f64)).sqrt()
    } else {
        0.0
    };
    (mean, se, n)
}

/// Sample moments of `e^{-delta (T - t)} X(T)` (level and square) and of
/// the utility integral.
pub fn estimate_moments(
    ensemble: &PathEnsemble,
    delta: f64,
    t: f64,
) -> Result<MomentEstimate, McError> {
    if ensemble.terminal_wealth.is_empty() {
        return Err(McError::EmptyEnsemble);
    }
    let disc = (-delta * (ensemble.horizon - t)).exp();
    let (y_hat, se_y, n) = mean_and_se(ensemble.terminal_wealth.iter().map(|&x| disc * x));
    let (z_hat, se_z, _) =
        mean_and_se(ensemble.terminal_wealth.iter().map(|&x| (disc * x) * (disc * x)));
    let (w_hat, se_w, _) = mean_and_se(ensemble.utility_integral.iter().copied());
    Ok(MomentEstimate {
        y_hat,
        z_hat,
        w_hat,
        se_y,
        se_z,
        se_w,
        n_paths: n,
    })
}

/// Mean-variance-plus-utility objective `y - psi/2 (z - y^2) + beta w`
/// with the delta-method standard error
/// `sqrt([(1 + psi y) se_y]^2 + [psi/2 se_z]^2 + [beta se_w]^2)`.
pub fn estimate_objective(
    moments: &MomentEstimate,
    psi: f64,
    beta: f64,
) -> Result<ObjectiveEstimate, McError> {
    if !psi.is_finite() || psi <= 0.0 {
        return Err(McError::PsiNotPositive { psi });
    }
    let MomentEstimate {
        y_hat: y,
        z_hat: z,
        w_hat: w,
        ..
    } = *moments;
    let value = y - 0.5 * psi * (z - y * y) + beta * w;
    let gy = (1.0 + psi * y) * moments.se_y;
    let gz = 0.5 * psi * moments.se_z;
    let gw = beta * moments.se_w;
    let se = (gy * gy + gz * gz + gw * gw).sqrt();
    Ok(ObjectiveEstimate { value, se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::model::{IncomeProfile, MarketParams, PreferenceParams, UtilitySpec};
    use crate::solver::{solve, SolverOptions};

    fn p1() -> ModelConfig {
        ModelConfig {
            market: MarketParams {
                r: 0.03,
                mu: 0.08,
                sigma: 0.2,
            },
            preferences: PreferenceParams {
                gamma: 2.0,
                beta: 1.0,
                delta: 0.0,
                rho: 0.0,
            },
            utility: UtilitySpec::Log,
            income: IncomeProfile::Constant { rate: 0.2 },
            horizon: 1.0,
            initial_wealth: 1.0,
        }
    }

    fn riskless_cfg() -> ModelConfig {
        // Power utility with eta < 1 tolerates c = 0 (U(0) = 0).
        let mut cfg = p1();
        cfg.utility = UtilitySpec::Power { eta: 0.5 };
        cfg.income = IncomeProfile::Constant { rate: 0.0 };
        cfg
    }

    fn idle_strategy() -> StrategySpec {
        StrategySpec {
            exposure: Curve::constant(0.0),
            consumption: Curve::constant(0.0),
            mode: StrategyMode::Custom,
        }
    }

    fn solved_p1() -> (ModelConfig, crate::solver::EquilibriumSolution) {
        let cfg = p1();
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let sol = solve(&cfg, &grid, &SolverOptions::default()).unwrap();
        (cfg, sol)
    }

    #[test]
    fn riskless_idle_strategy_compounds_at_r() {
        let cfg = riskless_cfg();
        let strategy = idle_strategy();
        let sim = SimulationConfig {
            n_paths: 64,
            n_steps: 400,
            seed: 1,
            scheme: Scheme::ExactCombined,
        };
        let ens =
            simulate_paths(&cfg, &strategy, &Curve::constant(0.0), &sim, 0.0, 1.0).unwrap();
        let target = (0.03f64).exp();
        for &x in &ens.terminal_wealth {
            assert!((x - target).abs() < 1e-12, "X(T) = {x} vs e^0.03 = {target}");
        }
        // Euler tracks the same ODE with O(dt) bias only.
        let sim_e = SimulationConfig {
            scheme: Scheme::EulerWealth,
            ..sim
        };
        let ens_e =
            simulate_paths(&cfg, &strategy, &Curve::constant(0.0), &sim_e, 0.0, 1.0).unwrap();
        for &x in &ens_e.terminal_wealth {
            assert!((x - target).abs() < 1e-5);
        }
    }

    #[test]
    fn deterministic_ensemble_has_exact_moments_and_zero_se() {
        let cfg = riskless_cfg();
        let sim = SimulationConfig {
            n_paths: 32,
            n_steps: 200,
            seed: 9,
            scheme: Scheme::ExactCombined,
        };
        let ens =
            simulate_paths(&cfg, &idle_strategy(), &Curve::constant(0.0), &sim, 0.0, 1.0).unwrap();
        let m = estimate_moments(&ens, 0.0, 0.0).unwrap();
        assert!((m.y_hat - (0.03f64).exp()).abs() < 1e-12);
        assert!((m.z_hat - (0.06f64).exp()).abs() < 1e-12);
        assert_eq!(m.se_y, 0.0, "constant sample must give se exactly 0");
        assert_eq!(m.se_z, 0.0);
        assert_eq!(m.se_w, 0.0);
        // Discounting at delta = r cancels the growth.
        let m_r = estimate_moments(&ens, 0.03, 0.0).unwrap();
        assert!((m_r.y_hat - 1.0).abs() < 1e-12);
        // Zero-variance objective with beta = 0 collapses to the mean.
        let obj = estimate_objective(&m, 5.0, 0.0).unwrap();
        assert!((obj.value - m.y_hat).abs() < 1e-12);
        assert_eq!(obj.se, 0.0);
    }

    #[test]
    fn ensembles_are_bit_identical_across_thread_counts() {
        let (cfg, sol) = solved_p1();
        let strategy = StrategySpec::equilibrium(&sol);
        let capital = Curve::from_grid(&sol.policy.grid, &sol.policy.human_capital);
        let sim = SimulationConfig {
            n_paths: 256,
            n_steps: 64,
            seed: 42,
            scheme: Scheme::ExactCombined,
        };
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_paths(&cfg, &strategy, &capital, &sim, 0.0, 1.0).unwrap())
        };
        let one = run(1);
        let eight = run(8);
        assert_eq!(one.terminal_wealth, eight.terminal_wealth);
        assert_eq!(one.min_total_wealth, eight.min_total_wealth);
        assert_eq!(one, eight);
    }

    #[test]
    fn equilibrium_moments_match_closed_forms() {
        let (cfg, sol) = solved_p1();
        let strategy = StrategySpec::equilibrium(&sol);
        let capital = Curve::from_grid(&sol.policy.grid, &sol.policy.human_capital);
        let sim = SimulationConfig {
            n_paths: 20_000,
            n_steps: 250,
            seed: 42,
            scheme: Scheme::ExactCombined,
        };
        let ens = simulate_paths(&cfg, &strategy, &capital, &sim, 0.0, 1.0).unwrap();
        let m = estimate_moments(&ens, cfg.preferences.delta, 0.0).unwrap();
        let (y_cf, z_cf) = sol.expected_terminal_moments(0.0, 1.0).unwrap();
        assert!(
            (m.y_hat - y_cf).abs() < 3.0 * m.se_y,
            "y: {} vs {} (se {})",
            m.y_hat,
            y_cf,
            m.se_y
        );
        assert!(
            (m.z_hat - z_cf).abs() < 3.0 * m.se_z,
            "z: {} vs {} (se {})",
            m.z_hat,
            z_cf,
            m.se_z
        );
        // Positivity of combined wealth holds pathwise under this scheme.
        assert!(ens.min_total_wealth.iter().all(|&v| v > 0.0));

        // Objective vs the closed-form value function.
        let psi = cfg.preferences.gamma / (1.0 + sol.capital_at(0.0));
        let obj = estimate_objective(&m, psi, cfg.preferences.beta).unwrap();
        let f_cf = sol.value_function(0.0, 1.0).unwrap();
        assert!(
            (obj.value - f_cf).abs() < 3.0 * obj.se,
            "objective {} vs value function {} (se {})",
            obj.value,
            f_cf,
            obj.se
        );
        // The utility integral is deterministic for deterministic-in-time
        // consumption, so its SE vanishes and w matches quadrature closely.
        assert_eq!(m.se_w, 0.0);
        assert!((m.w_hat - sol.utility_tail(0.0).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn euler_scheme_agrees_with_exact_scheme_in_distribution() {
        let (cfg, sol) = solved_p1();
        let strategy = StrategySpec::equilibrium(&sol);
        let capital = Curve::from_grid(&sol.policy.grid, &sol.policy.human_capital);
        let base = SimulationConfig {
            n_paths: 20_000,
            n_steps: 250,
            seed: 7,
            scheme: Scheme::ExactCombined,
        };
        let exact = simulate_paths(&cfg, &strategy, &capital, &base, 0.0, 1.0).unwrap();
        let euler = simulate_paths(
            &cfg,
            &strategy,
            &capital,
            &SimulationConfig {
                scheme: Scheme::EulerWealth,
                ..base
            },
            0.0,
            1.0,
        )
        .unwrap();
        let me = estimate_moments(&exact, 0.0, 0.0).unwrap();
        let mu = estimate_moments(&euler, 0.0, 0.0).unwrap();
        let tol = 3.0 * (me.se_y + mu.se_y) + 2e-3; // noise plus O(dt) bias headroom
        assert!(
            (me.y_hat - mu.y_hat).abs() < tol,
            "exact {} vs euler {}",
            me.y_hat,
            mu.y_hat
        );
    }

    #[test]
    fn zero_equity_premium_gives_zero_terminal_variance() {
        let mut cfg = p1();
        cfg.market.mu = cfg.market.r;
        let grid = TimeGrid::new(1.0, 500).unwrap();
        let sol = solve(&cfg, &grid, &SolverOptions::default()).unwrap();
        let strategy = StrategySpec::equilibrium(&sol);
        let capital = Curve::from_grid(&sol.policy.grid, &sol.policy.human_capital);
        let sim = SimulationConfig {
            n_paths: 500,
            n_steps: 100,
            seed: 3,
            scheme: Scheme::ExactCombined,
        };
        let ens = simulate_paths(&cfg, &strategy, &capital, &sim, 0.0, 1.0).unwrap();
        let m = estimate_moments(&ens, 0.0, 0.0).unwrap();
        assert_eq!(m.se_y, 0.0, "pi = 0 must make every path identical");
        assert!((m.z_hat - m.y_hat * m.y_hat).abs() < 1e-14);
    }

    #[test]
    fn spike_requires_euler_and_a_valid_window() {
        let (cfg, sol) = solved_p1();
        let capital = Curve::from_grid(&sol.policy.grid, &sol.policy.human_capital);
        let spike = SpikeOverride {
            consumption: 0.5,
            wealth_fraction: 0.2,
            width: 0.05,
        };
        let strategy = StrategySpec::perturbed(&sol, spike);
        let sim = SimulationConfig {
            n_paths: 8,
            n_steps: 50,
            seed: 0,
            scheme: Scheme::ExactCombined,
        };
        assert!(matches!(
            simulate_paths(&cfg, &strategy, &capital, &sim, 0.0, 1.0),
            Err(McError::SchemeUnsupported)
        ));
        let sim = SimulationConfig {
            scheme: Scheme::EulerWealth,
            ..sim
        };
        let too_wide = StrategySpec::perturbed(
            &sol,
            SpikeOverride {
                width: 2.0,
                ..spike
            },
        );
        assert!(matches!(
            simulate_paths(&cfg, &too_wide, &capital, &sim, 0.0, 1.0),
            Err(McError::SpikeWindow { .. })
        ));
        // A valid spike runs, and the spike boundary lands on a node.
        let ens = simulate_paths(&cfg, &strategy, &capital, &sim, 0.0, 1.0).unwrap();
        assert_eq!(ens.n_paths(), 8);
    }

    #[test]
    fn start_state_validation() {
        let (cfg, sol) = solved_p1();
        let strategy = StrategySpec::equilibrium(&sol);
        let capital = Curve::from_grid(&sol.policy.grid, &sol.policy.human_capital);
        let sim = SimulationConfig {
            n_paths: 4,
            n_steps: 16,
            seed: 0,
            scheme: Scheme::ExactCombined,
        };
        assert!(matches!(
            simulate_paths(&cfg, &strategy, &capital, &sim, 1.0, 1.0),
            Err(McError::StartTime { .. })
        ));
        // K(0) is about -0.77: x = 0.5 makes combined wealth negative.
        assert!(matches!(
            simulate_paths(&cfg, &strategy, &capital, &sim, 0.0, 0.5),
            Err(McError::NonPositiveStart { .. })
        ));
        // The euler scheme accepts the same start.
        let sim = SimulationConfig {
            scheme: Scheme::EulerWealth,
            ..sim
        };
        assert!(simulate_paths(&cfg, &strategy, &capital, &sim, 0.0, 0.5).is_ok());
    }

    #[test]
    fn curve_interpolation_clamps_and_hits_samples() {
        let c = Curve::Sampled {
            times: vec![0.0, 0.5, 1.0],
            values: vec![1.0, 3.0, 2.0],
        };
        c.validate().unwrap();
        assert_eq!(c.at(-1.0), 1.0);
        assert_eq!(c.at(0.0), 1.0);
        assert_eq!(c.at(0.5), 3.0);
        assert_eq!(c.at(1.0), 2.0);
        assert_eq!(c.at(7.0), 2.0);
        assert!((c.at(0.25) - 2.0).abs() < 1e-15);
        let bad = Curve::Sampled {
            times: vec![0.0, 0.0],
            values: vec![1.0, 1.0],
        };
        assert!(matches!(bad.validate(), Err(McError::Curve { .. })));
    }

    #[test]
    fn estimate_objective_rejects_nonpositive_psi() {
        let m = MomentEstimate {
            y_hat: 1.0,
            z_hat: 1.0,
            w_hat: 0.0,
            se_y: 0.0,
            se_z: 0.0,
            se_w: 0.0,
            n_paths: 1,
        };
        assert!(matches!(
            estimate_objective(&m, 0.0, 1.0),
            Err(McError::PsiNotPositive { .. })
        ));
        assert!(matches!(
            estimate_objective(&m, f64::NAN, 1.0),
            Err(McError::PsiNotPositive { .. })
        ));
    }

    #[test]
    fn objective_decreases_in_second_moment() {
        let base = MomentEstimate {
            y_hat: 1.0,
            z_hat: 1.2,
            w_hat: 0.0,
            se_y: 0.0,
            se_z: 0.0,
            se_w: 0.0,
            n_paths: 10,
        };
        let lo = estimate_objective(&base, 2.0, 0.0).unwrap();
        let hi = estimate_objective(
            &MomentEstimate {
                z_hat: 1.5,
                ..base
            },
            2.0,
            0.0,
        )
        .unwrap();
        assert!(hi.value < lo.value);
    }
}
