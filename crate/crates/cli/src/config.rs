//! Run configuration: one JSON document with every field defaulted, so a
//! missing or partial config file still yields a fully specified run and
//! every summary embeds the materialized values.

use std::path::PathBuf;

use mvu_core::mc::SimulationConfig;
use mvu_core::model::{
    IncomeProfile, MarketParams, ModelConfig, PreferenceParams, UtilitySpec,
};
use mvu_core::solver::SolverOptions;
use mvu_core::verifier::VerifierOptions;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// The built-in reference model: r = 3%, equity premium 5%, volatility 20%,
/// variance aversion 2, log utility with unit weight, no discounting,
/// constant income 0.2, one-year horizon, unit initial wealth.
pub fn reference_model() -> ModelConfig {
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

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n_steps: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n_steps: 1000 }
    }
}

/// Which scalar model parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Gamma,
    Beta,
    Delta,
    Rho,
    Mu,
    Sigma,
    R,
}

impl SweepParam {
    pub const ALL: [SweepParam; 7] = [
        SweepParam::Gamma,
        SweepParam::Beta,
        SweepParam::Delta,
        SweepParam::Rho,
        SweepParam::Mu,
        SweepParam::Sigma,
        SweepParam::R,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Gamma => "gamma",
            SweepParam::Beta => "beta",
            SweepParam::Delta => "delta",
            SweepParam::Rho => "rho",
            SweepParam::Mu => "mu",
            SweepParam::Sigma => "sigma",
            SweepParam::R => "r",
        }
    }

    pub fn parse(name: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown sweep parameter {name:?}; expected one of gamma, beta, delta, rho, mu, sigma, r"
                ))
            })
    }

    pub fn apply(self, model: &mut ModelConfig, value: f64) {
        match self {
            SweepParam::Gamma => model.preferences.gamma = value,
            SweepParam::Beta => model.preferences.beta = value,
            SweepParam::Delta => model.preferences.delta = value,
            SweepParam::Rho => model.preferences.rho = value,
            SweepParam::Mu => model.market.mu = value,
            SweepParam::Sigma => model.market.sigma = value,
            SweepParam::R => model.market.r = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Omit the whole section to run the reference model; when present it
    /// must be complete.
    pub model: ModelConfig,
    pub grid: GridSection,
    pub solver: SolverOptions,
    pub simulation: SimulationConfig,
    /// Also write one CSV row per simulated path (`simulate` only).
    pub dump_paths: bool,
    pub verifier: VerifierOptions,
    pub out_dir: PathBuf,
    /// Required by `sweep` unless given on the command line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: reference_model(),
            grid: GridSection::default(),
            solver: SolverOptions::default(),
            simulation: SimulationConfig::default(),
            dump_paths: false,
            verifier: VerifierOptions::default(),
            out_dir: PathBuf::from("out"),
            sweep: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(path: &str, text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::ConfigParse {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }
}
