//! Model primitives: market and preference parameters, utility families,
//! labor-income profiles, and configuration validation.
//!
//! Everything downstream (solver, simulator, verifier) consumes a validated
//! [`ModelConfig`].  Validation failures carry a distinct machine-readable
//! code per violated constraint so callers can map them onto exit codes or
//! structured error output.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Frictionless market: one riskless account and one risky asset following
/// geometric Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Riskless short rate (continuously compounded); must be positive.
    pub r: f64,
    /// Risky-asset drift; must satisfy `mu >= r`.  The boundary `mu == r`
    /// (zero equity premium) is allowed as a degenerate case in which the
    /// equilibrium exposure vanishes identically.
    pub mu: f64,
    /// Risky-asset volatility; must be positive.
    pub sigma: f64,
}

/// Attitudes towards terminal-wealth risk and consumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferenceParams {
    /// Variance-aversion coefficient scaling the penalty
    /// `gamma / (2 (x + K)) * Var[...]`; must be positive.
    pub gamma: f64,
    /// Weight on the running consumption-utility term; must be positive.
    pub beta: f64,
    /// Discount rate applied to terminal wealth, `e^{-delta (T - t)}`;
    /// must be nonnegative.
    pub delta: f64,
    /// Discount rate applied to consumption utility, `e^{-rho (s - t)}`;
    /// must be nonnegative.
    pub rho: f64,
}

/// Instantaneous utility family for consumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum UtilitySpec {
    /// `U(c) = c^{1-eta} / (1-eta)` with `eta > 0`, `eta != 1`.
    Power { eta: f64 },
    /// `U(c) = ln c`.
    Log,
    /// `U(c) = -e^{-eta c} / eta` with `eta > 0`.
    Exponential { eta: f64 },
}

/// Result of inverting marginal utility, with the nonnegativity clamp made
/// explicit: exponential utility admits negative roots of `U'(c) = y` for
/// `y > 1`, which are clamped to zero consumption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseMarginal {
    /// Consumption rate `c >= 0` solving `U'(c) = y` (or the clamped zero).
    pub consumption: f64,
    /// True when the unconstrained root was negative and `c = 0` was
    /// returned instead.
    pub clamped: bool,
}

/// Deterministic labor-income rate `l(t) >= 0` on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IncomeProfile {
    /// `l(t) = rate`.
    Constant { rate: f64 },
    /// `l(t) = start + slope * t`.
    Linear { start: f64, slope: f64 },
    /// `l(t) = initial * e^{-decay_rate * t}`.
    ExponentialDecay { initial: f64, decay_rate: f64 },
    /// Piecewise-linear interpolation through `(times[i], values[i])`;
    /// `times` must be strictly increasing and bracket every queried `t`.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

/// Full problem description consumed by the solver and simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub market: MarketParams,
    pub preferences: PreferenceParams,
    pub utility: UtilitySpec,
    pub income: IncomeProfile,
    /// Planning horizon `T`; must be positive.
    pub horizon: f64,
    /// Initial wealth `x0`; must be positive.
    #[serde(rename = "x0")]
    pub initial_wealth: f64,
}

/// Constraint violations and domain errors for model primitives.  Each
/// variant has a stable machine-readable [`code`](ModelError::code).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter {name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("riskless rate must be positive, got r = {0}")]
    RateNotPositive(f64),
    #[error("volatility must be positive, got sigma = {0}")]
    SigmaNotPositive(f64),
    #[error("risky drift must be at least the riskless rate, got mu = {mu} < r = {r}")]
    DriftBelowRate { mu: f64, r: f64 },
    #[error("variance aversion must be positive, got gamma = {0}")]
    GammaNotPositive(f64),
    #[error("consumption-utility weight must be positive, got beta = {0}")]
    BetaNotPositive(f64),
    #[error("terminal-wealth discount rate must be nonnegative, got delta = {0}")]
    DeltaNegative(f64),
    #[error("consumption discount rate must be nonnegative, got rho = {0}")]
    RhoNegative(f64),
    #[error("horizon must be positive, got T = {0}")]
    HorizonNotPositive(f64),
    #[error("initial wealth must be positive, got x0 = {0}")]
    InitialWealthNotPositive(f64),
    #[error("power-utility exponent must be positive and distinct from 1, got eta = {0}")]
    PowerExponentInvalid(f64),
    #[error("exponential-utility coefficient must be positive, got eta = {0}")]
    ExponentialCoefficientInvalid(f64),
    #[error("income must be nonnegative and finite on [0, T]; got l({t}) = {value}")]
    IncomeNegative { t: f64, value: f64 },
    #[error("income table needs >= 2 nodes, strictly increasing finite times, matching lengths")]
    IncomeTableInvalid,
    #[error("income table covers [{lo}, {hi}] but must cover [0, T] = [0, {horizon}]")]
    IncomeTableCoverage { lo: f64, hi: f64, horizon: f64 },
    #[error("income queried outside its domain: t = {t} not in [{lo}, {hi}]")]
    IncomeOutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("utility undefined for consumption {c} under {family}")]
    UtilityDomain { family: &'static str, c: f64 },
    #[error("inverse marginal utility needs a positive finite argument, got {0}")]
    MarginalArgumentNotPositive(f64),
}

impl ModelError {
    /// Stable identifier for structured error output.
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::NotFinite { .. } => "not_finite",
            ModelError::RateNotPositive(_) => "rate_not_positive",
            ModelError::SigmaNotPositive(_) => "sigma_not_positive",
            ModelError::DriftBelowRate { .. } => "drift_below_rate",
            ModelError::GammaNotPositive(_) => "gamma_not_positive",
            ModelError::BetaNotPositive(_) => "beta_not_positive",
            ModelError::DeltaNegative(_) => "delta_negative",
            ModelError::RhoNegative(_) => "rho_negative",
            ModelError::HorizonNotPositive(_) => "horizon_not_positive",
            ModelError::InitialWealthNotPositive(_) => "initial_wealth_not_positive",
            ModelError::PowerExponentInvalid(_) => "power_exponent_invalid",
            ModelError::ExponentialCoefficientInvalid(_) => "exponential_coefficient_invalid",
            ModelError::IncomeNegative { .. } => "income_negative",
            ModelError::IncomeTableInvalid => "income_table_invalid",
            ModelError::IncomeTableCoverage { .. } => "income_table_coverage",
            ModelError::IncomeOutOfRange { .. } => "income_out_of_range",
            ModelError::UtilityDomain { .. } => "utility_domain",
            ModelError::MarginalArgumentNotPositive(_) => "marginal_argument_not_positive",
        }
    }
}

fn ensure_finite(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NotFinite { name, value })
    }
}

impl MarketParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        ensure_finite("r", self.r)?;
        ensure_finite("mu", self.mu)?;
        ensure_finite("sigma", self.sigma)?;
        if self.r <= 0.0 {
            return Err(ModelError::RateNotPositive(self.r));
        }
        if self.sigma <= 0.0 {
            return Err(ModelError::SigmaNotPositive(self.sigma));
        }
        if self.mu < self.r {
            return Err(ModelError::DriftBelowRate {
                mu: self.mu,
                r: self.r,
            });
        }
        Ok(())
    }

    /// Squared market price of risk input `(mu - r) / (sigma^2 gamma)`
    /// evaluated lazily by the solver; kept here for reuse.
    pub fn excess_return(&self) -> f64 {
        self.mu - self.r
    }
}

impl PreferenceParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        ensure_finite("gamma", self.gamma)?;
        ensure_finite("beta", self.beta)?;
        ensure_finite("delta", self.delta)?;
        ensure_finite("rho", self.rho)?;
        if self.gamma <= 0.0 {
            return Err(ModelError::GammaNotPositive(self.gamma));
        }
        if self.beta <= 0.0 {
            return Err(ModelError::BetaNotPositive(self.beta));
        }
        if self.delta < 0.0 {
            return Err(ModelError::DeltaNegative(self.delta));
        }
        if self.rho < 0.0 {
            return Err(ModelError::RhoNegative(self.rho));
        }
        Ok(())
    }
}

impl UtilitySpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            UtilitySpec::Power { eta } => {
                if !eta.is_finite() || eta <= 0.0 || eta == 1.0 {
                    return Err(ModelError::PowerExponentInvalid(eta));
                }
            }
            UtilitySpec::Log => {}
            UtilitySpec::Exponential { eta } => {
                if !eta.is_finite() || eta <= 0.0 {
                    return Err(ModelError::ExponentialCoefficientInvalid(eta));
                }
            }
        }
        Ok(())
    }

    /// `U(c)`.  Domain: `c > 0` for log, `c >= 0` otherwise (power with
    /// exponent above 1 diverges to `-inf` at `c = 0`, which is returned
    /// as such rather than treated as an error).
    pub fn value(&self, c: f64) -> Result<f64, ModelError> {
        match *self {
            UtilitySpec::Power { eta } => {
                if c < 0.0 || c.is_nan() {
                    Err(ModelError::UtilityDomain {
                        family: "power",
                        c,
                    })
                } else {
                    Ok(c.powf(1.0 - eta) / (1.0 - eta))
                }
            }
            UtilitySpec::Log => {
                if c <= 0.0 || c.is_nan() {
                    Err(ModelError::UtilityDomain { family: "log", c })
                } else {
                    Ok(c.ln())
                }
            }
            UtilitySpec::Exponential { eta } => {
                if c < 0.0 || c.is_nan() {
                    Err(ModelError::UtilityDomain {
                        family: "exponential",
                        c,
                    })
                } else {
                    Ok(-(-eta * c).exp() / eta)
                }
            }
        }
    }

    /// Marginal utility `U'(c)`; strictly decreasing on the domain.
    pub fn marginal(&self, c: f64) -> Result<f64, ModelError> {
        match *self {
            UtilitySpec::Power { eta } => {
                if c < 0.0 || c.is_nan() {
                    Err(ModelError::UtilityDomain {
                        family: "power",
                        c,
                    })
                } else {
                    Ok(c.powf(-eta))
                }
            }
            UtilitySpec::Log => {
                if c <= 0.0 || c.is_nan() {
                    Err(ModelError::UtilityDomain { family: "log", c })
                } else {
                    Ok(1.0 / c)
                }
            }
            UtilitySpec::Exponential { eta } => {
                if c < 0.0 || c.is_nan() {
                    Err(ModelError::UtilityDomain {
                        family: "exponential",
                        c,
                    })
                } else {
                    Ok((-eta * c).exp())
                }
            }
        }
    }

    /// Solves `U'(c) = y` for `c`, clamping negative exponential-utility
    /// roots to zero (flagged).  Requires `y > 0`: marginal utility of every
    /// supported family has range contained in `(0, inf)`.
    pub fn inverse_marginal(&self, y: f64) -> Result<InverseMarginal, ModelError> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(ModelError::MarginalArgumentNotPositive(y));
        }
        let unclamped = match *self {
            UtilitySpec::Power { eta } => y.powf(-1.0 / eta),
            UtilitySpec::Log => 1.0 / y,
            UtilitySpec::Exponential { eta } => -y.ln() / eta,
        };
        if unclamped < 0.0 {
            Ok(InverseMarginal {
                consumption: 0.0,
                clamped: true,
            })
        } else {
            Ok(InverseMarginal {
                consumption: unclamped,
                clamped: false,
            })
        }
    }
}

impl IncomeProfile {
    /// Structural validation plus the nonnegativity of `l` on `[0, horizon]`.
    pub fn validate(&self, horizon: f64) -> Result<(), ModelError> {
        match self {
            IncomeProfile::Constant { rate } => {
                ensure_finite("income rate", *rate)?;
                if *rate < 0.0 {
                    return Err(ModelError::IncomeNegative {
                        t: 0.0,
                        value: *rate,
                    });
                }
            }
            IncomeProfile::Linear { start, slope } => {
                ensure_finite("income start", *start)?;
                ensure_finite("income slope", *slope)?;
                // A linear function attains its minimum over [0, T] at an endpoint.
                if *start < 0.0 {
                    return Err(ModelError::IncomeNegative {
                        t: 0.0,
                        value: *start,
                    });
                }
                let end = start + slope * horizon;
                if end < 0.0 {
                    return Err(ModelError::IncomeNegative {
                        t: horizon,
                        value: end,
                    });
                }
            }
            IncomeProfile::ExponentialDecay {
                initial,
                decay_rate,
            } => {
                ensure_finite("income initial", *initial)?;
                ensure_finite("income decay_rate", *decay_rate)?;
                if *initial < 0.0 {
                    return Err(ModelError::IncomeNegative {
                        t: 0.0,
                        value: *initial,
                    });
                }
            }
            IncomeProfile::Tabulated { times, values } => {
                if times.len() != values.len() || times.len() < 2 {
                    return Err(ModelError::IncomeTableInvalid);
                }
                if times.iter().any(|t| !t.is_finite())
                    || times.windows(2).any(|w| w[1] <= w[0])
                {
                    return Err(ModelError::IncomeTableInvalid);
                }
                for (t, v) in times.iter().zip(values) {
                    if !v.is_finite() || *v < 0.0 {
                        return Err(ModelError::IncomeNegative { t: *t, value: *v });
                    }
                }
                let (lo, hi) = (times[0], *times.last().expect("len >= 2"));
                if lo > 0.0 || hi < horizon {
                    return Err(ModelError::IncomeTableCoverage { lo, hi, horizon });
                }
            }
        }
        Ok(())
    }

    /// Income rate at time `t`.  Closed-form profiles accept any `t >= 0`;
    /// tabulated profiles reject queries outside the table range.
    pub fn rate_at(&self, t: f64) -> Result<f64, ModelError> {
        if !t.is_finite() || t < 0.0 {
            return Err(ModelError::IncomeOutOfRange {
                t,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        match self {
            IncomeProfile::Constant { rate } => Ok(*rate),
            IncomeProfile::Linear { start, slope } => Ok(start + slope * t),
            IncomeProfile::ExponentialDecay {
                initial,
                decay_rate,
            } => Ok(initial * (-decay_rate * t).exp()),
            IncomeProfile::Tabulated { times, values } => {
                let (lo, hi) = (times[0], *times.last().expect("validated len >= 2"));
                if t < lo || t > hi {
                    return Err(ModelError::IncomeOutOfRange { t, lo, hi });
                }
                // Index of the right bracket node; times strictly increasing.
                let j = times.partition_point(|&s| s < t).min(times.len() - 1).max(1);
                let (t0, t1) = (times[j - 1], times[j]);
                let (v0, v1) = (values[j - 1], values[j]);
                let w = (t - t0) / (t1 - t0);
                Ok(v0 + w * (v1 - v0))
            }
        }
    }
}

impl ModelConfig {
    /// Validates every block; the first violated constraint is reported.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.market.validate()?;
        self.preferences.validate()?;
        self.utility.validate()?;
        ensure_finite("horizon", self.horizon)?;
        if self.horizon <= 0.0 {
            return Err(ModelError::HorizonNotPositive(self.horizon));
        }
        ensure_finite("x0", self.initial_wealth)?;
        if self.initial_wealth <= 0.0 {
            return Err(ModelError::InitialWealthNotPositive(self.initial_wealth));
        }
        self.income.validate(self.horizon)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ModelConfig {
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

    #[test]
    fn utility_values_match_closed_forms() {
        let u = UtilitySpec::Power { eta: 2.0 }.value(2.0).unwrap();
        assert_eq!(u, -0.5, "power(2) at c=2 should be 2^{{-1}}/(-1)");
        assert_eq!(UtilitySpec::Log.value(1.0).unwrap(), 0.0);
        let e = UtilitySpec::Exponential { eta: 1.0 }.value(0.0).unwrap();
        assert_eq!(e, -1.0, "exponential(1) at c=0 should be -1");
    }

    #[test]
    fn utility_rejects_out_of_domain_consumption() {
        assert!(matches!(
            UtilitySpec::Log.value(0.0),
            Err(ModelError::UtilityDomain { family: "log", .. })
        ));
        assert!(UtilitySpec::Power { eta: 0.5 }.value(-1.0).is_err());
        assert!(UtilitySpec::Exponential { eta: 1.0 }.value(-0.1).is_err());
        // c = 0 is inside the domain for non-log families.
        assert_eq!(UtilitySpec::Power { eta: 0.5 }.value(0.0).unwrap(), 0.0);
    }

    #[test]
    fn inverse_marginal_round_trips_on_log_spaced_grid() {
        let families = [
            UtilitySpec::Power { eta: 0.5 },
            UtilitySpec::Power { eta: 2.0 },
            UtilitySpec::Power { eta: 7.3 },
            UtilitySpec::Log,
            UtilitySpec::Exponential { eta: 0.7 },
            UtilitySpec::Exponential { eta: 3.0 },
        ];
        // 97 log-spaced consumption levels across twelve decades.
        for k in 0..=96 {
            let c = 10f64.powf(-6.0 + 12.0 * k as f64 / 96.0);
            for fam in families {
                let y = fam.marginal(c).unwrap();
                if !y.is_finite() || y <= 0.0 {
                    continue; // exponential marginal underflows for huge c
                }
                let back = fam.inverse_marginal(y).unwrap();
                assert!(!back.clamped, "{fam:?} clamped inside the domain at c={c}");
                let rel = (back.consumption - c).abs() / c;
                assert!(
                    rel <= 1e-10,
                    "{fam:?}: inverse(marginal({c})) = {} (rel err {rel})",
                    back.consumption
                );
            }
        }
    }

    #[test]
    fn inverse_marginal_examples_and_clamp() {
        let inv = UtilitySpec::Power { eta: 2.0 }.inverse_marginal(0.25).unwrap();
        assert_eq!(inv.consumption, 2.0);
        assert!(!inv.clamped);

        let inv = UtilitySpec::Log.inverse_marginal(4.0).unwrap();
        assert_eq!(inv.consumption, 0.25);

        let inv = UtilitySpec::Exponential { eta: 1.0 }
            .inverse_marginal((-1.0f64).exp())
            .unwrap();
        assert!((inv.consumption - 1.0).abs() < 1e-15);
        assert!(!inv.clamped);

        // Arguments above 1 would need negative consumption: clamp and flag.
        let inv = UtilitySpec::Exponential { eta: 1.0 }.inverse_marginal(2.0).unwrap();
        assert_eq!(inv.consumption, 0.0);
        assert!(inv.clamped);

        assert!(matches!(
            UtilitySpec::Log.inverse_marginal(0.0),
            Err(ModelError::MarginalArgumentNotPositive(_))
        ));
        assert!(UtilitySpec::Log.inverse_marginal(-3.0).is_err());
    }

    #[test]
    fn income_profiles_evaluate() {
        assert_eq!(
            IncomeProfile::Constant { rate: 1.0 }.rate_at(0.7).unwrap(),
            1.0
        );
        // Linear from 2 at t=0 down to 0 at t=1.
        let lin = IncomeProfile::Linear {
            start: 2.0,
            slope: -2.0,
        };
        assert_eq!(lin.rate_at(0.5).unwrap(), 1.0);
        let dec = IncomeProfile::ExponentialDecay {
            initial: 1.0,
            decay_rate: 0.5,
        };
        assert!((dec.rate_at(2.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);

        let tab = IncomeProfile::Tabulated {
            times: vec![0.0, 1.0, 3.0],
            values: vec![0.0, 2.0, 0.0],
        };
        assert_eq!(tab.rate_at(0.5).unwrap(), 1.0);
        assert_eq!(tab.rate_at(2.0).unwrap(), 1.0);
        assert_eq!(tab.rate_at(3.0).unwrap(), 0.0);
        assert!(matches!(
            tab.rate_at(3.5),
            Err(ModelError::IncomeOutOfRange { .. })
        ));
        assert!(tab.rate_at(-0.1).is_err());
    }

    #[test]
    fn validation_rejects_each_constraint_with_distinct_code() {
        let mut cfg = base_config();
        cfg.market.sigma = 0.0;
        assert_eq!(cfg.validate().unwrap_err().code(), "sigma_not_positive");

        let mut cfg = base_config();
        cfg.market.mu = 0.02; // strictly below r
        assert_eq!(cfg.validate().unwrap_err().code(), "drift_below_rate");

        let mut cfg = base_config();
        cfg.market.r = 0.0;
        assert_eq!(cfg.validate().unwrap_err().code(), "rate_not_positive");

        let mut cfg = base_config();
        cfg.preferences.gamma = -1.0;
        assert_eq!(cfg.validate().unwrap_err().code(), "gamma_not_positive");

        let mut cfg = base_config();
        cfg.preferences.beta = 0.0;
        assert_eq!(cfg.validate().unwrap_err().code(), "beta_not_positive");

        let mut cfg = base_config();
        cfg.preferences.delta = -0.1;
        assert_eq!(cfg.validate().unwrap_err().code(), "delta_negative");

        let mut cfg = base_config();
        cfg.preferences.rho = -0.1;
        assert_eq!(cfg.validate().unwrap_err().code(), "rho_negative");

        let mut cfg = base_config();
        cfg.horizon = 0.0;
        assert_eq!(cfg.validate().unwrap_err().code(), "horizon_not_positive");

        let mut cfg = base_config();
        cfg.initial_wealth = -2.0;
        assert_eq!(
            cfg.validate().unwrap_err().code(),
            "initial_wealth_not_positive"
        );

        let mut cfg = base_config();
        cfg.utility = UtilitySpec::Power { eta: 1.0 };
        assert_eq!(cfg.validate().unwrap_err().code(), "power_exponent_invalid");

        let mut cfg = base_config();
        cfg.income = IncomeProfile::Constant { rate: -0.5 };
        assert_eq!(cfg.validate().unwrap_err().code(), "income_negative");

        let mut cfg = base_config();
        cfg.market.mu = f64::NAN;
        assert_eq!(cfg.validate().unwrap_err().code(), "not_finite");

        // The degenerate boundary mu == r stays valid.
        let mut cfg = base_config();
        cfg.market.mu = cfg.market.r;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn income_table_must_cover_horizon() {
        let mut cfg = base_config();
        cfg.income = IncomeProfile::Tabulated {
            times: vec![0.0, 0.5],
            values: vec![1.0, 1.0],
        };
        assert_eq!(cfg.validate().unwrap_err().code(), "income_table_coverage");
    }

    #[test]
    fn linear_income_validated_at_both_endpoints() {
        let mut cfg = base_config();
        cfg.income = IncomeProfile::Linear {
            start: 1.0,
            slope: -2.0, // hits -1 at T = 1
        };
        assert_eq!(cfg.validate().unwrap_err().code(), "income_negative");
    }

    #[test]
    fn config_serde_round_trip() {
        let cfg = base_config();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ModelConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }
}
