//! Equilibrium portfolio/consumption selection under a mean-variance-plus-utility
//! objective with wealth-dependent variance aversion.
//!
//! An investor with planning horizon `T` trades a riskless account (rate `r`)
//! and one risky asset (drift `mu`, volatility `sigma`), consumes at rate
//! `c(t)`, and receives labor income `l(t)`.  At every state `(t, x)` she
//! ranks strategies by
//!
//! ```text
//! E[discounted X(T)] - gamma / (2 (x + K(t))) * Var[discounted X(T)]
//!     + beta * E[∫ e^{-rho (s-t)} U(c(s)) ds]
//! ```
//!
//! where `K(t)` is the discounted future net income (human capital) of the
//! strategy itself.  Because the variance penalty scales with current total
//! wealth, dynamic programming fails and the model is solved in the
//! game-theoretic sense: the equilibrium strategy is immune to spike
//! deviations over vanishing time windows `[t, t+h]`.
//!
//! The crate provides:
//!
//! * [`model`] — parameter sets, utility families, income profiles, validation;
//! * [`grid`] — the uniform time grid shared by solver and quadrature;
//! * [`solver`] — the equilibrium investment exposure via a fixed-point
//!   integral equation (Picard iteration and an equivalent backward
//!   Runge-Kutta integration), the consumption rule, human capital, and the
//!   closed-form value function and terminal-wealth moments;
//! * [`mc`] — a Monte Carlo engine for the wealth dynamics with
//!   reproducible per-path random substreams;
//! * [`verifier`] — a statistical harness that checks the spike-deviation
//!   equilibrium property of the computed strategy;
//! * [`io`] — CSV emission/parsing for solution tables, gap reports, and
//!   path dumps.

// Guards of the form `!(x > 0.0)` are intentional throughout: unlike
// `x <= 0.0` they also reject NaN, which must never pass a positivity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod grid;
pub mod io;
pub mod mc;
pub mod model;
pub mod solver;
pub mod verifier;

pub use grid::TimeGrid;
pub use model::{
    IncomeProfile, MarketParams, ModelConfig, ModelError, PreferenceParams, UtilitySpec,
};
pub use solver::{
    Convention, EquilibriumSolution, ExposurePath, PolicyPath, SolveError, SolveMethod,
    SolverOptions,
};
