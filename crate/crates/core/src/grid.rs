//! Uniform time grid on `[0, T]` shared by the solver's quadrature, the
//! consumption/human-capital pipeline, and solution sampling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A uniform grid `t_i = T * i / n`, `i = 0..=n`.  Node `n` is exactly `T`
/// (bitwise), which the terminal identities `a(T) = f(T) = 1`, `K(T) = 0`
/// rely on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs a positive finite horizon, got {0}")]
    BadHorizon(f64),
    #[error("grid needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self, GridError> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(GridError::BadHorizon(horizon));
        }
        if n_steps < 2 {
            return Err(GridError::TooFewSteps(n_steps));
        }
        Ok(TimeGrid { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// `t_i = T * i / n`; `node(n) == horizon` exactly.
    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i <= self.n_steps);
        self.horizon * (i as f64 / self.n_steps as f64)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(move |i| self.node(i))
    }

    /// Index of the last node at or below `t` (clamped to `n - 1` so that
    /// `[node(i), node(i+1)]` always brackets `t` for `t` in `[0, T]`).
    pub fn bracket(&self, t: f64) -> usize {
        let raw = (t / self.dt()).floor();
        (raw.max(0.0) as usize).min(self.n_steps - 1)
    }

    /// Linear interpolation of per-node `values` at time `t` in `[0, T]`.
    /// Node hits reproduce stored values bitwise (no `a + 1.0 * (b - a)`
    /// rounding), which terminal-identity checks depend on.
    pub fn interp(&self, values: &[f64], t: f64) -> f64 {
        debug_assert_eq!(values.len(), self.n_nodes());
        let i = self.bracket(t);
        let (t0, t1) = (self.node(i), self.node(i + 1));
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        if w == 0.0 {
            values[i]
        } else if w == 1.0 {
            values[i + 1]
        } else {
            values[i] + w * (values[i + 1] - values[i])
        }
    }
}
