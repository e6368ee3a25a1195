use serde::{Deserialize, Serialize};

use crate::error::SolveError;

/// Tuning knobs shared by every solver.
///
/// `order` and `damping_floor` default to values derived from the problem
/// dimension; use [`SolverConfig::order_for`] and
/// [`SolverConfig::damping_floor_for`] to see what a solve will actually use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// History length `m` (or `q` for QN-Z). `None` picks 10 when `p > 20`
    /// and `max(1, ⌊p/2⌋)` otherwise.
    pub order: Option<usize>,
    /// Per-iteration monotonicity slack ε.
    pub epsilon: f64,
    /// Cycle-level slack ε_c.
    pub epsilon_c: f64,
    /// Odds-ratio step α of the damping schedule (> 1).
    pub alpha: f64,
    /// Damping half-life κ.
    pub kappa: f64,
    /// Lower bound `−D` on the damping exponent. `None` means `D = 2m`.
    pub damping_floor: Option<u64>,
    /// Stop once `‖x_{k+1} − x_k‖₂ < tol`.
    pub tol: f64,
    pub max_fevals: usize,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            order: None,
            epsilon: 0.01,
            epsilon_c: 0.0,
            alpha: 1.2,
            kappa: 25.0,
            damping_floor: None,
            tol: 1e-8,
            max_fevals: 25_000,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub fn with_order(mut self, order: usize) -> Self {
        self.order = Some(order);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_fevals(mut self, max_fevals: usize) -> Self {
        self.max_fevals = max_fevals;
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    /// Effective order for a problem of dimension `p`, clamped to `[1, p]`.
    pub fn order_for(&self, p: usize) -> usize {
        let m = self.order.unwrap_or(if p > 20 { 10 } else { p / 2 });
        m.min(p).max(1)
    }

    pub fn damping_floor_for(&self, order: usize) -> i64 {
        self.damping_floor.unwrap_or(2 * order as u64) as i64
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |msg: &str| Err(SolveError::InvalidConfig(msg.to_string()));
        if self.order == Some(0) {
            return bad("order must be at least 1");
        }
        if !(self.epsilon >= 0.0) {
            return bad("epsilon must be nonnegative");
        }
        if !(self.epsilon_c >= 0.0) {
            return bad("epsilon_c must be nonnegative");
        }
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return bad("alpha must be a finite value greater than 1");
        }
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return bad("kappa must be finite and nonnegative");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_fevals == 0 {
            return bad("max_fevals must be positive");
        }
        Ok(())
    }
}
