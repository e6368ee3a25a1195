use std::io::{self, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// What happened to the extrapolated candidate in one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    ExtrapolatedAccepted,
    FellBackMonotonicity,
    FellBackNonFinite,
    FellBackInfeasible,
    /// No extrapolation was attempted (plain EM, warm-up, initial step).
    MapStep,
}

impl StepOutcome {
    pub fn is_fallback(self) -> bool {
        matches!(
            self,
            Self::FellBackMonotonicity | Self::FellBackNonFinite | Self::FellBackInfeasible
        )
    }
}

/// One iteration of a solve. `k` indexes the iterate the step started from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub k: usize,
    /// `‖G(x_k) − x_k‖₂`
    pub residual_norm: f64,
    /// `‖x_{k+1} − x_k‖₂`
    pub step_norm: f64,
    /// Merit of the accepted iterate, when it was evaluated.
    pub merit: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub outcome: StepOutcome,
    /// Columns of history used by the extrapolation (0 for non-AA steps).
    pub m_k: usize,
    pub c_k: usize,
    pub s_k: i64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FallbackCounts {
    pub monotonicity: usize,
    pub non_finite: usize,
    pub infeasible: usize,
}

impl FallbackCounts {
    pub fn total(&self) -> usize {
        self.monotonicity + self.non_finite + self.infeasible
    }

    pub(crate) fn record(&mut self, outcome: StepOutcome) {
        match outcome {
            StepOutcome::FellBackMonotonicity => self.monotonicity += 1,
            StepOutcome::FellBackNonFinite => self.non_finite += 1,
            StepOutcome::FellBackInfeasible => self.infeasible += 1,
            StepOutcome::ExtrapolatedAccepted | StepOutcome::MapStep => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x_hat: DVector<f64>,
    pub merit_final: Option<f64>,
    pub converged: bool,
    pub n_map_evals: usize,
    pub n_merit_evals: usize,
    pub n_iterations: usize,
    pub n_fallbacks: usize,
    pub fallbacks: FallbackCounts,
    /// Damping solves that hit the Newton step cap.
    pub n_damping_capped: usize,
    pub last_step_norm: f64,
    pub trace: Option<Vec<TraceEntry>>,
}

#[derive(Serialize)]
struct TraceLine {
    k: usize,
    step_norm: f64,
    merit: Option<f64>,
    delta: Option<f64>,
    lambda: Option<f64>,
    outcome: StepOutcome,
}

/// Write a trace as JSON lines with keys
/// `k, step_norm, merit, delta, lambda, outcome`.
pub fn write_trace_jsonl<W: Write>(trace: &[TraceEntry], mut out: W) -> io::Result<()> {
    for e in trace {
        let line = TraceLine {
            k: e.k,
            step_norm: e.step_norm,
            merit: e.merit.filter(|m| m.is_finite()),
            delta: e.delta,
            lambda: e.lambda,
            outcome: e.outcome,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
