//! Anderson-type acceleration of a fixed-point map.
//!
//! All four Anderson variants share one stepping engine, [`AndersonSolver`]:
//!
//! | variant     | history length `m_k` | coefficients            | merit control          |
//! |-------------|----------------------|-------------------------|------------------------|
//! | `Original`  | `min(m, k)`          | least squares           | none                   |
//! | `Restarted` | `min(m, c_k)`        | least squares           | none                   |
//! | `OrderOne`  | `1`                  | scalar projection       | ε-monotone if merit    |
//! | `Damped`    | `min(m, c_k)`        | ridge, `λ` from δ_k     | ε-monotone + cycle     |
//!
//! Every variant falls back on the plain map step `x_k + f_k` when the
//! extrapolated candidate is non-finite or infeasible.

use nalgebra::{DMatrix, DVector};

use crate::config::SolverConfig;
use crate::damping::{compute_delta, find_lambda, ridge_gamma, SvdFactors, WarmStart};
use crate::error::SolveError;
use crate::problem::{all_finite, FixedPointProblem};
use crate::report::{FallbackCounts, SolveReport, StepOutcome, TraceEntry};

/// Fixed-capacity ring of paired difference columns `(Δx_i, Δf_i)`.
#[derive(Debug, Clone)]
pub struct History {
    dx: DMatrix<f64>,
    df: DMatrix<f64>,
    head: usize,
    len: usize,
}

impl History {
    pub fn new(dim: usize, capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            dx: DMatrix::zeros(dim, capacity),
            df: DMatrix::zeros(dim, capacity),
            head: 0,
            len: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.dx.ncols()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Append a pair, overwriting the oldest one when full.
    pub fn push(&mut self, dx: &DVector<f64>, df: &DVector<f64>) {
        let cap = self.capacity();
        let slot = (self.head + self.len) % cap;
        self.dx.set_column(slot, dx);
        self.df.set_column(slot, df);
        if self.len < cap {
            self.len += 1;
        } else {
            self.head = (self.head + 1) % cap;
        }
    }

    /// Drop the oldest pairs until at most `keep` remain.
    pub fn truncate_oldest(&mut self, keep: usize) {
        while self.len > keep {
            self.head = (self.head + 1) % self.capacity();
            self.len -= 1;
        }
    }

    fn slot(&self, i: usize) -> usize {
        (self.head + i) % self.capacity()
    }

    /// Copies of `(X, F)`, columns oldest first.
    pub fn matrices(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let p = self.dx.nrows();
        let mut x = DMatrix::zeros(p, self.len);
        let mut f = DMatrix::zeros(p, self.len);
        for i in 0..self.len {
            let s = self.slot(i);
            x.set_column(i, &self.dx.column(s));
            f.set_column(i, &self.df.column(s));
        }
        (x, f)
    }
}

/// Mutable state of an Anderson solve.
#[derive(Debug, Clone)]
pub struct AccelState {
    x: DVector<f64>,
    f: Option<DVector<f64>>,
    x_prev: DVector<f64>,
    f_prev: DVector<f64>,
    history: History,
    k: usize,
    c: usize,
    s: i64,
    merit_x: Option<f64>,
    merit_anchor: Option<f64>,
    warm: Option<WarmStart>,
}

impl AccelState {
    /// State holding iterate `x` with residual `f` and the given history
    /// (columns oldest first). Useful for evaluating [`AccelState::aa_step`]
    /// outside a solve.
    pub fn from_parts(
        x: DVector<f64>,
        f: DVector<f64>,
        x_hist: &DMatrix<f64>,
        f_hist: &DMatrix<f64>,
    ) -> Result<Self, SolveError> {
        let p = x.len();
        for got in [f.len(), x_hist.nrows(), f_hist.nrows()] {
            if got != p {
                return Err(SolveError::DimensionMismatch { expected: p, got });
            }
        }
        if x_hist.ncols() != f_hist.ncols() {
            return Err(SolveError::DimensionMismatch {
                expected: x_hist.ncols(),
                got: f_hist.ncols(),
            });
        }
        let mut history = History::new(p, x_hist.ncols().max(1));
        for j in 0..x_hist.ncols() {
            history.push(
                &x_hist.column(j).into_owned(),
                &f_hist.column(j).into_owned(),
            );
        }
        Ok(Self {
            x_prev: x.clone(),
            f_prev: f.clone(),
            x,
            f: Some(f),
            history,
            k: 1,
            c: 1,
            s: 0,
            merit_x: None,
            merit_anchor: None,
            warm: None,
        })
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    /// Residual at the current iterate, if it has been evaluated yet.
    pub fn residual(&self) -> Option<&DVector<f64>> {
        self.f.as_ref()
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn iteration(&self) -> usize {
        self.k
    }

    pub fn cycle_counter(&self) -> usize {
        self.c
    }

    pub fn damping_exponent(&self) -> i64 {
        self.s
    }

    pub fn merit_anchor(&self) -> Option<f64> {
        self.merit_anchor
    }

    pub fn warm_start(&self) -> Option<WarmStart> {
        self.warm
    }

    /// Candidate `x_k + f_k − (X + F)γ`. Does not touch the state.
    pub fn aa_step(&self, gamma: &DVector<f64>) -> Result<DVector<f64>, SolveError> {
        let f = self.f.as_ref().ok_or(SolveError::DimensionMismatch {
            expected: self.x.len(),
            got: 0,
        })?;
        let (xh, fh) = self.history.matrices();
        extrapolate(&self.x, f, &xh, &fh, gamma)
    }
}

fn extrapolate(
    x: &DVector<f64>,
    f: &DVector<f64>,
    xh: &DMatrix<f64>,
    fh: &DMatrix<f64>,
    gamma: &DVector<f64>,
) -> Result<DVector<f64>, SolveError> {
    if gamma.len() != xh.ncols() {
        return Err(SolveError::DimensionMismatch {
            expected: xh.ncols(),
            got: gamma.len(),
        });
    }
    let mut t = x + f;
    t.gemv(-1.0, xh, gamma, 1.0);
    t.gemv(-1.0, fh, gamma, 1.0);
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AndersonVariant {
    /// Growing window `m_k = min(m, k)`, least-squares coefficients.
    Original,
    /// Window restarts to one column after every `m` iterations.
    Restarted,
    /// `m = 1` with the scalar coefficient `Δfᵀf / ΔfᵀΔf`.
    OrderOne,
    /// Restarts, ridge damping and ε-monotonicity control (DAAREM).
    Damped,
}

impl AndersonVariant {
    fn restarts(self) -> bool {
        matches!(self, Self::Restarted | Self::Damped)
    }
}

/// Iteration-level driver for the Anderson variants.
///
/// Construction performs the initial map step `x₁ = G(x₀)`; each call to
/// [`step`](Self::step) performs one accelerated iteration.
pub struct AndersonSolver<'p, P: FixedPointProblem + ?Sized> {
    problem: &'p P,
    cfg: SolverConfig,
    variant: AndersonVariant,
    order: usize,
    floor: i64,
    monotone: bool,
    state: AccelState,
    converged: bool,
    last_step_norm: f64,
    n_map_evals: usize,
    n_merit_evals: usize,
    fallbacks: FallbackCounts,
    n_damping_capped: usize,
    trace: Vec<TraceEntry>,
}

impl<'p, P: FixedPointProblem + ?Sized> AndersonSolver<'p, P> {
    pub fn new(
        problem: &'p P,
        x0: &DVector<f64>,
        cfg: &SolverConfig,
        variant: AndersonVariant,
    ) -> Result<Self, SolveError> {
        cfg.validate()?;
        let p = problem.dim();
        check_start(p, x0)?;
        let order = match variant {
            AndersonVariant::OrderOne => 1,
            _ => cfg.order_for(p),
        };
        let monotone = match variant {
            AndersonVariant::Damped => {
                if !problem.has_merit() {
                    return Err(SolveError::MeritMissing);
                }
                true
            }
            AndersonVariant::OrderOne => problem.has_merit(),
            AndersonVariant::Original | AndersonVariant::Restarted => false,
        };

        let g0 = problem.map(x0);
        check_map_output(p, &g0, 0, 1)?;
        let f0 = &g0 - x0;
        let step = f0.norm();

        let mut solver = Self {
            problem,
            cfg: cfg.clone(),
            variant,
            order,
            floor: cfg.damping_floor_for(order),
            monotone,
            state: AccelState {
                x: g0,
                f: None,
                x_prev: x0.clone(),
                f_prev: f0,
                history: History::new(p, order),
                k: 1,
                c: 1,
                s: 0,
                merit_x: None,
                merit_anchor: None,
                warm: None,
            },
            converged: step < cfg.tol,
            last_step_norm: step,
            n_map_evals: 1,
            n_merit_evals: 0,
            fallbacks: FallbackCounts::default(),
            n_damping_capped: 0,
            trace: Vec::new(),
        };
        if monotone {
            let l1 = solver.eval_merit(&solver.state.x.clone());
            solver.state.merit_x = Some(l1);
            solver.state.merit_anchor = Some(l1);
        }
        if solver.cfg.record_trace {
            solver.trace.push(TraceEntry {
                k: 0,
                residual_norm: step,
                step_norm: step,
                merit: solver.state.merit_x,
                delta: None,
                lambda: None,
                outcome: StepOutcome::MapStep,
                m_k: 0,
                c_k: 0,
                s_k: 0,
            });
        }
        Ok(solver)
    }

    pub fn state(&self) -> &AccelState {
        &self.state
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    pub fn n_map_evals(&self) -> usize {
        self.n_map_evals
    }

    fn eval_merit(&mut self, x: &DVector<f64>) -> f64 {
        self.n_merit_evals += 1;
        self.problem.merit(x)
    }

    /// Evaluate `f_k` at the current iterate if that hasn't happened yet.
    fn ensure_residual(&mut self) -> Result<(), SolveError> {
        if self.state.f.is_none() {
            let g = self.problem.map(&self.state.x);
            self.n_map_evals += 1;
            check_map_output(self.problem.dim(), &g, self.state.k, self.n_map_evals)?;
            self.state.f = Some(g - &self.state.x);
        }
        Ok(())
    }

    /// One accelerated iteration. Returns the trace entry for it.
    pub fn step(&mut self) -> Result<TraceEntry, SolveError> {
        self.ensure_residual()?;
        let k = self.state.k;
        let c = self.state.c;
        let s = self.state.s;
        let f = self.state.f.clone().expect("residual evaluated");
        let x = self.state.x.clone();

        let m_k = if self.variant.restarts() {
            self.order.min(c)
        } else {
            self.order.min(k)
        };
        let dx = &x - &self.state.x_prev;
        let df = &f - &self.state.f_prev;
        self.state.history.push(&dx, &df);
        self.state.history.truncate_oldest(m_k);
        let (xh, fh) = self.state.history.matrices();

        let mut delta = None;
        let mut lambda = None;
        let gamma = match self.variant {
            AndersonVariant::Original | AndersonVariant::Restarted => {
                let svd = SvdFactors::new(&fh, &f);
                lambda = Some(0.0);
                ridge_gamma(&svd, 0.0)
            }
            AndersonVariant::OrderOne => {
                let col = fh.column(0);
                let den = col.dot(&col);
                let g = if den > 0.0 { col.dot(&f) / den } else { 0.0 };
                DVector::from_element(1, g)
            }
            AndersonVariant::Damped => {
                let d = compute_delta(s, self.cfg.alpha, self.cfg.kappa);
                delta = Some(d);
                let svd = SvdFactors::new(&fh, &f);
                match find_lambda(&svd, self.state.warm, s, self.cfg.alpha, self.cfg.kappa) {
                    Ok(sol) => {
                        if sol.capped {
                            self.n_damping_capped += 1;
                        }
                        self.state.warm = Some(sol.warm_start());
                        lambda = Some(sol.lambda);
                        ridge_gamma(&svd, sol.lambda)
                    }
                    Err(_) => DVector::zeros(fh.ncols()),
                }
            }
        };

        let candidate = extrapolate(&x, &f, &xh, &fh, &gamma)?;
        let (outcome, merit_candidate) = self.judge(&candidate);
        let (x_next, merit_next) = if outcome.is_fallback() {
            let em = &x + &f;
            let merit = if self.monotone {
                Some(self.eval_merit(&em))
            } else {
                None
            };
            (em, merit)
        } else {
            (candidate, merit_candidate)
        };
        self.fallbacks.record(outcome);

        let mut s_new = if outcome == StepOutcome::ExtrapolatedAccepted {
            s + 1
        } else {
            s
        };
        if self.variant.restarts() && k.is_multiple_of(self.order) {
            if self.variant == AndersonVariant::Damped {
                let now = merit_next.unwrap_or(f64::NEG_INFINITY);
                let anchor = self.state.merit_anchor.unwrap_or(f64::NEG_INFINITY);
                if !(now >= anchor - self.cfg.epsilon_c) {
                    s_new = (s_new - self.order as i64).max(-self.floor);
                }
                self.state.merit_anchor = merit_next;
            }
            self.state.c = 1;
        } else {
            self.state.c = c + 1;
        }

        let step_norm = (&x_next - &x).norm();
        self.state.x_prev = x;
        self.state.f_prev = f;
        self.state.x = x_next;
        self.state.f = None;
        self.state.merit_x = merit_next;
        self.state.s = s_new;
        self.state.k = k + 1;
        self.last_step_norm = step_norm;
        self.converged = step_norm < self.cfg.tol;

        let entry = TraceEntry {
            k,
            residual_norm: self.state.f_prev.norm(),
            step_norm,
            merit: merit_next,
            delta,
            lambda,
            outcome,
            m_k,
            c_k: c,
            s_k: s,
        };
        if self.cfg.record_trace {
            self.trace.push(entry.clone());
        }
        Ok(entry)
    }

    /// Accept or reject a candidate; returns its merit when it was computed.
    fn judge(&mut self, candidate: &DVector<f64>) -> (StepOutcome, Option<f64>) {
        if !all_finite(candidate) {
            return (StepOutcome::FellBackNonFinite, None);
        }
        if !self.problem.is_feasible(candidate) {
            return (StepOutcome::FellBackInfeasible, None);
        }
        if !self.monotone {
            return (StepOutcome::ExtrapolatedAccepted, None);
        }
        let lt = self.eval_merit(candidate);
        if !lt.is_finite() {
            return (StepOutcome::FellBackNonFinite, None);
        }
        let lx = self.state.merit_x.unwrap_or(f64::NEG_INFINITY);
        if lt >= lx - self.cfg.epsilon {
            (StepOutcome::ExtrapolatedAccepted, Some(lt))
        } else {
            (StepOutcome::FellBackMonotonicity, None)
        }
    }

    /// Iterate until convergence or until the map-evaluation cap is reached.
    pub fn run(mut self) -> Result<SolveReport, SolveError> {
        while !self.converged {
            if self.state.f.is_none() && self.n_map_evals >= self.cfg.max_fevals {
                break;
            }
            self.step()?;
        }
        Ok(self.into_report())
    }

    pub fn into_report(mut self) -> SolveReport {
        let merit_final = if self.problem.has_merit() {
            match self.state.merit_x {
                Some(m) => Some(m),
                None => {
                    let x = self.state.x.clone();
                    Some(self.eval_merit(&x))
                }
            }
        } else {
            None
        };
        SolveReport {
            x_hat: self.state.x,
            merit_final,
            converged: self.converged,
            n_map_evals: self.n_map_evals,
            n_merit_evals: self.n_merit_evals,
            n_iterations: self.state.k,
            n_fallbacks: self.fallbacks.total(),
            fallbacks: self.fallbacks,
            n_damping_capped: self.n_damping_capped,
            last_step_norm: self.last_step_norm,
            trace: self.cfg.record_trace.then_some(self.trace),
        }
    }
}

pub(crate) fn check_start(p: usize, x0: &DVector<f64>) -> Result<(), SolveError> {
    if x0.len() != p {
        return Err(SolveError::DimensionMismatch {
            expected: p,
            got: x0.len(),
        });
    }
    if !all_finite(x0) {
        return Err(SolveError::NonFiniteStart);
    }
    Ok(())
}

pub(crate) fn check_map_output(
    p: usize,
    g: &DVector<f64>,
    iteration: usize,
    n_map_evals: usize,
) -> Result<(), SolveError> {
    if g.len() != p {
        return Err(SolveError::DimensionMismatch {
            expected: p,
            got: g.len(),
        });
    }
    if !all_finite(g) {
        return Err(SolveError::NonFiniteIterate {
            iteration,
            n_map_evals,
        });
    }
    Ok(())
}

/// Plain fixed-point iteration `x_{k+1} = G(x_k)`.
pub fn solve_em<P: FixedPointProblem + ?Sized>(
    problem: &P,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    cfg.validate()?;
    let p = problem.dim();
    check_start(p, x0)?;
    let mut x = x0.clone();
    let mut n_map_evals = 0;
    let mut converged = false;
    let mut last_step_norm = f64::INFINITY;
    let mut trace = Vec::new();
    while n_map_evals < cfg.max_fevals {
        let g = problem.map(&x);
        n_map_evals += 1;
        check_map_output(p, &g, n_map_evals - 1, n_map_evals)?;
        last_step_norm = (&g - &x).norm();
        if cfg.record_trace {
            trace.push(TraceEntry {
                k: n_map_evals - 1,
                residual_norm: last_step_norm,
                step_norm: last_step_norm,
                merit: None,
                delta: None,
                lambda: None,
                outcome: StepOutcome::MapStep,
                m_k: 0,
                c_k: 0,
                s_k: 0,
            });
        }
        x = g;
        if last_step_norm < cfg.tol {
            converged = true;
            break;
        }
    }
    let (merit_final, n_merit_evals) = if problem.has_merit() {
        (Some(problem.merit(&x)), 1)
    } else {
        (None, 0)
    };
    Ok(SolveReport {
        x_hat: x,
        merit_final,
        converged,
        n_map_evals,
        n_merit_evals,
        n_iterations: n_map_evals,
        n_fallbacks: 0,
        fallbacks: FallbackCounts::default(),
        n_damping_capped: 0,
        last_step_norm,
        trace: cfg.record_trace.then_some(trace),
    })
}

/// Anderson acceleration with a growing window and no safeguards beyond
/// falling back on the map step for non-finite or infeasible candidates.
pub fn solve_aa<P: FixedPointProblem + ?Sized>(
    problem: &P,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    AndersonSolver::new(problem, x0, cfg, AndersonVariant::Original)?.run()
}

/// Anderson acceleration restarted every `m` iterations.
pub fn solve_raa<P: FixedPointProblem + ?Sized>(
    problem: &P,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    AndersonSolver::new(problem, x0, cfg, AndersonVariant::Restarted)?.run()
}

/// Order-one Anderson acceleration:
/// `x_{k+1} = (1 − γ)G(x_k) + γG(x_{k−1})`.
pub fn solve_aa1<P: FixedPointProblem + ?Sized>(
    problem: &P,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    AndersonSolver::new(problem, x0, cfg, AndersonVariant::OrderOne)?.run()
}

/// Damped Anderson acceleration with restarts and ε-monotonicity (DAAREM).
/// Requires a merit function.
pub fn solve_daarem<P: FixedPointProblem + ?Sized>(
    problem: &P,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    AndersonSolver::new(problem, x0, cfg, AndersonVariant::Damped)?.run()
}
