//! Reference accelerators: SQUAREM and the Zhou–Alexander–Lange
//! multisecant quasi-Newton scheme (QN-Z).

use nalgebra::{DMatrix, DVector};

use crate::accel::{check_map_output, check_start, History};
use crate::config::SolverConfig;
use crate::error::SolveError;
use crate::problem::{all_finite, FixedPointProblem};
use crate::report::{FallbackCounts, SolveReport, StepOutcome, TraceEntry};

/// Quantities of one SQUAREM step at `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaremStep {
    /// `G(x) − x`
    pub r: DVector<f64>,
    /// `G(G(x)) − 2G(x) + x`
    pub v: DVector<f64>,
    /// `−‖r‖/‖v‖`; `None` when `v = 0`.
    pub steplength: Option<f64>,
}

impl SquaremStep {
    pub fn new(x: &DVector<f64>, g1: &DVector<f64>, g2: &DVector<f64>) -> Self {
        let r = g1 - x;
        let v = g2 - g1 * 2.0 + x;
        let vn = v.norm();
        let steplength = (vn > 0.0).then(|| -r.norm() / vn);
        Self { r, v, steplength }
    }

    /// `x − 2αr + α²v`
    pub fn extrapolate(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let a = self.steplength?;
        Some(x - &self.r * (2.0 * a) + &self.v * (a * a))
    }
}

/// Tracks iterations, evaluations and the trace for the baseline loops.
struct Tally<'p, P: ?Sized> {
    problem: &'p P,
    n_map_evals: usize,
    n_merit_evals: usize,
    fallbacks: FallbackCounts,
    trace: Option<Vec<TraceEntry>>,
}

impl<'p, P: FixedPointProblem + ?Sized> Tally<'p, P> {
    fn new(problem: &'p P, record: bool) -> Self {
        Self {
            problem,
            n_map_evals: 0,
            n_merit_evals: 0,
            fallbacks: FallbackCounts::default(),
            trace: record.then(Vec::new),
        }
    }

    fn map(&mut self, x: &DVector<f64>, iteration: usize) -> Result<DVector<f64>, SolveError> {
        let g = self.problem.map(x);
        self.n_map_evals += 1;
        check_map_output(self.problem.dim(), &g, iteration, self.n_map_evals)?;
        Ok(g)
    }

    fn merit(&mut self, x: &DVector<f64>) -> f64 {
        self.n_merit_evals += 1;
        self.problem.merit(x)
    }

    fn usable(&self, x: &DVector<f64>) -> Result<(), StepOutcome> {
        if !all_finite(x) {
            Err(StepOutcome::FellBackNonFinite)
        } else if !self.problem.is_feasible(x) {
            Err(StepOutcome::FellBackInfeasible)
        } else {
            Ok(())
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn log(
        &mut self,
        k: usize,
        residual_norm: f64,
        step_norm: f64,
        merit: Option<f64>,
        outcome: StepOutcome,
        m_k: usize,
    ) {
        self.fallbacks.record(outcome);
        if let Some(t) = self.trace.as_mut() {
            t.push(TraceEntry {
                k,
                residual_norm,
                step_norm,
                merit,
                delta: None,
                lambda: None,
                outcome,
                m_k,
                c_k: 0,
                s_k: 0,
            });
        }
    }

    fn finish(
        mut self,
        x: DVector<f64>,
        merit: Option<f64>,
        converged: bool,
        n_iterations: usize,
        last_step_norm: f64,
    ) -> SolveReport {
        let merit_final = if self.problem.has_merit() {
            Some(merit.unwrap_or_else(|| self.merit(&x)))
        } else {
            None
        };
        SolveReport {
            x_hat: x,
            merit_final,
            converged,
            n_map_evals: self.n_map_evals,
            n_merit_evals: self.n_merit_evals,
            n_iterations,
            n_fallbacks: self.fallbacks.total(),
            fallbacks: self.fallbacks,
            n_damping_capped: 0,
            last_step_norm,
            trace: self.trace,
        }
    }
}

/// SQUAREM with the steplength `α = −‖r‖/‖v‖`.
///
/// Each outer iteration costs two map evaluations, plus one for the
/// stabilizing map step applied to an extrapolated point. When a merit is
/// available the stabilized point must satisfy `ℓ ≥ ℓ(x) − ε`; otherwise, or
/// when the extrapolation is unusable, the iteration falls back to `G(G(x))`.
pub fn solve_squarem<P: FixedPointProblem + ?Sized>(
    problem: &P,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    cfg.validate()?;
    check_start(problem.dim(), x0)?;
    let monotone = problem.has_merit();
    let mut tally = Tally::new(problem, cfg.record_trace);
    let mut x = x0.clone();
    let mut merit_x = if monotone {
        Some(tally.merit(&x))
    } else {
        None
    };
    let mut k = 0;
    let mut last_step_norm = f64::INFINITY;

    while tally.n_map_evals < cfg.max_fevals {
        let g1 = tally.map(&x, k)?;
        let r_norm = (&g1 - &x).norm();
        if r_norm < cfg.tol {
            tally.log(k, r_norm, r_norm, None, StepOutcome::MapStep, 0);
            return Ok(tally.finish(g1, None, true, k + 1, r_norm));
        }
        if tally.n_map_evals >= cfg.max_fevals {
            tally.log(k, r_norm, r_norm, None, StepOutcome::MapStep, 0);
            last_step_norm = r_norm;
            x = g1;
            merit_x = None;
            k += 1;
            break;
        }
        let g2 = tally.map(&g1, k)?;
        let step = SquaremStep::new(&x, &g1, &g2);

        let mut outcome = StepOutcome::MapStep;
        let mut next: Option<(DVector<f64>, Option<f64>)> = None;
        if let Some(t) = step.extrapolate(&x) {
            outcome = match tally.usable(&t) {
                Err(o) => o,
                Ok(()) if tally.n_map_evals >= cfg.max_fevals => StepOutcome::MapStep,
                Ok(()) => {
                    let stabilized = tally.map(&t, k);
                    match stabilized {
                        Err(_) => StepOutcome::FellBackNonFinite,
                        Ok(ts) => match tally.usable(&ts) {
                            Err(o) => o,
                            Ok(()) if !monotone => {
                                next = Some((ts, None));
                                StepOutcome::ExtrapolatedAccepted
                            }
                            Ok(()) => {
                                let lt = tally.merit(&ts);
                                let lx = merit_x.unwrap_or(f64::NEG_INFINITY);
                                if !lt.is_finite() {
                                    StepOutcome::FellBackNonFinite
                                } else if lt >= lx - cfg.epsilon {
                                    next = Some((ts, Some(lt)));
                                    StepOutcome::ExtrapolatedAccepted
                                } else {
                                    StepOutcome::FellBackMonotonicity
                                }
                            }
                        },
                    }
                }
            };
        }
        let (x_next, merit_next) = match next {
            Some(n) => n,
            None => {
                let m = monotone.then(|| tally.merit(&g2));
                (g2, m)
            }
        };
        last_step_norm = (&x_next - &x).norm();
        tally.log(k, r_norm, last_step_norm, merit_next, outcome, 0);
        x = x_next;
        merit_x = merit_next;
        k += 1;
        if last_step_norm < cfg.tol {
            return Ok(tally.finish(x, merit_x, true, k, last_step_norm));
        }
    }
    Ok(tally.finish(x, merit_x, false, k, last_step_norm))
}

/// The QN-Z update `x + f + V(UᵀU − UᵀV)⁻¹Uᵀf`; `None` if the `q×q` system
/// is singular.
pub fn qnz_update(
    x: &DVector<f64>,
    f: &DVector<f64>,
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> Option<DVector<f64>> {
    let utu = u.tr_mul(u);
    let utv = u.tr_mul(v);
    let system = utu - utv;
    let rhs = u.tr_mul(f);
    let z = system.lu().solve(&rhs)?;
    if !all_finite(&z) {
        return None;
    }
    Some(x + f + v * z)
}

/// Multisecant quasi-Newton acceleration of Zhou, Alexander and Lange.
///
/// Each iteration evaluates `G(x)` and `G(G(x))` and appends the secant
/// pair `u = G(x) − x`, `v = G(G(x)) − G(x)`. Until `q` pairs are available
/// the iteration is the double map step `G(G(x))`, which is also the
/// fallback for singular systems, unusable candidates and, when a merit is
/// present, any candidate that decreases it.
pub fn solve_qnz<P: FixedPointProblem + ?Sized>(
    problem: &P,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    cfg.validate()?;
    let p = problem.dim();
    check_start(p, x0)?;
    let q = cfg.order_for(p);
    let monotone = problem.has_merit();
    let mut tally = Tally::new(problem, cfg.record_trace);
    let mut secants = History::new(p, q);
    let mut x = x0.clone();
    let mut merit_x = if monotone {
        Some(tally.merit(&x))
    } else {
        None
    };
    let mut k = 0;
    let mut last_step_norm = f64::INFINITY;

    while tally.n_map_evals < cfg.max_fevals {
        let g1 = tally.map(&x, k)?;
        let f = &g1 - &x;
        let r_norm = f.norm();
        if r_norm < cfg.tol {
            tally.log(k, r_norm, r_norm, None, StepOutcome::MapStep, secants.len());
            return Ok(tally.finish(g1, None, true, k + 1, r_norm));
        }
        if tally.n_map_evals >= cfg.max_fevals {
            tally.log(k, r_norm, r_norm, None, StepOutcome::MapStep, secants.len());
            last_step_norm = r_norm;
            x = g1;
            merit_x = None;
            k += 1;
            break;
        }
        let g2 = tally.map(&g1, k)?;
        secants.push(&f, &(&g2 - &g1));

        let mut outcome = StepOutcome::MapStep;
        let mut next = None;
        if secants.len() == q {
            let (u, v) = secants.matrices();
            outcome = match qnz_update(&x, &f, &u, &v) {
                None => StepOutcome::FellBackNonFinite,
                Some(t) => match tally.usable(&t) {
                    Err(o) => o,
                    Ok(()) if !monotone => {
                        next = Some((t, None));
                        StepOutcome::ExtrapolatedAccepted
                    }
                    Ok(()) => {
                        let lt = tally.merit(&t);
                        let lx = merit_x.unwrap_or(f64::NEG_INFINITY);
                        if !lt.is_finite() {
                            StepOutcome::FellBackNonFinite
                        } else if lt >= lx {
                            next = Some((t, Some(lt)));
                            StepOutcome::ExtrapolatedAccepted
                        } else {
                            StepOutcome::FellBackMonotonicity
                        }
                    }
                },
            };
        }
        let (x_next, merit_next) = match next {
            Some(n) => n,
            None => {
                let m = monotone.then(|| tally.merit(&g2));
                (g2, m)
            }
        };
        last_step_norm = (&x_next - &x).norm();
        tally.log(
            k,
            r_norm,
            last_step_norm,
            merit_next,
            outcome,
            secants.len(),
        );
        x = x_next;
        merit_x = merit_next;
        k += 1;
        if last_step_norm < cfg.tol {
            return Ok(tally.finish(x, merit_x, true, k, last_step_norm));
        }
    }
    Ok(tally.finish(x, merit_x, false, k, last_step_norm))
}
