//! Acceleration of slowly converging fixed-point iterations, aimed at EM and
//! MM algorithms.
//!
//! The main entry point is [`solve_daarem`]: Anderson acceleration whose
//! extrapolation coefficients are ridge-damped towards the plain map step,
//! with periodic restarts of the history and a merit-based acceptance test
//! that falls back to the plain step. Plain iteration, classic and restarted
//! Anderson acceleration, order-1 Anderson, SQUAREM and a multisecant
//! quasi-Newton scheme are provided for comparison, all behind [`Method`].
//!
//! ```
//! use daarem::{solve_daarem, FnProblem, SolverConfig};
//! use nalgebra::DVector;
//!
//! // maximize -(x - 3)^2 with a contraction towards 3
//! let problem = FnProblem::new(1, |x| x.map(|v| 0.5 * v + 1.5))
//!     .with_merit(|x| -(x[0] - 3.0).powi(2));
//! let report = solve_daarem(&problem, &DVector::from_element(1, 0.0), &SolverConfig::default())?;
//! assert!(report.converged);
//! assert!((report.x_hat[0] - 3.0).abs() < 1e-6);
//! # Ok::<(), daarem::SolveError>(())
//! ```

// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accel;
pub mod baselines;
pub mod bench;
pub mod config;
pub mod damping;
pub mod error;
pub mod method;
pub mod problem;
pub mod problems;
pub mod report;
pub mod rng;

pub use accel::{
    solve_aa, solve_aa1, solve_daarem, solve_em, solve_raa, AccelState, AndersonSolver,
    AndersonVariant, History,
};
pub use baselines::{qnz_update, solve_qnz, solve_squarem, SquaremStep};
pub use config::SolverConfig;
pub use damping::{
    compute_delta, find_lambda, h_of_lambda, phi_and_derivative, ridge_gamma, stopping_band,
    DampingSolution, SvdFactors, WarmStart,
};
pub use error::{DampingError, ProblemError, SolveError};
pub use method::{Method, UnknownMethod};
pub use problem::{FixedPointProblem, FnProblem};
pub use report::{write_trace_jsonl, FallbackCounts, SolveReport, StepOutcome, TraceEntry};
pub use rng::Seed;
