//! Built-in EM problems and their simulation designs.

pub mod interval;
pub mod io;
pub mod mvt;
pub mod normal;
pub mod probit;

pub use interval::{IcFeasibility, IcProblem, IntervalCensorData};

pub use io::{Dataset, DatasetHeader};
pub use mvt::{MvtAlgorithm, MvtData, MvtParams, MvtProblem, SigmaPacking};
pub use probit::{ProbitData, ProbitProblem};
