use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::accel::{solve_aa, solve_aa1, solve_daarem, solve_em, solve_raa};
use crate::baselines::{solve_qnz, solve_squarem};
use crate::config::SolverConfig;
use crate::error::SolveError;
use crate::problem::FixedPointProblem;
use crate::report::SolveReport;

/// Every solver in the crate, addressable by its short name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Em,
    Aa,
    Raa,
    Aa1,
    Daarem,
    Squarem,
    Qnz,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Em,
        Method::Aa,
        Method::Raa,
        Method::Aa1,
        Method::Daarem,
        Method::Squarem,
        Method::Qnz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Em => "em",
            Method::Aa => "aa",
            Method::Raa => "raa",
            Method::Aa1 => "aa1",
            Method::Daarem => "daarem",
            Method::Squarem => "squarem",
            Method::Qnz => "qnz",
        }
    }

    pub fn solve<P: FixedPointProblem + ?Sized>(
        self,
        problem: &P,
        x0: &DVector<f64>,
        cfg: &SolverConfig,
    ) -> Result<SolveReport, SolveError> {
        match self {
            Method::Em => solve_em(problem, x0, cfg),
            Method::Aa => solve_aa(problem, x0, cfg),
            Method::Raa => solve_raa(problem, x0, cfg),
            Method::Aa1 => solve_aa1(problem, x0, cfg),
            Method::Daarem => solve_daarem(problem, x0, cfg),
            Method::Squarem => solve_squarem(problem, x0, cfg),
            Method::Qnz => solve_qnz(problem, x0, cfg),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown method `{0}`")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}
