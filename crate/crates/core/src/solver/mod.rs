//! Solve backends.
//!
//! [`ExternalBackend`] serializes the model to an LP file and runs a solver
//! process. [`EnumerateBackend`] ignores the model and enumerates every DFA
//! of the requested size; it is exact and serves as the reference oracle for
//! small instances.

use std::time::Duration;

use thiserror::Error;

use crate::encoder::{EncodeError, Task};
use crate::milp::{Assignment, MilpModel, SolutionError, Violation};

mod enumerate;
mod external;

pub use enumerate::{enumerate_optimum, candidate_count, EnumerateBackend, OracleResult, DEFAULT_ENUMERATION_BUDGET};
pub use external::{solve_external, ExternalBackend, ExternalConfig, DEFAULT_TIME_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    /// Integer feasible, optimality not proven (work limit hit).
    Feasible,
    Infeasible,
    /// Work limit hit before any feasible point was found.
    LimitReached,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::LimitReached => "limit-reached",
        }
    }

    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Work {
    pub wall: Duration,
    /// Backend specific effort: branch-and-bound nodes, enumerated candidates.
    pub units: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Present iff `status.has_solution()`.
    pub assignment: Option<Assignment>,
    pub work: Work,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("i/o error around solver process: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver command is empty")]
    EmptyCommand,
    #[error("solver process exited with {code:?}: {stderr}")]
    Process { code: Option<i32>, stderr: String },
    #[error("unreadable solution: {0}")]
    Solution(#[from] SolutionError),
    #[error("solver reported an unbounded 0/1 model")]
    Unbounded,
    #[error("solution failed re-verification against the model: {0}")]
    Reverification(Violation),
    #[error("enumeration needs {candidates} candidates, budget is {budget}")]
    BudgetExceeded { candidates: u128, budget: u128 },
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// A way of solving fixed-size tasks. Backends may use the compiled model,
/// the task semantics, or both.
pub trait Backend: Send + Sync {
    /// Identity recorded in reports.
    fn name(&self) -> String;

    fn solve(&self, task: &Task<'_>, model: &MilpModel) -> Result<SolveOutcome, SolverError>;
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn solve(&self, task: &Task<'_>, model: &MilpModel) -> Result<SolveOutcome, SolverError> {
        (**self).solve(task, model)
    }
}
