//! Reader for solver solution files.
//!
//! ```text
//! OPTIMAL
//! objective 3
//! d_0_0_1 1
//! f_1 0
//! ```
//!
//! The status line and the `objective` line are optional, as is a `work`
//! line carrying backend-reported effort (nodes, iterations). Variables that
//! are not listed take value 0. Blank lines and `#` comments are skipped.

use thiserror::Error;

use super::{Assignment, MilpModel, VarId};

/// Distance to the nearest integer tolerated before a value is rejected.
pub const INTEGRALITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionStatus {
    Optimal,
    /// Integer-feasible but not proven optimal, e.g. stopped at a limit.
    Feasible,
    Infeasible,
    Unbounded,
    /// Work limit reached without any feasible point.
    LimitReached,
}

impl SolutionStatus {
    fn parse(token: &str) -> Option<Self> {
        match token.to_ascii_uppercase().as_str() {
            "OPTIMAL" => Some(Self::Optimal),
            "FEASIBLE" | "SUBOPTIMAL" => Some(Self::Feasible),
            "INFEASIBLE" => Some(Self::Infeasible),
            "UNBOUNDED" => Some(Self::Unbounded),
            "LIMIT" | "LIMIT_REACHED" | "TIME_LIMIT" => Some(Self::LimitReached),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolutionStatus,
    pub objective: Option<f64>,
    pub work: Option<f64>,
    /// Present for `Optimal` and `Feasible`.
    pub assignment: Option<Assignment>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolutionError {
    #[error("line {line}: variable {name} has non-integral value {value}")]
    NonIntegral { line: usize, name: String, value: f64 },
    #[error("line {line}: unknown variable {name}")]
    UnknownVariable { line: usize, name: String },
    #[error("line {line}: cannot parse {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: variable {name} assigned twice")]
    Duplicate { line: usize, name: String },
}

fn parse_value(line: usize, text: &str) -> Result<f64, SolutionError> {
    text.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(SolutionError::Malformed {
        line,
        text: text.to_string(),
    })
}

pub fn parse_solution(text: &str, model: &MilpModel) -> Result<Solution, SolutionError> {
    let mut status = None;
    let mut objective = None;
    let mut work = None;
    let mut assignment = Assignment::default();
    let mut seen_content = false;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match fields.as_slice() {
            [token] if !seen_content => {
                status = Some(SolutionStatus::parse(token).ok_or_else(|| SolutionError::Malformed {
                    line,
                    text: trimmed.to_string(),
                })?);
            }
            ["objective", v] => objective = Some(parse_value(line, v)?),
            ["work", v] => work = Some(parse_value(line, v)?),
            [name, v] => {
                let value = parse_value(line, v)?;
                let var = VarId::parse(name)
                    .filter(|id| model.has_var(id))
                    .ok_or_else(|| SolutionError::UnknownVariable {
                        line,
                        name: name.to_string(),
                    })?;
                let rounded = value.round();
                if (value - rounded).abs() > INTEGRALITY_TOLERANCE || !(rounded == 0.0 || rounded == 1.0) {
                    return Err(SolutionError::NonIntegral {
                        line,
                        name: name.to_string(),
                        value,
                    });
                }
                if assignment.values.insert(var, rounded == 1.0).is_some() {
                    return Err(SolutionError::Duplicate {
                        line,
                        name: name.to_string(),
                    });
                }
            }
            _ => {
                return Err(SolutionError::Malformed {
                    line,
                    text: trimmed.to_string(),
                })
            }
        }
        seen_content = true;
    }

    let status = status.unwrap_or(SolutionStatus::Optimal);
    let assignment = match status {
        SolutionStatus::Optimal | SolutionStatus::Feasible => {
            for v in model.variables() {
                assignment.values.entry(*v).or_insert(false);
            }
            assignment.objective_value = Some(model.objective_value(&assignment));
            Some(assignment)
        }
        _ => None,
    };
    Ok(Solution {
        status,
        objective,
        work,
        assignment,
    })
}
