//! Exhaustive enumeration of all `n`-state DFAs over the sample alphabet.
//!
//! Candidates are visited in lexicographic order of (transition table,
//! final-state bitmask), so among equally good candidates the first one is
//! returned. The compiled model is never consulted.

use std::time::Instant;

use num_traits::Zero;

use super::{Backend, SolveOutcome, SolveStatus, SolverError, Work};
use crate::automata::Dfa;
use crate::encoder::{natural_assignment, Goal, RegularizerSpec, Task, SINK_STATE};
use crate::milp::{MilpModel, Rational};

pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;

/// `n^(n·s) · 2^n`, or `None` on overflow.
pub fn candidate_count(n: usize, alphabet_len: usize) -> Option<u128> {
    let tables = (n as u128).checked_pow(u32::try_from(n.checked_mul(alphabet_len)?).ok()?)?;
    tables.checked_mul(1u128.checked_shl(u32::try_from(n).ok()?)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    /// Number of (table, final set) candidates inspected.
    pub visited: u128,
    /// Best admissible DFA with its weighted acceptance and penalty.
    pub best: Option<(Dfa, u64, Rational)>,
}

fn penalty(table: &[usize], n: usize, s: usize, reg: &RegularizerSpec) -> Rational {
    let mut total = Rational::zero();
    if reg.has_sink() {
        let off_sink = table.iter().filter(|&&t| t != SINK_STATE).count() as i64;
        total += reg.lambda_sink * off_sink;
    }
    if !reg.lambda_selfloop.is_zero() {
        let moves = (0..n * s).filter(|&i| table[i] != i / s).count() as i64;
        total += reg.lambda_selfloop * moves;
    }
    if !reg.lambda_parallel.is_zero() {
        let mut edges = vec![false; n * n];
        for (i, &t) in table.iter().enumerate() {
            edges[(i / s) * n + t] = true;
        }
        total += reg.lambda_parallel * edges.iter().filter(|&&e| e).count() as i64;
    }
    total
}

/// Finds the best DFA for `task` by trying every candidate.
pub fn enumerate_optimum(task: &Task<'_>, budget: u128) -> Result<OracleResult, SolverError> {
    let n = task.n();
    task.spec.validate(task.sample.total())?;
    let alphabet = task.tree.alphabet();
    let s = alphabet.len();
    let candidates = candidate_count(n, s).unwrap_or(u128::MAX);
    if candidates > budget {
        return Err(SolverError::BudgetExceeded { candidates, budget });
    }
    let (lo, hi) = task.acceptance_range();
    let goal = task.goal();
    let sink = task.sink();

    // unique words as (tree node, multiplicity)
    let words: Vec<(usize, u64)> = task
        .sample
        .iter()
        .map(|(w, c)| (task.tree.node(w).expect("sample word in its prefix tree"), c))
        .collect();
    let parents: Vec<Option<(usize, usize)>> = (0..task.tree.len()).map(|v| task.tree.parent(v)).collect();

    let mut table = vec![0usize; n * s];
    let mut reached = vec![0usize; parents.len()];
    let mut weight = vec![0u64; n];
    let mut visited: u128 = 0;
    let mut best: Option<(Vec<usize>, usize, u64, Rational, Rational)> = None;

    loop {
        for (v, p) in parents.iter().enumerate() {
            if let Some((u, a)) = *p {
                reached[v] = table[reached[u] * s + a];
            }
        }
        weight.iter_mut().for_each(|w| *w = 0);
        for &(node, c) in &words {
            weight[reached[node]] += c;
        }
        let sink_ok = !sink || (0..s).all(|a| table[SINK_STATE * s + a] == SINK_STATE);
        let pen = match goal {
            Goal::MinPenalty(reg) => penalty(&table, n, s, &reg),
            _ => Rational::zero(),
        };
        for mask in 0usize..(1 << n) {
            visited += 1;
            if !sink_ok || (sink && mask & (1 << SINK_STATE) != 0) {
                continue;
            }
            let accepted: u64 = (0..n).filter(|q| mask & (1 << q) != 0).map(|q| weight[q]).sum();
            if accepted < lo || accepted > hi {
                continue;
            }
            let value = match goal {
                Goal::Feasibility => Rational::zero(),
                Goal::MinAcceptance => Rational::from_integer(accepted as i64),
                Goal::MaxAcceptance => -Rational::from_integer(accepted as i64),
                Goal::MinPenalty(_) => pen,
            };
            if best.as_ref().map_or(true, |b| value < b.4) {
                best = Some((table.clone(), mask, accepted, pen, value));
            }
        }
        // odometer, last entry fastest
        let mut i = table.len();
        loop {
            if i == 0 {
                let best = best.map(|(t, mask, acc, pen, _)| {
                    let finals = (0..n).filter(|q| mask & (1 << q) != 0);
                    let dfa = Dfa::from_table(alphabet.clone(), n, t, finals).expect("enumerated table is valid");
                    (dfa, acc, pen)
                });
                return Ok(OracleResult { visited, best });
            }
            i -= 1;
            table[i] += 1;
            if table[i] < n {
                break;
            }
            table[i] = 0;
        }
    }
}

/// Reference backend: exact answers by enumeration, for small `n` and `|Σ|`.
#[derive(Debug, Clone)]
pub struct EnumerateBackend {
    pub budget: u128,
}

impl Default for EnumerateBackend {
    fn default() -> Self {
        EnumerateBackend {
            budget: DEFAULT_ENUMERATION_BUDGET,
        }
    }
}

impl Backend for EnumerateBackend {
    fn name(&self) -> String {
        "enumerate".to_string()
    }

    fn solve(&self, task: &Task<'_>, _model: &MilpModel) -> Result<SolveOutcome, SolverError> {
        let start = Instant::now();
        let result = enumerate_optimum(task, self.budget)?;
        let work = Work {
            wall: start.elapsed(),
            units: Some(result.visited as f64),
        };
        Ok(match result.best {
            None => SolveOutcome {
                status: SolveStatus::Infeasible,
                assignment: None,
                work,
            },
            Some((dfa, accepted, pen)) => {
                let mut a = natural_assignment(&dfa, task.sample, task.tree);
                a.objective_value = Some(match task.goal() {
                    Goal::Feasibility => Rational::from_integer(1),
                    Goal::MinAcceptance | Goal::MaxAcceptance => Rational::from_integer(accepted as i64),
                    Goal::MinPenalty(_) => pen,
                });
                SolveOutcome {
                    status: SolveStatus::Optimal,
                    assignment: Some(a),
                    work,
                }
            }
        })
    }
}
