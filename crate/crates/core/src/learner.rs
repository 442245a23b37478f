//! Size search with two bounds, fixed-size optimization with one bound, and
//! the reduction from exact DFA identification.

use std::collections::BTreeSet;
use std::time::Duration;

use num_traits::Zero;
use serde_json::{json, Value};
use thiserror::Error;

use crate::automata::{AutomataError, Dfa, DfaJson, Sample, Word};
use crate::encoder::{
    decode_dfa, natural_assignment, penalty_expr, DecodeError, EncodeError, EncodingSpec, Mode, Phase,
    RegularizerSpec, Task,
};
use crate::milp::{Assignment, Rational};
use crate::prefix_tree::{PrefixTree, PrefixTreeError};
use crate::solver::{Backend, SolveStatus, SolverError};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error(transparent)]
    PrefixTree(#[from] PrefixTreeError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("backend failed at size {n}: {source}")]
    Backend { n: usize, source: SolverError },
    #[error("could not decode the solution at size {n}: {source}")]
    Decode { n: usize, source: DecodeError },
    #[error(transparent)]
    Automata(#[from] AutomataError),
    /// The backend answered something the instance rules out.
    #[error("backend fault at size {n}: {detail}")]
    Fault { n: usize, detail: String },
    #[error("positive and negative word sets share {0}")]
    NotDisjoint(Word),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Learned,
    /// No DFA of any size up to `|Pref(S)| + 1` meets the bounds.
    NoDfaExists,
    /// No DFA up to the caller's size cap meets the bounds.
    SizeCapReached,
    /// A solve hit its work limit without an answer.
    LimitReached,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Learned => "learned",
            Outcome::NoDfaExists => "no-dfa-exists",
            Outcome::SizeCapReached => "size-cap-reached",
            Outcome::LimitReached => "limit-reached",
        }
    }
}

/// One solve performed during learning.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub n: usize,
    pub phase: Phase,
    pub status: SolveStatus,
    pub wall: Duration,
    pub work_units: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnReport {
    pub mode: Mode,
    pub lower: Option<u64>,
    pub upper: Option<u64>,
    pub regularizers: RegularizerSpec,
    pub outcome: Outcome,
    pub dfa: Option<Dfa>,
    pub sizes_tried: Vec<Attempt>,
    /// Weighted acceptance of `dfa`, by simulation.
    pub accepted_count: Option<u64>,
    /// Penalty objective in two-bound mode, the optimum `k` in single-bound mode.
    pub objective_value: Option<Rational>,
    pub penalty_value: Option<Rational>,
    pub backend: String,
}

fn rational_json(r: Option<Rational>) -> Value {
    r.map_or(Value::Null, |r| Value::String(r.to_string()))
}

impl LearnReport {
    fn new(mode: Mode, spec: &EncodingSpec, backend: String) -> Self {
        LearnReport {
            mode,
            lower: spec.lower,
            upper: spec.upper,
            regularizers: spec.regularizers,
            outcome: Outcome::NoDfaExists,
            dfa: None,
            sizes_tried: Vec::new(),
            accepted_count: None,
            objective_value: None,
            penalty_value: None,
            backend,
        }
    }

    pub fn states(&self) -> Option<usize> {
        self.dfa.as_ref().map(Dfa::num_states)
    }

    /// Total wall time over all solves.
    pub fn wall(&self) -> Duration {
        self.sizes_tried.iter().map(|a| a.wall).sum()
    }

    /// JSON record; rationals are written as strings such as `"3/2"`.
    pub fn to_json_value(&self) -> Value {
        let attempts: Vec<Value> = self
            .sizes_tried
            .iter()
            .map(|a| {
                json!({
                    "n": a.n,
                    "phase": match a.phase {
                        Phase::Acceptance => "acceptance",
                        Phase::Penalty { .. } => "penalty",
                    },
                    "status": a.status.as_str(),
                    "wall_s": a.wall.as_secs_f64(),
                    "work_units": a.work_units,
                })
            })
            .collect();
        json!({
            "mode": self.mode.as_str(),
            "lower": self.lower,
            "upper": self.upper,
            "lambda_sink": self.regularizers.lambda_sink.to_string(),
            "lambda_selfloop": self.regularizers.lambda_selfloop.to_string(),
            "lambda_parallel": self.regularizers.lambda_parallel.to_string(),
            "status": self.outcome.as_str(),
            "states": self.states(),
            "dfa": self.dfa.as_ref().map(DfaJson::from),
            "sizes_tried": attempts,
            "accepted_count": self.accepted_count,
            "objective_value": rational_json(self.objective_value),
            "penalty_value": rational_json(self.penalty_value),
            "backend": self.backend,
            "wall_s": self.wall().as_secs_f64(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes")
    }
}

/// Search range for [`learn_two_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeRange {
    pub start: usize,
    /// Stop after this size even if `|Pref(S)| + 1` is larger.
    pub cap: Option<usize>,
}

impl Default for SizeRange {
    fn default() -> Self {
        SizeRange { start: 1, cap: None }
    }
}

/// Penalty of `dfa` under `spec`'s regularizers, read off its natural assignment.
pub fn penalty_of(dfa: &Dfa, sample: &Sample, tree: &PrefixTree, spec: &EncodingSpec) -> Result<Rational, EncodeError> {
    let expr = penalty_expr(tree.alphabet().len(), spec)?;
    let a = natural_assignment(dfa, sample, tree);
    Ok(expr
        .terms
        .iter()
        .filter(|(_, v)| a.get(v))
        .fold(expr.constant, |acc, (c, _)| acc + *c))
}

struct Solved {
    status: SolveStatus,
    assignment: Option<Assignment>,
}

fn solve_once<B: Backend + ?Sized>(task: &Task<'_>, backend: &B, report: &mut LearnReport) -> Result<Solved, LearnError> {
    let n = task.n();
    let model = task.encode()?;
    let out = backend.solve(task, &model).map_err(|source| LearnError::Backend { n, source })?;
    report.sizes_tried.push(Attempt {
        n,
        phase: task.phase,
        status: out.status,
        wall: out.work.wall,
        work_units: out.work.units,
    });
    if out.status.has_solution() != out.assignment.is_some() {
        return Err(LearnError::Fault {
            n,
            detail: format!("status {} with assignment present = {}", out.status.as_str(), out.assignment.is_some()),
        });
    }
    if let Some(a) = &out.assignment {
        model.check(a).map_err(|v| LearnError::Backend {
            n,
            source: SolverError::Reverification(v),
        })?;
    }
    Ok(Solved {
        status: out.status,
        assignment: out.assignment,
    })
}

fn decode(a: &Assignment, task: &Task<'_>) -> Result<Dfa, LearnError> {
    decode_dfa(a, task.tree.alphabet(), task.n()).map_err(|source| LearnError::Decode { n: task.n(), source })
}

/// Finds a minimal DFA accepting between `lower` and `upper` sample words
/// (with multiplicity), trying sizes `1, 2, …, |Pref(S)| + 1` in order.
/// With regularizers the penalty is minimized at the first feasible size.
pub fn learn_two_bound<B: Backend + ?Sized>(
    sample: &Sample,
    lower: u64,
    upper: u64,
    reg: RegularizerSpec,
    range: SizeRange,
    backend: &B,
) -> Result<LearnReport, LearnError> {
    let tree = PrefixTree::build(sample)?;
    let first = EncodingSpec::two_bound(1, lower, upper, reg);
    let mut report = LearnReport::new(Mode::TwoBound, &first, backend.name());
    let start = if reg.has_sink() { range.start.max(2) } else { range.start.max(1) };
    EncodingSpec { n: start, ..first.clone() }.validate(sample.total())?;
    let last = tree.size_upper_bound();
    let stop = range.cap.map_or(last, |c| c.min(last));
    for n in start..=stop {
        let spec = EncodingSpec { n, ..first.clone() };
        let task = Task::new(sample, &tree, spec.clone());
        let solved = solve_once(&task, backend, &mut report)?;
        match solved.status {
            SolveStatus::Infeasible => continue,
            SolveStatus::LimitReached => {
                report.outcome = Outcome::LimitReached;
                return Ok(report);
            }
            SolveStatus::Optimal | SolveStatus::Feasible => {
                let dfa = decode(solved.assignment.as_ref().expect("checked above"), &task)?;
                let accepted = dfa.count_accepted(sample)?;
                if accepted < lower || accepted > upper {
                    return Err(LearnError::Fault {
                        n,
                        detail: format!("decoded DFA accepts {accepted}, outside [{lower}, {upper}]"),
                    });
                }
                if reg.is_active() {
                    let pen = penalty_of(&dfa, sample, &tree, &spec)?;
                    report.penalty_value = Some(pen);
                    report.objective_value = Some(pen);
                }
                report.accepted_count = Some(accepted);
                report.dfa = Some(dfa);
                report.outcome = Outcome::Learned;
                return Ok(report);
            }
        }
    }
    report.outcome = if stop < last { Outcome::SizeCapReached } else { Outcome::NoDfaExists };
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Accept as few words as possible, but at least this many.
    Lower(u64),
    /// Accept as many words as possible, but at most this many.
    Upper(u64),
}

/// Finds an `n`-state DFA whose weighted acceptance `k` is minimal subject
/// to `k >= ℓ` (or maximal subject to `k <= u`). With regularizers a second
/// solve minimizes the penalty among DFAs accepting exactly `k`.
pub fn learn_single_bound<B: Backend + ?Sized>(
    sample: &Sample,
    bound: Bound,
    n: usize,
    reg: RegularizerSpec,
    backend: &B,
) -> Result<LearnReport, LearnError> {
    let tree = PrefixTree::build(sample)?;
    let spec = match bound {
        Bound::Lower(l) => EncodingSpec::single_lower(n, l, reg),
        Bound::Upper(u) => EncodingSpec::single_upper(n, u, reg),
    };
    spec.validate(sample.total())?;
    let mut report = LearnReport::new(spec.mode, &spec, backend.name());

    let task = Task::new(sample, &tree, spec.clone());
    let solved = solve_once(&task, backend, &mut report)?;
    let assignment = match solved.status {
        SolveStatus::LimitReached => {
            report.outcome = Outcome::LimitReached;
            return Ok(report);
        }
        // the trivial DFAs always satisfy a single bound
        SolveStatus::Infeasible => {
            return Err(LearnError::Fault {
                n,
                detail: "single-bound model reported infeasible".into(),
            })
        }
        SolveStatus::Optimal | SolveStatus::Feasible => solved.assignment.expect("checked above"),
    };
    let mut dfa = decode(&assignment, &task)?;
    let k = dfa.count_accepted(sample)?;
    if let Some(obj) = assignment.objective_value {
        if obj != Rational::from_integer(k as i64) {
            return Err(LearnError::Fault {
                n,
                detail: format!("objective {obj} differs from simulated acceptance {k}"),
            });
        }
    }
    let within = match bound {
        Bound::Lower(l) => k >= l,
        Bound::Upper(u) => k <= u,
    };
    if !within {
        return Err(LearnError::Fault {
            n,
            detail: format!("decoded DFA accepts {k}, violating {bound:?}"),
        });
    }

    let mut penalty = None;
    if reg.is_active() && solved.status == SolveStatus::Optimal {
        let task2 = task.with_phase(Phase::Penalty { accepted: k });
        let solved2 = solve_once(&task2, backend, &mut report)?;
        match solved2.status {
            SolveStatus::Optimal | SolveStatus::Feasible => {
                let better = decode(solved2.assignment.as_ref().expect("checked above"), &task2)?;
                let k2 = better.count_accepted(sample)?;
                if k2 != k {
                    return Err(LearnError::Fault {
                        n,
                        detail: format!("penalty phase changed acceptance from {k} to {k2}"),
                    });
                }
                dfa = better;
            }
            SolveStatus::Infeasible => {
                return Err(LearnError::Fault {
                    n,
                    detail: "penalty phase infeasible although phase one found a DFA".into(),
                })
            }
            // keep the phase-one DFA
            SolveStatus::LimitReached => {}
        }
        penalty = Some(penalty_of(&dfa, sample, &tree, &spec)?);
    } else if reg.is_active() {
        penalty = Some(penalty_of(&dfa, sample, &tree, &spec)?);
    }

    report.outcome = Outcome::Learned;
    report.accepted_count = Some(k);
    report.objective_value = Some(Rational::from_integer(k as i64));
    report.penalty_value = penalty;
    report.dfa = Some(dfa);
    Ok(report)
}

/// A two-bound instance equivalent to separating `positive` from `negative`
/// with `n` states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    pub sample: Sample,
    pub lower: u64,
    pub upper: u64,
    pub n: usize,
}

/// Builds the sample holding every positive word `|N| + 1` times and every
/// negative word once, with `ℓ = u = |P|·(|N| + 1)`. An `n`-state DFA meets
/// these bounds iff it accepts all of `P` and rejects all of `N`.
pub fn reduce_exact_learning(positive: &[Word], negative: &[Word], k: usize) -> Result<Reduction, LearnError> {
    let p: BTreeSet<&Word> = positive.iter().collect();
    let neg: BTreeSet<&Word> = negative.iter().collect();
    if let Some(w) = p.intersection(&neg).next() {
        return Err(LearnError::NotDisjoint((*w).clone()));
    }
    if k == 0 {
        return Err(EncodeError::ZeroStates.into());
    }
    let heavy = neg.len() as u64 + 1;
    let counts = p
        .iter()
        .map(|w| ((*w).clone(), heavy))
        .chain(neg.iter().map(|w| ((*w).clone(), 1)));
    let sample = Sample::from_counts(counts).expect("multiplicities are positive");
    let bound = p.len() as u64 * heavy;
    debug_assert!(sample.total() >= bound && (bound.is_zero() || sample.total() > 0));
    Ok(Reduction {
        sample,
        lower: bound,
        upper: bound,
        n: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::EnumerateBackend;

    fn sample(words: &[(&str, u64)]) -> Sample {
        Sample::from_counts(words.iter().map(|(w, c)| (Word::from_chars(w), *c))).unwrap()
    }

    fn words(ws: &[&str]) -> Vec<Word> {
        ws.iter().map(|w| Word::from_chars(w)).collect()
    }

    #[test]
    fn example_one_has_no_dfa() {
        let s = sample(&[("a", 2)]);
        let r = learn_two_bound(&s, 1, 1, RegularizerSpec::none(), SizeRange::default(), &EnumerateBackend::default())
            .unwrap();
        assert_eq!(r.outcome, Outcome::NoDfaExists);
        let sizes: Vec<usize> = r.sizes_tried.iter().map(|a| a.n).collect();
        assert_eq!(sizes, [1, 2, 3]);
        assert!(r.sizes_tried.iter().all(|a| a.status == SolveStatus::Infeasible));
        assert!(r.dfa.is_none());
    }

    #[test]
    fn trivial_bounds_give_one_state() {
        let s = sample(&[("ab", 3), ("b", 1), ("", 2)]);
        let r = learn_two_bound(&s, 0, 6, RegularizerSpec::none(), SizeRange::default(), &EnumerateBackend::default())
            .unwrap();
        assert_eq!(r.outcome, Outcome::Learned);
        assert_eq!(r.states(), Some(1));
        assert_eq!(r.sizes_tried.len(), 1);
    }

    #[test]
    fn two_of_four_needs_two_states() {
        let s = sample(&[("a", 1), ("b", 1), ("aa", 1), ("bb", 1)]);
        let r = learn_two_bound(&s, 2, 2, RegularizerSpec::none(), SizeRange::default(), &EnumerateBackend::default())
            .unwrap();
        assert_eq!(r.states(), Some(2));
        assert_eq!(r.accepted_count, Some(2));
        assert_eq!(r.sizes_tried[0].status, SolveStatus::Infeasible);
    }

    #[test]
    fn sink_starts_at_two() {
        let s = sample(&[("a", 1)]);
        let r = learn_two_bound(&s, 0, 1, RegularizerSpec::sink(1), SizeRange::default(), &EnumerateBackend::default())
            .unwrap();
        assert_eq!(r.sizes_tried[0].n, 2);
        assert_eq!(r.penalty_value, Some(Rational::zero()));
    }

    #[test]
    fn size_cap_is_reported() {
        let s = sample(&[("a", 1), ("b", 1), ("aa", 1), ("bb", 1)]);
        let range = SizeRange { start: 1, cap: Some(1) };
        let r = learn_two_bound(&s, 2, 2, RegularizerSpec::none(), range, &EnumerateBackend::default()).unwrap();
        assert_eq!(r.outcome, Outcome::SizeCapReached);
    }

    #[test]
    fn single_bound_examples() {
        let s = sample(&[("a", 1), ("b", 1), ("aa", 1)]);
        let b = EnumerateBackend::default();
        let r = learn_single_bound(&s, Bound::Lower(1), 1, RegularizerSpec::none(), &b).unwrap();
        assert_eq!(r.accepted_count, Some(3));
        let r = learn_single_bound(&s, Bound::Lower(0), 1, RegularizerSpec::none(), &b).unwrap();
        assert_eq!(r.accepted_count, Some(0));
        let r = learn_single_bound(&s, Bound::Lower(1), 2, RegularizerSpec::none(), &b).unwrap();
        assert_eq!(r.accepted_count, Some(1));
        assert_eq!(r.objective_value, Some(Rational::from_integer(1)));
        let r = learn_single_bound(&s, Bound::Upper(2), 2, RegularizerSpec::none(), &b).unwrap();
        assert_eq!(r.accepted_count, Some(2));
    }

    #[test]
    fn single_bound_two_phases() {
        let s = sample(&[("a", 1), ("b", 1), ("aa", 1)]);
        let r = learn_single_bound(&s, Bound::Lower(1), 2, RegularizerSpec::selfloop(1), &EnumerateBackend::default())
            .unwrap();
        assert_eq!(r.sizes_tried.len(), 2);
        assert_eq!(r.accepted_count, Some(1));
        // accepting only "b": q0 -b-> q1, everything else loops; one moving transition
        assert_eq!(r.penalty_value, Some(Rational::from_integer(1)));
    }

    #[test]
    fn reduction_construction() {
        let r = reduce_exact_learning(&words(&["a"]), &words(&["b"]), 2).unwrap();
        assert_eq!(r.sample, sample(&[("a", 2), ("b", 1)]));
        assert_eq!((r.lower, r.upper, r.n), (2, 2, 2));

        let r = reduce_exact_learning(&[], &words(&["b"]), 1).unwrap();
        assert_eq!(r.sample, sample(&[("b", 1)]));
        assert_eq!((r.lower, r.upper), (0, 0));

        assert!(matches!(
            reduce_exact_learning(&words(&["a"]), &words(&["a"]), 1),
            Err(LearnError::NotDisjoint(_))
        ));
    }

    #[test]
    fn reduction_separates() {
        let (p, n) = (words(&["a"]), words(&["b", "ab"]));
        let red = reduce_exact_learning(&p, &n, 2).unwrap();
        let range = SizeRange { start: 1, cap: Some(red.n) };
        let r = learn_two_bound(&red.sample, red.lower, red.upper, RegularizerSpec::none(), range, &EnumerateBackend::default())
            .unwrap();
        let dfa = r.dfa.unwrap();
        assert!(dfa.num_states() <= 2);
        assert!(p.iter().all(|w| dfa.accepts(w).unwrap()));
        assert!(n.iter().all(|w| !dfa.accepts(w).unwrap()));
    }

    #[test]
    fn report_json_shape() {
        let s = sample(&[("a", 2)]);
        let r = learn_two_bound(&s, 1, 1, RegularizerSpec::none(), SizeRange::default(), &EnumerateBackend::default())
            .unwrap();
        let v = r.to_json_value();
        assert_eq!(v["status"], "no-dfa-exists");
        assert_eq!(v["sizes_tried"].as_array().unwrap().len(), 3);
        assert!(v["dfa"].is_null());
        assert_eq!(v["backend"], "enumerate");
    }
}
