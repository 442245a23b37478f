//! Compiles a learning instance of fixed size `n` into a 0/1 model and
//! reads DFAs back out of solutions.
//!
//! Constraint families and their sizes, with `p = |Pref(S)|`, `s = |Σ|`
//! and `m` unique sample words:
//!
//! | family       | rows            | meaning                                         |
//! |--------------|-----------------|-------------------------------------------------|
//! | `transition` | `n·s`           | exactly one successor per `(q, a)`              |
//! | `state`      | `p`             | every prefix ends in exactly one state          |
//! | `initial`    | `1`             | ε ends in `q_0`                                 |
//! | `run`        | `n²·(p-1)`      | `x_{w,q} + δ_{q,a,q'} - 1 <= x_{wa,q'}`         |
//! | `accept`     | `3·m·n`         | `α_{w,q} = x_{w,q} ∧ f_q`                       |
//! | `lower`      | `0/1`           | weighted acceptance `>= ℓ`                      |
//! | `upper`      | `0/1`           | weighted acceptance `<= u`                      |
//! | `sink`       | `s + 1`         | `q_1` is a non-final state with only self-loops |
//! | `edge_upper` | `n²`            | `e_{q,q'} <= Σ_a δ_{q,a,q'}`                    |
//! | `edge_lower` | `n²·s`          | `e_{q,q'} >= δ_{q,a,q'}`                        |
//! | `fix_accept` | `0/1`           | weighted acceptance pinned to a known optimum   |

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::automata::{Alphabet, Dfa, Sample, State};
use crate::milp::{Assignment, LinExpr, MilpModel, ModelError, Rational, Relation, Sense, VarId};
use crate::prefix_tree::PrefixTree;

/// Index of the sink state when the sink regularizer is enabled.
pub const SINK_STATE: State = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("a DFA needs at least one state")]
    ZeroStates,
    #[error("the sink regularizer needs at least two states, got {0}")]
    SinkRequiresTwoStates(usize),
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("regularizer weight {name} must be non-negative, got {value}")]
    NegativeWeight { name: &'static str, value: Rational },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("malformed assignment: ({state}, symbol #{symbol}) has {count} asserted successors")]
    MalformedAssignment { state: State, symbol: usize, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    TwoBound,
    SingleBoundLower,
    SingleBoundUpper,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::TwoBound => "two-bound",
            Mode::SingleBoundLower => "single-bound-lower",
            Mode::SingleBoundUpper => "single-bound-upper",
        }
    }

    pub fn parse(text: &str) -> Option<Mode> {
        match text {
            "two-bound" => Some(Mode::TwoBound),
            "single-bound-lower" => Some(Mode::SingleBoundLower),
            "single-bound-upper" => Some(Mode::SingleBoundUpper),
            _ => None,
        }
    }
}

/// Interpretability weights λ_s (sink), λ_l (self-loops), λ_p (parallel edges).
/// A zero weight disables the corresponding term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RegularizerSpec {
    pub lambda_sink: Rational,
    pub lambda_selfloop: Rational,
    pub lambda_parallel: Rational,
}

impl RegularizerSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn sink(weight: impl Into<Rational>) -> Self {
        RegularizerSpec {
            lambda_sink: weight.into(),
            ..Self::default()
        }
    }

    pub fn selfloop(weight: impl Into<Rational>) -> Self {
        RegularizerSpec {
            lambda_selfloop: weight.into(),
            ..Self::default()
        }
    }

    pub fn parallel(weight: impl Into<Rational>) -> Self {
        RegularizerSpec {
            lambda_parallel: weight.into(),
            ..Self::default()
        }
    }

    pub fn is_active(&self) -> bool {
        !(self.lambda_sink.is_zero() && self.lambda_selfloop.is_zero() && self.lambda_parallel.is_zero())
    }

    pub fn has_sink(&self) -> bool {
        self.lambda_sink > Rational::zero()
    }

    pub fn validate(&self) -> Result<(), EncodeError> {
        for (name, value) in [
            ("lambda_sink", self.lambda_sink),
            ("lambda_selfloop", self.lambda_selfloop),
            ("lambda_parallel", self.lambda_parallel),
        ] {
            if value.is_negative() {
                return Err(EncodeError::NegativeWeight { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingSpec {
    pub n: usize,
    pub mode: Mode,
    pub lower: Option<u64>,
    pub upper: Option<u64>,
    pub regularizers: RegularizerSpec,
}

impl EncodingSpec {
    pub fn two_bound(n: usize, lower: u64, upper: u64, regularizers: RegularizerSpec) -> Self {
        EncodingSpec {
            n,
            mode: Mode::TwoBound,
            lower: Some(lower),
            upper: Some(upper),
            regularizers,
        }
    }

    pub fn single_lower(n: usize, lower: u64, regularizers: RegularizerSpec) -> Self {
        EncodingSpec {
            n,
            mode: Mode::SingleBoundLower,
            lower: Some(lower),
            upper: None,
            regularizers,
        }
    }

    pub fn single_upper(n: usize, upper: u64, regularizers: RegularizerSpec) -> Self {
        EncodingSpec {
            n,
            mode: Mode::SingleBoundUpper,
            lower: None,
            upper: Some(upper),
            regularizers,
        }
    }

    pub fn validate(&self, sample_total: u64) -> Result<(), EncodeError> {
        if self.n == 0 {
            return Err(EncodeError::ZeroStates);
        }
        self.regularizers.validate()?;
        if self.regularizers.has_sink() && self.n < 2 {
            return Err(EncodeError::SinkRequiresTwoStates(self.n));
        }
        let bad = |msg: String| Err(EncodeError::InvalidBounds(msg));
        match (self.mode, self.lower, self.upper) {
            (Mode::TwoBound, Some(l), Some(u)) => {
                if l > u || u > sample_total {
                    return bad(format!("need lower <= upper <= |S| = {sample_total}, got {l}, {u}"));
                }
            }
            (Mode::TwoBound, _, _) => return bad("two-bound mode needs both bounds".into()),
            (Mode::SingleBoundLower, Some(l), None) if l <= sample_total => {}
            (Mode::SingleBoundLower, _, _) => {
                return bad(format!("single-bound-lower needs only a lower bound <= |S| = {sample_total}"))
            }
            (Mode::SingleBoundUpper, None, Some(u)) if u <= sample_total => {}
            (Mode::SingleBoundUpper, _, _) => {
                return bad(format!("single-bound-upper needs only an upper bound <= |S| = {sample_total}"))
            }
        }
        Ok(())
    }
}

/// Solve stage. Single-bound learning with regularizers runs `Acceptance`
/// first and then `Penalty` with the acceptance pinned to the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Acceptance,
    Penalty { accepted: u64 },
}

/// What a task optimizes, independent of any encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    /// Any DFA within the acceptance range.
    Feasibility,
    MinAcceptance,
    MaxAcceptance,
    MinPenalty(RegularizerSpec),
}

/// One fixed-size solve: the instance plus the stage being solved. Backends
/// either compile it ([`Task::encode`]) or interpret it directly.
#[derive(Debug, Clone)]
pub struct Task<'a> {
    pub sample: &'a Sample,
    pub tree: &'a PrefixTree,
    pub spec: EncodingSpec,
    pub phase: Phase,
}

impl<'a> Task<'a> {
    pub fn new(sample: &'a Sample, tree: &'a PrefixTree, spec: EncodingSpec) -> Self {
        Task {
            sample,
            tree,
            spec,
            phase: Phase::Acceptance,
        }
    }

    pub fn with_phase(&self, phase: Phase) -> Self {
        Task {
            phase,
            ..self.clone()
        }
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    /// Inclusive range the weighted acceptance count must fall in.
    pub fn acceptance_range(&self) -> (u64, u64) {
        match self.phase {
            Phase::Penalty { accepted } => (accepted, accepted),
            Phase::Acceptance => (self.spec.lower.unwrap_or(0), self.spec.upper.unwrap_or(self.sample.total())),
        }
    }

    /// Whether the sink state constraints apply.
    pub fn sink(&self) -> bool {
        self.spec.regularizers.has_sink()
    }

    pub fn goal(&self) -> Goal {
        let reg = self.spec.regularizers;
        match (self.phase, self.spec.mode) {
            (Phase::Penalty { .. }, _) => Goal::MinPenalty(reg),
            (Phase::Acceptance, Mode::TwoBound) if reg.is_active() => Goal::MinPenalty(reg),
            (Phase::Acceptance, Mode::TwoBound) => Goal::Feasibility,
            (Phase::Acceptance, Mode::SingleBoundLower) => Goal::MinAcceptance,
            (Phase::Acceptance, Mode::SingleBoundUpper) => Goal::MaxAcceptance,
        }
    }

    pub fn encode(&self) -> Result<MilpModel, EncodeError> {
        self.spec.validate(self.sample.total())?;
        let n = self.n();
        let mut model = encode_automata_constraints(self.sample, self.tree, n)?;
        encode_bound_constraints(&mut model, self.sample, self.tree, &self.spec)?;
        let penalty = encode_regularizers(&mut model, self.tree.alphabet().len(), &self.spec)?;
        match self.phase {
            Phase::Acceptance => match self.spec.mode {
                Mode::TwoBound => {
                    if self.spec.regularizers.is_active() {
                        model.set_objective(&penalty, Sense::Minimize)?;
                    }
                }
                Mode::SingleBoundLower => encode_acceptance_objective(&mut model, self.sample, self.tree, n, Sense::Minimize)?,
                Mode::SingleBoundUpper => encode_acceptance_objective(&mut model, self.sample, self.tree, n, Sense::Maximize)?,
            },
            Phase::Penalty { accepted } => {
                let acc = acceptance_expr(self.sample, self.tree, n);
                model.add_constraint("fix_accept", &acc, Relation::Eq, Rational::from_integer(accepted as i64))?;
                model.set_objective(&penalty, Sense::Minimize)?;
            }
        }
        Ok(model)
    }
}

fn delta(from: State, symbol: usize, to: State) -> VarId {
    VarId::Delta { from, symbol, to }
}

fn run(prefix: usize, state: State) -> VarId {
    VarId::Run { prefix, state }
}

fn int(v: u64) -> Rational {
    Rational::from_integer(v as i64)
}

/// Declares δ, f and x and emits the transition, state, initial and run
/// families.
pub fn encode_automata_constraints(sample: &Sample, tree: &PrefixTree, n: usize) -> Result<MilpModel, EncodeError> {
    if n == 0 {
        return Err(EncodeError::ZeroStates);
    }
    debug_assert_eq!(sample.alphabet(), tree.alphabet());
    let s = tree.alphabet().len();
    let mut m = MilpModel::new();
    for q in 0..n {
        for a in 0..s {
            for t in 0..n {
                m.add_var(delta(q, a, t))?;
            }
        }
    }
    for q in 0..n {
        m.add_var(VarId::Final(q))?;
    }
    for (w, _) in tree.nodes() {
        for q in 0..n {
            m.add_var(run(w, q))?;
        }
    }

    for q in 0..n {
        for a in 0..s {
            m.add_constraint("transition", &LinExpr::sum((0..n).map(|t| delta(q, a, t))), Relation::Eq, 1)?;
        }
    }
    for (w, _) in tree.nodes() {
        m.add_constraint("state", &LinExpr::sum((0..n).map(|q| run(w, q))), Relation::Eq, 1)?;
    }
    m.add_constraint("initial", &LinExpr::new().term(1, run(tree.root(), 0)), Relation::Eq, 1)?;
    for (v, _) in tree.nodes() {
        let Some((u, a)) = tree.parent(v) else { continue };
        for q in 0..n {
            for t in 0..n {
                let e = LinExpr::new().term(1, run(u, q)).term(1, delta(q, a, t)).term(-1, run(v, t));
                m.add_constraint("run", &e, Relation::Le, 1)?;
            }
        }
    }
    Ok(m)
}

/// `Σ_{w∈S} S(w) · Σ_q α_{w,q}` over unique sample words.
pub fn acceptance_expr(sample: &Sample, tree: &PrefixTree, n: usize) -> LinExpr {
    let mut e = LinExpr::new();
    for (w, c) in sample.iter() {
        let node = tree.node(w).expect("sample word in its prefix tree");
        for q in 0..n {
            e.push(int(c), VarId::Accept { word: node, state: q });
        }
    }
    e
}

/// Declares α and emits the acceptance linearization plus the lower and
/// upper bound rows present in `spec`.
pub fn encode_bound_constraints(
    model: &mut MilpModel,
    sample: &Sample,
    tree: &PrefixTree,
    spec: &EncodingSpec,
) -> Result<(), EncodeError> {
    let n = spec.n;
    for (w, _) in sample.iter() {
        let node = tree.node(w).expect("sample word in its prefix tree");
        for q in 0..n {
            model.add_var(VarId::Accept { word: node, state: q })?;
        }
    }
    for (w, _) in sample.iter() {
        let node = tree.node(w).expect("sample word in its prefix tree");
        for q in 0..n {
            let alpha = VarId::Accept { word: node, state: q };
            let x = run(node, q);
            let f = VarId::Final(q);
            // α >= x + f - 1
            model.add_constraint(
                "accept",
                &LinExpr::new().term(1, alpha).term(-1, x).term(-1, f),
                Relation::Ge,
                -1,
            )?;
            model.add_constraint("accept", &LinExpr::new().term(1, alpha).term(-1, x), Relation::Le, 0)?;
            model.add_constraint("accept", &LinExpr::new().term(1, alpha).term(-1, f), Relation::Le, 0)?;
        }
    }
    let acc = acceptance_expr(sample, tree, n);
    if let Some(l) = spec.lower {
        model.add_constraint("lower", &acc, Relation::Ge, int(l))?;
    }
    if let Some(u) = spec.upper {
        model.add_constraint("upper", &acc, Relation::Le, int(u))?;
    }
    Ok(())
}

/// Sets the objective to the weighted acceptance count.
pub fn encode_acceptance_objective(
    model: &mut MilpModel,
    sample: &Sample,
    tree: &PrefixTree,
    n: usize,
    sense: Sense,
) -> Result<(), EncodeError> {
    model.set_objective(&acceptance_expr(sample, tree, n), sense)?;
    Ok(())
}

/// Adds the regularizer side constraints and returns the penalty
/// expression. The caller decides where the penalty goes in the objective.
pub fn encode_regularizers(
    model: &mut MilpModel,
    alphabet_len: usize,
    spec: &EncodingSpec,
) -> Result<LinExpr, EncodeError> {
    let reg = spec.regularizers;
    reg.validate()?;
    let n = spec.n;
    let s = alphabet_len;
    let mut penalty = LinExpr::new();

    if reg.has_sink() {
        if n < 2 {
            return Err(EncodeError::SinkRequiresTwoStates(n));
        }
        for a in 0..s {
            model.add_constraint("sink", &LinExpr::new().term(1, delta(SINK_STATE, a, SINK_STATE)), Relation::Eq, 1)?;
        }
        model.add_constraint("sink", &LinExpr::new().term(1, VarId::Final(SINK_STATE)), Relation::Eq, 0)?;
        // λ_s · Σ_{q,a} (1 - δ_{q,a,q1})
        for q in 0..n {
            for a in 0..s {
                penalty.add_constant(reg.lambda_sink);
                penalty.push(-reg.lambda_sink, delta(q, a, SINK_STATE));
            }
        }
    }

    if reg.lambda_selfloop > Rational::zero() {
        for q in 0..n {
            for a in 0..s {
                for t in (0..n).filter(|&t| t != q) {
                    penalty.push(reg.lambda_selfloop, delta(q, a, t));
                }
            }
        }
    }

    if reg.lambda_parallel > Rational::zero() {
        for q in 0..n {
            for t in 0..n {
                model.add_var(VarId::Edge { from: q, to: t })?;
            }
        }
        for q in 0..n {
            for t in 0..n {
                let e = VarId::Edge { from: q, to: t };
                let mut row = LinExpr::new().term(1, e);
                for a in 0..s {
                    row.push(-1, delta(q, a, t));
                }
                model.add_constraint("edge_upper", &row, Relation::Le, 0)?;
            }
        }
        for q in 0..n {
            for t in 0..n {
                let e = VarId::Edge { from: q, to: t };
                for a in 0..s {
                    model.add_constraint("edge_lower", &LinExpr::new().term(1, e).term(-1, delta(q, a, t)), Relation::Ge, 0)?;
                }
                penalty.push(reg.lambda_parallel, e);
            }
        }
    }
    Ok(penalty)
}

/// Penalty expression for `spec` without touching any model.
pub fn penalty_expr(alphabet_len: usize, spec: &EncodingSpec) -> Result<LinExpr, EncodeError> {
    let mut scratch = MilpModel::new();
    for q in 0..spec.n {
        for a in 0..alphabet_len {
            for t in 0..spec.n {
                scratch.add_var(delta(q, a, t))?;
            }
        }
        scratch.add_var(VarId::Final(q))?;
    }
    encode_regularizers(&mut scratch, alphabet_len, spec)
}

/// Reads the DFA off the δ and f variables.
pub fn decode_dfa(assignment: &Assignment, alphabet: &Alphabet, n: usize) -> Result<Dfa, DecodeError> {
    let s = alphabet.len();
    let mut table = Vec::with_capacity(n * s);
    for q in 0..n {
        for a in 0..s {
            let targets: Vec<State> = (0..n).filter(|&t| assignment.get(&delta(q, a, t))).collect();
            match targets.as_slice() {
                [t] => table.push(*t),
                _ => {
                    return Err(DecodeError::MalformedAssignment {
                        state: q,
                        symbol: a,
                        count: targets.len(),
                    })
                }
            }
        }
    }
    let finals = (0..n).filter(|&q| assignment.get(&VarId::Final(q)));
    Ok(Dfa::from_table(alphabet.clone(), n, table, finals).expect("decoded table is total and in range"))
}

/// Variable values induced by `dfa`: δ and f from its structure, x from its
/// runs over every prefix, α where a sample word ends in a final state and e
/// where some transition connects two states.
///
/// `dfa` must be over the tree's alphabet.
pub fn natural_assignment(dfa: &Dfa, sample: &Sample, tree: &PrefixTree) -> Assignment {
    let n = dfa.num_states();
    let s = dfa.alphabet().len();
    let mut a = Assignment::default();
    for q in 0..n {
        for sym in 0..s {
            let target = dfa.successor(q, sym);
            for t in 0..n {
                a.set(delta(q, sym, t), t == target);
            }
        }
        a.set(VarId::Final(q), dfa.is_final(q));
        for t in 0..n {
            let connected = (0..s).any(|sym| dfa.successor(q, sym) == t);
            a.set(VarId::Edge { from: q, to: t }, connected);
        }
    }
    let mut reached = vec![0; tree.len()];
    for (v, _) in tree.nodes() {
        if let Some((u, sym)) = tree.parent(v) {
            reached[v] = dfa.successor(reached[u], sym);
        }
        for q in 0..n {
            a.set(run(v, q), q == reached[v]);
        }
    }
    for (w, _) in sample.iter() {
        let node = tree.node(w).expect("sample word in its prefix tree");
        for q in 0..n {
            a.set(VarId::Accept { word: node, state: q }, q == reached[node] && dfa.is_final(q));
        }
    }
    a
}
