//! Solver-agnostic model of a 0/1 integer linear program.
//!
//! Every variable is binary. Coefficients are exact rationals so a
//! solution returned by an external solver can be re-checked without
//! floating point slack.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Zero};
use thiserror::Error;

mod lp;
mod solution;

pub use lp::write_lp;
pub use solution::{parse_solution, Solution, SolutionError, SolutionStatus, INTEGRALITY_TOLERANCE};

pub type Rational = Rational64;

/// Parses `"3"`, `"-3/4"` or a plain decimal such as `"0.096"` exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        return (d != 0).then(|| Rational::new(n, d));
    }
    let (neg, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !(int.chars().chain(frac.chars())).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let scale = 10i64.checked_pow(u32::try_from(frac.len()).ok()?)?;
    let whole: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let part: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    let value = Rational::new(whole.checked_mul(scale)?.checked_add(part)?, scale);
    Some(if neg { -value } else { value })
}

/// Identity of a model variable. The name scheme (`d_q_a_q'`, `f_q`,
/// `x_w_q`, `a_w_q`, `e_q_q'`) is bijective with the index tuple; words
/// and prefixes are referenced by their prefix-tree node and symbols by
/// their alphabet index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    /// δ_{q,a,q'}: transition from `from` on symbol `symbol` goes to `to`.
    Delta { from: usize, symbol: usize, to: usize },
    /// f_q: state is final.
    Final(usize),
    /// x_{w,q}: after reading prefix `prefix` the DFA is in `state`.
    Run { prefix: usize, state: usize },
    /// α_{w,q}: sample word `word` ends in `state` and that state is final.
    Accept { word: usize, state: usize },
    /// e_{q,q'}: some transition leads from `from` to `to`.
    Edge { from: usize, to: usize },
}

impl VarId {
    pub fn name(&self) -> String {
        self.to_string()
    }

    pub fn parse(name: &str) -> Option<VarId> {
        let mut parts = name.split('_');
        let kind = parts.next()?;
        let nums: Vec<usize> = parts.map(|p| p.parse().ok()).collect::<Option<_>>()?;
        // reject non-canonical spellings such as leading zeros
        let id = match (kind, nums.as_slice()) {
            ("d", &[from, symbol, to]) => VarId::Delta { from, symbol, to },
            ("f", &[q]) => VarId::Final(q),
            ("x", &[prefix, state]) => VarId::Run { prefix, state },
            ("a", &[word, state]) => VarId::Accept { word, state },
            ("e", &[from, to]) => VarId::Edge { from, to },
            _ => return None,
        };
        (id.name() == name).then_some(id)
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarId::Delta { from, symbol, to } => write!(f, "d_{from}_{symbol}_{to}"),
            VarId::Final(q) => write!(f, "f_{q}"),
            VarId::Run { prefix, state } => write!(f, "x_{prefix}_{state}"),
            VarId::Accept { word, state } => write!(f, "a_{word}_{state}"),
            VarId::Edge { from, to } => write!(f, "e_{from}_{to}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("variable {0} is declared twice")]
    DuplicateName(VarId),
    #[error("variable {0} is not declared")]
    UndeclaredVariable(VarId),
}

/// Linear expression under construction, referencing variables by identity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(Rational, VarId)>,
    pub constant: Rational,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: impl Into<Rational>) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c.into(),
        }
    }

    pub fn term(mut self, coef: impl Into<Rational>, var: VarId) -> Self {
        self.terms.push((coef.into(), var));
        self
    }

    pub fn push(&mut self, coef: impl Into<Rational>, var: VarId) {
        self.terms.push((coef.into(), var));
    }

    pub fn add_constant(&mut self, c: impl Into<Rational>) {
        self.constant += c.into();
    }

    pub fn sum(vars: impl IntoIterator<Item = VarId>) -> Self {
        LinExpr {
            terms: vars.into_iter().map(|v| (Rational::one(), v)).collect(),
            constant: Rational::zero(),
        }
    }

    pub fn extend(&mut self, other: LinExpr) {
        self.terms.extend(other.terms);
        self.constant += other.constant;
    }
}

/// Resolved linear term: aggregated coefficients over variable indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinTerm {
    /// Sorted by variable index, no duplicates, no zero coefficients.
    pub terms: Vec<(Rational, usize)>,
    pub constant: Rational,
}

impl LinTerm {
    fn eval(&self, values: &[bool]) -> Rational {
        self.terms
            .iter()
            .filter(|(_, v)| values[*v])
            .fold(self.constant, |acc, (c, _)| acc + c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn holds(self, lhs: Rational, rhs: Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    /// Unique row name, `<family>_<k>`.
    pub name: String,
    pub family: String,
    pub lhs: LinTerm,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Values for every variable of a model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub values: HashMap<VarId, bool>,
    pub objective_value: Option<Rational>,
}

impl Assignment {
    /// Value of `var`; absent variables read as 0.
    pub fn get(&self, var: &VarId) -> bool {
        self.values.get(var).copied().unwrap_or(false)
    }

    pub fn set(&mut self, var: VarId, value: bool) {
        self.values.insert(var, value);
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("constraint {name} violated: lhs {lhs} {relation} {rhs} does not hold")]
pub struct Violation {
    pub name: String,
    pub lhs: Rational,
    pub relation: &'static str,
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilpModel {
    variables: Vec<VarId>,
    index: HashMap<VarId, usize>,
    constraints: Vec<Constraint>,
    family_counts: BTreeMap<String, usize>,
    objective: LinTerm,
    sense: Sense,
}

impl Default for MilpModel {
    fn default() -> Self {
        Self::new()
    }
}

impl MilpModel {
    /// Empty feasibility model: minimize the constant 1.
    pub fn new() -> Self {
        MilpModel {
            variables: Vec::new(),
            index: HashMap::new(),
            constraints: Vec::new(),
            family_counts: BTreeMap::new(),
            objective: LinTerm {
                terms: Vec::new(),
                constant: Rational::one(),
            },
            sense: Sense::Minimize,
        }
    }

    pub fn add_var(&mut self, var: VarId) -> Result<usize, ModelError> {
        if self.index.contains_key(&var) {
            return Err(ModelError::DuplicateName(var));
        }
        let i = self.variables.len();
        self.variables.push(var);
        self.index.insert(var, i);
        Ok(i)
    }

    pub fn has_var(&self, var: &VarId) -> bool {
        self.index.contains_key(var)
    }

    pub fn var_index(&self, var: &VarId) -> Option<usize> {
        self.index.get(var).copied()
    }

    fn resolve(&self, expr: &LinExpr) -> Result<LinTerm, ModelError> {
        let mut acc: BTreeMap<usize, Rational> = BTreeMap::new();
        for (c, v) in &expr.terms {
            let i = self.var_index(v).ok_or(ModelError::UndeclaredVariable(*v))?;
            *acc.entry(i).or_insert_with(Rational::zero) += c;
        }
        Ok(LinTerm {
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (c, i)).collect(),
            constant: expr.constant,
        })
    }

    /// Adds `expr (relation) rhs`, tagged with a constraint family.
    pub fn add_constraint(
        &mut self,
        family: &str,
        expr: &LinExpr,
        relation: Relation,
        rhs: impl Into<Rational>,
    ) -> Result<(), ModelError> {
        let lhs = self.resolve(expr)?;
        let k = self.family_counts.entry(family.to_string()).or_insert(0);
        let name = format!("{family}_{k}");
        *k += 1;
        self.constraints.push(Constraint {
            name,
            family: family.to_string(),
            lhs,
            relation,
            rhs: rhs.into(),
        });
        Ok(())
    }

    pub fn set_objective(&mut self, expr: &LinExpr, sense: Sense) -> Result<(), ModelError> {
        self.objective = self.resolve(expr)?;
        self.sense = sense;
        Ok(())
    }

    pub fn set_feasibility(&mut self) {
        self.objective = LinTerm {
            terms: Vec::new(),
            constant: Rational::one(),
        };
        self.sense = Sense::Minimize;
    }

    pub fn is_feasibility(&self) -> bool {
        self.objective.terms.is_empty()
    }

    pub fn variables(&self) -> &[VarId] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &LinTerm {
        &self.objective
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Number of constraints emitted per family.
    pub fn family_counts(&self) -> &BTreeMap<String, usize> {
        &self.family_counts
    }

    pub fn family_count(&self, family: &str) -> usize {
        self.family_counts.get(family).copied().unwrap_or(0)
    }

    fn dense(&self, assignment: &Assignment) -> Vec<bool> {
        self.variables.iter().map(|v| assignment.get(v)).collect()
    }

    /// Exact objective value under `assignment`.
    pub fn objective_value(&self, assignment: &Assignment) -> Rational {
        self.objective.eval(&self.dense(assignment))
    }

    /// Value of an arbitrary expression over this model's variables.
    pub fn eval(&self, expr: &LinExpr, assignment: &Assignment) -> Result<Rational, ModelError> {
        Ok(self.resolve(expr)?.eval(&self.dense(assignment)))
    }

    /// Checks every constraint with exact arithmetic.
    pub fn check(&self, assignment: &Assignment) -> Result<(), Violation> {
        let values = self.dense(assignment);
        for c in &self.constraints {
            let lhs = c.lhs.eval(&values);
            if !c.relation.holds(lhs, c.rhs) {
                return Err(Violation {
                    name: c.name.clone(),
                    lhs,
                    relation: c.relation.symbol(),
                    rhs: c.rhs,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn rational_text() {
        use super::{parse_rational, Rational};
        assert_eq!(parse_rational("0.096"), Some(Rational::new(12, 125)));
        assert_eq!(parse_rational("3/2"), Some(Rational::new(3, 2)));
        assert_eq!(parse_rational("-.5"), Some(Rational::new(-1, 2)));
        assert_eq!(parse_rational("2"), Some(Rational::from_integer(2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("1e3"), None);
        assert_eq!(parse_rational("."), None);
    }

    use super::*;

    #[test]
    fn duplicate_and_undeclared() {
        let mut m = MilpModel::new();
        m.add_var(VarId::Final(0)).unwrap();
        assert_eq!(m.add_var(VarId::Final(0)), Err(ModelError::DuplicateName(VarId::Final(0))));
        let undeclared = VarId::Run { prefix: 3, state: 3 };
        let e = LinExpr::new().term(1, undeclared);
        assert_eq!(
            m.add_constraint("run", &e, Relation::Ge, 1),
            Err(ModelError::UndeclaredVariable(undeclared))
        );
        assert!(m.constraints().is_empty());
    }

    #[test]
    fn empty_feasibility_model() {
        let mut m = MilpModel::new();
        m.set_objective(&LinExpr::constant(1), Sense::Minimize).unwrap();
        assert!(m.is_feasibility());
        assert!(m.check(&Assignment::default()).is_ok());
        assert_eq!(m.objective_value(&Assignment::default()), Rational::one());
    }

    #[test]
    fn terms_aggregate() {
        let mut m = MilpModel::new();
        let x = VarId::Final(0);
        let y = VarId::Final(1);
        m.add_var(x).unwrap();
        m.add_var(y).unwrap();
        let e = LinExpr::new().term(2, x).term(3, x).term(1, y).term(-1, y);
        m.add_constraint("t", &e, Relation::Le, 5).unwrap();
        assert_eq!(m.constraints()[0].lhs.terms, vec![(Rational::from_integer(5), 0)]);
        assert_eq!(m.constraints()[0].name, "t_0");
        assert_eq!(m.family_count("t"), 1);
    }

    #[test]
    fn exact_check() {
        let mut m = MilpModel::new();
        let x = VarId::Final(0);
        m.add_var(x).unwrap();
        let mut e = LinExpr::new().term(Rational::new(1, 3), x);
        e.add_constant(Rational::new(2, 3));
        m.add_constraint("c", &e, Relation::Eq, 1).unwrap();
        let mut a = Assignment::default();
        assert!(m.check(&a).is_err());
        a.set(x, true);
        assert!(m.check(&a).is_ok());
    }

    #[test]
    fn var_names_are_bijective() {
        let ids = [
            VarId::Delta { from: 0, symbol: 12, to: 3 },
            VarId::Final(7),
            VarId::Run { prefix: 10, state: 0 },
            VarId::Accept { word: 4, state: 2 },
            VarId::Edge { from: 1, to: 1 },
        ];
        for id in ids {
            assert_eq!(VarId::parse(&id.name()), Some(id));
        }
        assert_eq!(VarId::parse("x_ab_3"), None);
        assert_eq!(VarId::parse("f_01"), None);
        assert_eq!(VarId::parse("f_1_2"), None);
        assert_eq!(VarId::parse("q_1"), None);
    }
}
