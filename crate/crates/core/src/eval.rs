//! Detection metrics, bound estimation and the experiment sweep.
//!
//! Anomalies are the positive class: a word is flagged iff the DFA accepts it.

use std::fmt;
use std::time::Duration;

use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::automata::{AutomataError, Dfa, Sample, Word};
use crate::encoder::{Mode, RegularizerSpec};
use crate::learner::{learn_single_bound, learn_two_bound, Bound, SizeRange};
use crate::milp::Rational;
use crate::solver::Backend;

pub const SWEEP_HEADER: [&str; 8] = [
    "goal",
    "mode",
    "states",
    "bound_relax",
    "time_s",
    "f1",
    "accepted_count",
    "status",
];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {msg}")]
    Labels { line: usize, msg: String },
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error("ratio must lie in [0, 1], got {0}")]
    RatioOutOfRange(Rational),
    #[error("delta must lie in [0, 1], got {0}")]
    DeltaOutOfRange(Rational),
    #[error("sweep needs at least one {0}")]
    EmptySweep(&'static str),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Anomaly,
    Normal,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Anomaly => "anomaly",
            Label::Normal => "normal",
        }
    }

    pub fn parse(text: &str) -> Option<Label> {
        match text {
            "anomaly" => Some(Label::Anomaly),
            "normal" => Some(Label::Normal),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Labeled words for evaluation only; one item per occurrence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledSet {
    pub items: Vec<(Word, Label)>,
}

impl LabeledSet {
    pub fn new() -> Self {
        LabeledSet::default()
    }

    pub fn push(&mut self, word: Word, label: Label) {
        self.items.push((word, label));
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.items.iter().filter(|(_, l)| *l == label).count()
    }

    /// Parses `<label>\t<word>` lines; `#` lines are comments.
    pub fn parse(text: &str) -> Result<LabeledSet, EvalError> {
        let mut set = LabeledSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.starts_with('#') || line.is_empty() {
                continue;
            }
            let err = |msg: String| EvalError::Labels { line: i + 1, msg };
            let (label, word) = line.split_once('\t').ok_or_else(|| err("expected <label>\\t<word>".into()))?;
            let label = Label::parse(label).ok_or_else(|| err(format!("unknown label {label:?}")))?;
            let word = Word::parse(word).map_err(|e| err(e.to_string()))?;
            set.push(word, label);
        }
        Ok(set)
    }

    pub fn to_text(&self) -> String {
        self.items.iter().map(|(w, l)| format!("{l}\t{w}\n")).collect()
    }
}

/// How to treat test words containing symbols the DFA does not know.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum UnknownSymbolPolicy {
    #[default]
    Error,
    /// Classify the word as normal.
    RejectWord,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> Rational {
    if den == 0 {
        Rational::zero()
    } else {
        Rational::new(num as i64, den as i64)
    }
}

impl Metrics {
    pub fn precision(&self) -> Rational {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Rational {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> Rational {
        let (p, r) = (self.precision(), self.recall());
        if (p + r).is_zero() {
            Rational::zero()
        } else {
            Rational::from_integer(2) * p * r / (p + r)
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let dec = |r: Rational| r.to_f64().unwrap_or(f64::NAN);
        serde_json::json!({
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn_,
            "precision": dec(self.precision()),
            "recall": dec(self.recall()),
            "f1": dec(self.f1()),
            "f1_exact": self.f1().to_string(),
        })
    }
}

pub fn evaluate(dfa: &Dfa, test: &LabeledSet, policy: UnknownSymbolPolicy) -> Result<Metrics, EvalError> {
    let mut m = Metrics::default();
    for (word, label) in &test.items {
        let flagged = match dfa.accepts(word) {
            Ok(b) => b,
            Err(AutomataError::UnknownSymbol(_)) if policy == UnknownSymbolPolicy::RejectWord => false,
            Err(e) => return Err(e.into()),
        };
        match (flagged, label) {
            (true, Label::Anomaly) => m.tp += 1,
            (true, Label::Normal) => m.fp += 1,
            (false, Label::Normal) => m.tn += 1,
            (false, Label::Anomaly) => m.fn_ += 1,
        }
    }
    Ok(m)
}

/// Acceptance bounds from an anomaly-ratio estimate: the ratio is widened
/// to whole percent points, then `ℓ = ⌊r↓·|S|⌋` and `u = ⌈r↑·|S|⌉`.
pub fn bounds_from_ratio(total: u64, ratio: Rational) -> Result<(u64, u64), EvalError> {
    if ratio < Rational::zero() || ratio > Rational::from_integer(1) {
        return Err(EvalError::RatioOutOfRange(ratio));
    }
    let hundred = Rational::from_integer(100);
    let down = (ratio * hundred).floor() / hundred;
    let up = (ratio * hundred).ceil() / hundred;
    let t = Rational::from_integer(total as i64);
    let lower = (down * t).floor().to_integer() as u64;
    let upper = ((up * t).ceil().to_integer() as u64).min(total);
    Ok((lower, upper))
}

/// Widens bounds by `round(delta·|S|)` (half up): the lower bound goes down,
/// the upper bound goes up, both clamped to `[0, |S|]`. Absent bounds stay
/// absent, so a single bound moves in its loosening direction.
pub fn loosen_bounds(
    lower: Option<u64>,
    upper: Option<u64>,
    delta: Rational,
    total: u64,
) -> Result<(Option<u64>, Option<u64>), EvalError> {
    if delta < Rational::zero() || delta > Rational::from_integer(1) {
        return Err(EvalError::DeltaOutOfRange(delta));
    }
    let step = (delta * Rational::from_integer(total as i64) + Rational::new(1, 2)).floor().to_integer() as u64;
    Ok((lower.map(|l| l.saturating_sub(step)), upper.map(|u| (u + step).min(total))))
}

/// One dataset of a sweep. `ratio` is the anomaly-ratio estimate handed to
/// [`bounds_from_ratio`]; the test labels are used for scoring only.
#[derive(Debug, Clone)]
pub struct SweepDataset {
    pub goal: String,
    pub train: Sample,
    pub test: LabeledSet,
    pub ratio: Rational,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub datasets: Vec<SweepDataset>,
    pub modes: Vec<Mode>,
    /// Fixed size for single-bound rows, start size for two-bound rows.
    pub sizes: Vec<usize>,
    pub deltas: Vec<Rational>,
    pub regularizers: RegularizerSpec,
    pub policy: UnknownSymbolPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub goal: String,
    pub mode: Mode,
    pub states: usize,
    pub bound_relax: Rational,
    pub time: Duration,
    pub f1: Option<Rational>,
    pub accepted_count: Option<u64>,
    pub status: String,
}

fn decimal(r: Rational) -> String {
    let s = format!("{:.6}", r.to_f64().unwrap_or(f64::NAN));
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

impl SweepRow {
    fn record(&self) -> [String; 8] {
        [
            self.goal.clone(),
            self.mode.as_str().to_string(),
            self.states.to_string(),
            decimal(self.bound_relax),
            format!("{:.3}", self.time.as_secs_f64()),
            self.f1.map(decimal).unwrap_or_default(),
            self.accepted_count.map(|k| k.to_string()).unwrap_or_default(),
            self.status.clone(),
        ]
    }
}

fn sweep_row<B: Backend + ?Sized>(
    data: &SweepDataset,
    mode: Mode,
    n: usize,
    delta: Rational,
    config: &SweepConfig,
    backend: &B,
) -> SweepRow {
    let mut row = SweepRow {
        goal: data.goal.clone(),
        mode,
        states: n,
        bound_relax: delta,
        time: Duration::ZERO,
        f1: None,
        accepted_count: None,
        status: String::new(),
    };
    let total = data.train.total();
    let bounds = bounds_from_ratio(total, data.ratio).and_then(|(l, u)| loosen_bounds(Some(l), Some(u), delta, total));
    let (lower, upper) = match bounds {
        Ok((Some(l), Some(u))) => (l, u),
        _ => {
            row.status = "invalid-bounds".to_string();
            return row;
        }
    };
    let reg = config.regularizers;
    let result = match mode {
        Mode::TwoBound => learn_two_bound(&data.train, lower, upper, reg, SizeRange { start: n, cap: None }, backend),
        Mode::SingleBoundLower => learn_single_bound(&data.train, Bound::Lower(lower), n, reg, backend),
        Mode::SingleBoundUpper => learn_single_bound(&data.train, Bound::Upper(upper), n, reg, backend),
    };
    match result {
        Err(_) => row.status = "backend-error".to_string(),
        Ok(report) => {
            row.time = report.wall();
            row.status = report.outcome.as_str().to_string();
            row.accepted_count = report.accepted_count;
            if let Some(dfa) = &report.dfa {
                row.states = dfa.num_states();
                match evaluate(dfa, &data.test, config.policy) {
                    Ok(m) => row.f1 = Some(m.f1()),
                    Err(_) => row.status = "eval-error".to_string(),
                }
            }
        }
    }
    row
}

/// Runs every (dataset, mode, size, delta) combination in that order.
/// Failures are recorded in the row's status and do not stop the sweep.
pub fn run_sweep<B: Backend + ?Sized>(config: &SweepConfig, backend: &B) -> Result<Vec<SweepRow>, EvalError> {
    for (what, empty) in [
        ("dataset", config.datasets.is_empty()),
        ("mode", config.modes.is_empty()),
        ("size", config.sizes.is_empty()),
        ("delta", config.deltas.is_empty()),
    ] {
        if empty {
            return Err(EvalError::EmptySweep(what));
        }
    }
    if let Some(d) = config.deltas.iter().find(|d| **d < Rational::zero() || **d > Rational::from_integer(1)) {
        return Err(EvalError::DeltaOutOfRange(*d));
    }
    let mut rows = Vec::new();
    for data in &config.datasets {
        for &mode in &config.modes {
            for &n in &config.sizes {
                for &delta in &config.deltas {
                    rows.push(sweep_row(data, mode, n, delta, config, backend));
                }
            }
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::Alphabet;

    fn w(s: &str) -> Word {
        Word::from_chars(s)
    }

    #[test]
    fn accept_all_metrics() {
        let mut t = LabeledSet::new();
        for i in 0..100 {
            t.push(w("a"), if i < 10 { Label::Anomaly } else { Label::Normal });
        }
        let m = evaluate(&Dfa::accept_all(Alphabet::from_chars("a")), &t, UnknownSymbolPolicy::Error).unwrap();
        assert_eq!(m.precision(), Rational::new(1, 10));
        assert_eq!(m.recall(), Rational::from_integer(1));
        assert_eq!(m.f1(), Rational::new(2, 11));
        let m = evaluate(&Dfa::reject_all(Alphabet::from_chars("a")), &t, UnknownSymbolPolicy::Error).unwrap();
        assert_eq!(m.f1(), Rational::zero());
    }

    #[test]
    fn unknown_symbol_policy() {
        let mut t = LabeledSet::new();
        t.push(w("ab"), Label::Anomaly);
        let dfa = Dfa::accept_all(Alphabet::from_chars("a"));
        assert!(evaluate(&dfa, &t, UnknownSymbolPolicy::Error).is_err());
        let m = evaluate(&dfa, &t, UnknownSymbolPolicy::RejectWord).unwrap();
        assert_eq!(m.fn_, 1);
    }

    #[test]
    fn ratio_bounds() {
        assert_eq!(bounds_from_ratio(250, Rational::new(96, 1000)).unwrap(), (22, 25));
        assert_eq!(bounds_from_ratio(250, Rational::zero()).unwrap(), (0, 0));
        assert_eq!(bounds_from_ratio(250, Rational::from_integer(1)).unwrap(), (250, 250));
        assert_eq!(bounds_from_ratio(200, Rational::new(1, 10)).unwrap(), (20, 20));
        assert!(bounds_from_ratio(10, Rational::new(11, 10)).is_err());
    }

    #[test]
    fn loosening() {
        let d = Rational::new(2, 100);
        assert_eq!(loosen_bounds(Some(22), Some(25), d, 250).unwrap(), (Some(17), Some(30)));
        assert_eq!(loosen_bounds(Some(22), Some(25), Rational::zero(), 250).unwrap(), (Some(22), Some(25)));
        assert_eq!(loosen_bounds(Some(3), Some(248), Rational::new(1, 2), 250).unwrap(), (Some(0), Some(250)));
        assert_eq!(loosen_bounds(Some(22), None, d, 250).unwrap(), (Some(17), None));
        // 0.01 * 250 = 2.5 rounds up
        assert_eq!(loosen_bounds(Some(22), None, Rational::new(1, 100), 250).unwrap(), (Some(19), None));
    }

    #[test]
    fn labels_round_trip() {
        let text = "anomaly\ta x\nnormal\t\nnormal\tb\n";
        let set = LabeledSet::parse(text).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.items[1].0, Word::empty());
        assert_eq!(set.to_text(), text);
        assert!(LabeledSet::parse("weird\ta\n").is_err());
        assert!(LabeledSet::parse("anomaly a\n").is_err());
    }

    #[test]
    fn csv_header_and_decimals() {
        let csv = sweep_csv(&[]).unwrap();
        assert_eq!(csv, "goal,mode,states,bound_relax,time_s,f1,accepted_count,status\n");
        assert_eq!(decimal(Rational::new(2, 11)), "0.181818");
        assert_eq!(decimal(Rational::from_integer(1)), "1");
        assert_eq!(decimal(Rational::zero()), "0");
        assert_eq!(decimal(Rational::new(1, 100)), "0.01");
    }
}
