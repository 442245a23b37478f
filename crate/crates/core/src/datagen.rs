//! Synthetic datasets with a planted anomaly language.
//!
//! Words are random walks over a source DFA (accept-all by default) with a
//! truncated geometric length; walks the source rejects are discarded. The
//! planted DFA labels each word: accepted words are anomalies. Sampling
//! continues until both classes hold their target counts.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use crate::automata::{Alphabet, Dfa, Sample, Symbol, Word};
use crate::eval::{Label, LabeledSet};
use crate::milp::Rational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("planted DFA {0} within the length range")]
    Degenerate(&'static str),
    #[error("invalid generator settings: {0}")]
    InvalidSpec(String),
    #[error("source and planted DFA must share an alphabet")]
    AlphabetMismatch,
    #[error("gave up after {0} draws without filling both classes")]
    Exhausted(u64),
}

#[derive(Debug, Clone)]
pub struct GenSpec {
    /// Accepts exactly the anomalies.
    pub planted: Dfa,
    /// Shapes all words; `None` means every word over the planted alphabet.
    pub source: Option<Dfa>,
    pub n_total: usize,
    pub anomaly_ratio: Rational,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability of extending a word by one more symbol.
    pub continue_prob: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(planted: Dfa, n_total: usize, anomaly_ratio: Rational, seed: u64) -> Self {
        GenSpec {
            planted,
            source: None,
            n_total,
            anomaly_ratio,
            min_len: 1,
            max_len: 12,
            continue_prob: 0.8,
            seed,
        }
    }

    /// Target anomaly count, `round(ratio · n_total)` with halves rounded up.
    pub fn anomaly_target(&self) -> usize {
        let r = self.anomaly_ratio * Rational::from_integer(self.n_total as i64) + Rational::new(1, 2);
        r.floor().to_integer() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Unlabeled training multi-set.
    pub train: Sample,
    pub test: LabeledSet,
    pub train_anomalies: usize,
    pub train_normals: usize,
    pub seed: u64,
}

impl Dataset {
    /// Share of anomalies in the training data.
    pub fn train_ratio(&self) -> Rational {
        let total = self.train_anomalies + self.train_normals;
        if total == 0 {
            Rational::from_integer(0)
        } else {
            Rational::new(self.train_anomalies as i64, total as i64)
        }
    }

    pub fn meta_json(&self, spec: &GenSpec) -> String {
        let v = json!({
            "seed": self.seed,
            "n_total": spec.n_total,
            "anomaly_ratio": spec.anomaly_ratio.to_string(),
            "min_len": spec.min_len,
            "max_len": spec.max_len,
            "continue_prob": spec.continue_prob,
            "train_anomalies": self.train_anomalies,
            "train_normals": self.train_normals,
            "train_ratio": self.train_ratio().to_string(),
            "test_anomalies": self.test.count(Label::Anomaly),
            "test_normals": self.test.count(Label::Normal),
        });
        serde_json::to_string_pretty(&v).expect("meta serializes")
    }
}

/// Whether the words of length `min..=max` accepted by `source` include one
/// accepted and one rejected by `planted`, by breadth-first search over the
/// product automaton.
fn witnesses(source: &Dfa, planted: &Dfa, min: usize, max: usize) -> (bool, bool) {
    let s = planted.alphabet().len();
    let mut layer: BTreeSet<(usize, usize)> = [(source.initial(), planted.initial())].into();
    let (mut acc, mut rej) = (false, false);
    for len in 0..=max {
        if len >= min {
            for &(p, q) in &layer {
                if source.is_final(p) {
                    acc |= planted.is_final(q);
                    rej |= !planted.is_final(q);
                }
            }
        }
        if acc && rej {
            break;
        }
        layer = layer
            .iter()
            .flat_map(|&(p, q)| (0..s).map(move |a| (source.successor(p, a), planted.successor(q, a))))
            .collect();
    }
    (acc, rej)
}

fn draw_word(rng: &mut ChaCha8Rng, alphabet: &Alphabet, spec: &GenSpec) -> Word {
    let mut len = spec.min_len;
    while len < spec.max_len && rng.gen_bool(spec.continue_prob) {
        len += 1;
    }
    // every symbol is enabled in a total DFA, so a uniform walk picks symbols uniformly
    Word::new((0..len).map(|_| alphabet.symbol(rng.gen_range(0..alphabet.len())).clone()).collect())
}

pub fn generate(spec: &GenSpec) -> Result<Dataset, GenError> {
    let alphabet = spec.planted.alphabet().clone();
    let source = spec.source.clone().unwrap_or_else(|| Dfa::accept_all(alphabet.clone()));
    if source.alphabet() != &alphabet {
        return Err(GenError::AlphabetMismatch);
    }
    if alphabet.is_empty() {
        return Err(GenError::InvalidSpec("empty alphabet".into()));
    }
    if spec.min_len > spec.max_len {
        return Err(GenError::InvalidSpec(format!("min_len {} > max_len {}", spec.min_len, spec.max_len)));
    }
    if !(0.0..1.0).contains(&spec.continue_prob) || (spec.continue_prob == 0.0 && spec.min_len != spec.max_len) {
        return Err(GenError::InvalidSpec(format!("continue_prob must lie in (0, 1), got {}", spec.continue_prob)));
    }
    if spec.anomaly_ratio < Rational::from_integer(0) || spec.anomaly_ratio > Rational::from_integer(1) {
        return Err(GenError::InvalidSpec(format!("anomaly ratio {} outside [0, 1]", spec.anomaly_ratio)));
    }
    let anomalies = spec.anomaly_target();
    let normals = spec.n_total - anomalies;
    let (acc, rej) = witnesses(&source, &spec.planted, spec.min_len, spec.max_len);
    if anomalies > 0 && !acc {
        return Err(GenError::Degenerate("accepts no word"));
    }
    if normals > 0 && !rej {
        return Err(GenError::Degenerate("rejects no word"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut drawn: Vec<(Word, Label)> = Vec::with_capacity(spec.n_total);
    let (mut have_a, mut have_n) = (0, 0);
    let max_draws = 10_000 * (spec.n_total as u64 + 1);
    let mut draws = 0u64;
    while have_a < anomalies || have_n < normals {
        draws += 1;
        if draws > max_draws {
            return Err(GenError::Exhausted(max_draws));
        }
        let w = draw_word(&mut rng, &alphabet, spec);
        if !source.accepts(&w).expect("word over the shared alphabet") {
            continue;
        }
        if spec.planted.accepts(&w).expect("word over the shared alphabet") {
            if have_a < anomalies {
                have_a += 1;
                drawn.push((w, Label::Anomaly));
            }
        } else if have_n < normals {
            have_n += 1;
            drawn.push((w, Label::Normal));
        }
    }

    // stratified 80/20 split, test items taken first in draw order
    let fifth = |k: usize| (2 * k + 5) / 10;
    let test_a = fifth(anomalies);
    let test_n = fifth(normals);
    let (mut ta, mut tn) = (0, 0);
    let mut test = LabeledSet::new();
    let mut train = Vec::new();
    for (w, l) in drawn {
        let into_test = match l {
            Label::Anomaly => {
                ta += 1;
                ta <= test_a
            }
            Label::Normal => {
                tn += 1;
                tn <= test_n
            }
        };
        if into_test {
            test.push(w, l);
        } else {
            train.push(w);
        }
    }
    Ok(Dataset {
        train: Sample::from_words(train),
        test,
        train_anomalies: anomalies - test_a,
        train_normals: normals - test_n,
        seed: spec.seed,
    })
}

/// Two states: accepts the words containing `marker`.
pub fn contains_symbol_dfa(alphabet: Alphabet, marker: &Symbol) -> Option<Dfa> {
    let m = alphabet.index_of(marker)?;
    Some(Dfa::from_fn(alphabet, 2, |q, a| if q == 1 || a == m { 1 } else { 0 }, [1]).ok()?)
}

/// Two states: accepts the words with an odd number of `symbol`.
pub fn parity_dfa(alphabet: Alphabet, symbol: &Symbol) -> Option<Dfa> {
    let m = alphabet.index_of(symbol)?;
    Some(Dfa::from_fn(alphabet, 2, |q, a| if a == m { 1 - q } else { q }, [1]).ok()?)
}
