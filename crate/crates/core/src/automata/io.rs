//! Text format for samples and the JSON interchange format for DFAs.
//!
//! Sample files hold one word per line with symbols separated by single
//! spaces. Repeated lines accumulate multiplicity, an empty line is one
//! occurrence of ε and lines starting with `#` are comments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Alphabet, AutomataError, Dfa, Sample, State, Symbol, Word};

#[derive(Debug, Error)]
#[error("line {line}: {source}")]
pub struct SampleParseError {
    pub line: usize,
    #[source]
    pub source: AutomataError,
}

impl Sample {
    pub fn parse(text: &str) -> Result<Sample, SampleParseError> {
        let mut words = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.starts_with('#') {
                continue;
            }
            let w = Word::parse(line).map_err(|source| SampleParseError { line: i + 1, source })?;
            words.push(w);
        }
        Ok(Sample::from_words(words))
    }

    /// One line per occurrence, in canonical word order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (w, c) in self.iter() {
            let line = w.to_string();
            for _ in 0..c {
                out.push_str(&line);
                out.push('\n');
            }
        }
        out
    }
}

/// Serialized shape of a [`Dfa`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfaJson {
    pub n: usize,
    pub alphabet: Vec<String>,
    pub initial: State,
    pub transitions: Vec<(State, String, State)>,
    pub finals: Vec<State>,
}

impl From<&Dfa> for DfaJson {
    fn from(dfa: &Dfa) -> Self {
        let mut transitions = Vec::with_capacity(dfa.table().len());
        for q in 0..dfa.num_states() {
            for (a, sym) in dfa.alphabet().iter().enumerate() {
                transitions.push((q, sym.as_str().to_string(), dfa.successor(q, a)));
            }
        }
        DfaJson {
            n: dfa.num_states(),
            alphabet: dfa.alphabet().iter().map(|s| s.as_str().to_string()).collect(),
            initial: dfa.initial(),
            transitions,
            finals: dfa.finals().collect(),
        }
    }
}

impl TryFrom<DfaJson> for Dfa {
    type Error = AutomataError;

    fn try_from(json: DfaJson) -> Result<Self, Self::Error> {
        if json.initial != 0 {
            return Err(AutomataError::NonZeroInitial(json.initial));
        }
        let alphabet = Alphabet::new(json.alphabet.into_iter().map(Symbol::new).collect::<Result<Vec<_>, _>>()?);
        let mut map: BTreeMap<(State, usize), State> = BTreeMap::new();
        for (q, sym, t) in json.transitions {
            let sym = Symbol::new(sym)?;
            let a = alphabet.index_of(&sym).ok_or_else(|| AutomataError::UnknownSymbol(sym.clone()))?;
            if q >= json.n || t >= json.n {
                return Err(AutomataError::TargetOutOfRange {
                    state: q,
                    symbol: sym,
                    target: t.max(q),
                    n: json.n,
                });
            }
            if map.insert((q, a), t).is_some() {
                return Err(AutomataError::DuplicateTransition { state: q, symbol: sym });
            }
        }
        let mut table = Vec::with_capacity(json.n * alphabet.len());
        for q in 0..json.n {
            for a in 0..alphabet.len() {
                match map.get(&(q, a)) {
                    Some(&t) => table.push(t),
                    None => {
                        return Err(AutomataError::MissingTransition {
                            state: q,
                            symbol: alphabet.symbol(a).clone(),
                        })
                    }
                }
            }
        }
        Dfa::from_table(alphabet, json.n, table, json.finals)
    }
}

impl Dfa {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DfaJson::from(self)).expect("DFA JSON serialization")
    }

    pub fn from_json(text: &str) -> Result<Dfa, String> {
        let json: DfaJson = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Dfa::try_from(json).map_err(|e| e.to_string())
    }
}
