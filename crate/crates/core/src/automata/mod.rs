//! Words, multi-set samples and deterministic finite automata.
//!
//! States are dense indices `0..n` and state `0` is always initial. Symbols
//! are opaque text tokens, so an alphabet can hold single characters as well
//! as encoded actions such as `0110`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

mod dot;
mod io;

pub use dot::DotOptions;
pub use io::{DfaJson, SampleParseError};

/// State index. `0` is the initial state of every [`Dfa`].
pub type State = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomataError {
    #[error("symbol {0:?} is not part of the alphabet")]
    UnknownSymbol(Symbol),
    #[error("invalid symbol token {0:?}: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),
    #[error("multiplicity of word \"{0}\" must be at least 1")]
    ZeroMultiplicity(Word),
    #[error("transition table has {got} entries, expected {expected} (states x symbols)")]
    TableSize { expected: usize, got: usize },
    #[error("transition ({state}, {symbol}) targets state {target} outside 0..{n}")]
    TargetOutOfRange {
        state: State,
        symbol: Symbol,
        target: State,
        n: usize,
    },
    #[error("transition ({state}, {symbol}) is defined more than once")]
    DuplicateTransition { state: State, symbol: Symbol },
    #[error("transition ({state}, {symbol}) is missing")]
    MissingTransition { state: State, symbol: Symbol },
    #[error("final state {0} is outside the state range")]
    FinalOutOfRange(State),
    #[error("a DFA needs at least one state")]
    NoStates,
    #[error("initial state must be 0, got {0}")]
    NonZeroInitial(State),
}

/// A single input token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(String);

impl Symbol {
    pub fn new(token: impl Into<String>) -> Result<Self, AutomataError> {
        let token = token.into();
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(AutomataError::InvalidToken(token));
        }
        Ok(Symbol(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A finite word. The empty word is ε.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    /// Parses space separated tokens. An empty string yields ε.
    pub fn parse(text: &str) -> Result<Self, AutomataError> {
        if text.is_empty() {
            return Ok(Word::empty());
        }
        text.split(' ').map(Symbol::new).collect::<Result<_, _>>().map(Word)
    }

    /// One symbol per character, handy for small alphabets such as `{a, b}`.
    pub fn from_chars(text: &str) -> Self {
        Word(text.chars().map(|c| Symbol(c.to_string())).collect())
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word(self.0[..len].to_vec())
    }

    pub fn push(&mut self, symbol: Symbol) {
        self.0.push(symbol);
    }
}

// Shorter words first, then token-wise lexicographic order.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(s.as_str())?;
        }
        Ok(())
    }
}

impl FromIterator<Symbol> for Word {
    fn from_iter<T: IntoIterator<Item = Symbol>>(iter: T) -> Self {
        Word(iter.into_iter().collect())
    }
}

/// Sorted, duplicate-free set of symbols. Symbol indices refer to positions
/// in this order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Alphabet(Vec<Symbol>);

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = Symbol>) -> Self {
        let mut v: Vec<Symbol> = symbols.into_iter().collect();
        v.sort();
        v.dedup();
        Alphabet(v)
    }

    /// Single-character symbols, e.g. `Alphabet::from_chars("ab")`.
    pub fn from_chars(chars: &str) -> Self {
        Alphabet::new(chars.chars().map(|c| Symbol(c.to_string())))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, symbol: &Symbol) -> Option<usize> {
        self.0.binary_search(symbol).ok()
    }

    pub fn symbol(&self, index: usize) -> &Symbol {
        &self.0[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Symbol> {
        self.0.iter()
    }

    pub fn contains_all(&self, other: &Alphabet) -> bool {
        other.iter().all(|s| self.index_of(s).is_some())
    }
}

/// A multi-set of words with positive multiplicities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sample {
    entries: BTreeMap<Word, u64>,
    alphabet: Alphabet,
}

impl Sample {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a sample from `(word, multiplicity)` pairs; repeated words accumulate.
    pub fn from_counts(counts: impl IntoIterator<Item = (Word, u64)>) -> Result<Self, AutomataError> {
        let mut entries = BTreeMap::new();
        for (w, c) in counts {
            if c == 0 {
                return Err(AutomataError::ZeroMultiplicity(w));
            }
            *entries.entry(w).or_insert(0) += c;
        }
        Ok(Self::from_entries(entries))
    }

    pub fn from_words(words: impl IntoIterator<Item = Word>) -> Self {
        let mut entries = BTreeMap::new();
        for w in words {
            *entries.entry(w).or_insert(0) += 1;
        }
        Self::from_entries(entries)
    }

    fn from_entries(entries: BTreeMap<Word, u64>) -> Self {
        let alphabet = Alphabet::new(entries.keys().flat_map(|w| w.symbols().iter().cloned()));
        Sample { entries, alphabet }
    }

    /// Multiplicity `S(w)`; zero for words not in the sample.
    pub fn count(&self, word: &Word) -> u64 {
        self.entries.get(word).copied().unwrap_or(0)
    }

    /// Total size `|S|`, counting duplicates.
    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn unique_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Unique words with their multiplicities, in canonical word order.
    pub fn iter(&self) -> impl Iterator<Item = (&Word, u64)> {
        self.entries.iter().map(|(w, &c)| (w, c))
    }
}

/// A complete deterministic finite automaton with initial state `0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dfa {
    alphabet: Alphabet,
    n: usize,
    // row-major: transitions[q * |Σ| + a]
    transitions: Vec<State>,
    finals: Vec<bool>,
}

impl Dfa {
    /// `table[q * alphabet.len() + a]` is the successor of state `q` on the
    /// `a`-th symbol of `alphabet`.
    pub fn from_table(
        alphabet: Alphabet,
        n: usize,
        table: Vec<State>,
        finals: impl IntoIterator<Item = State>,
    ) -> Result<Self, AutomataError> {
        if n == 0 {
            return Err(AutomataError::NoStates);
        }
        let s = alphabet.len();
        if table.len() != n * s {
            return Err(AutomataError::TableSize {
                expected: n * s,
                got: table.len(),
            });
        }
        for (i, &t) in table.iter().enumerate() {
            if t >= n {
                return Err(AutomataError::TargetOutOfRange {
                    state: i / s,
                    symbol: alphabet.symbol(i % s).clone(),
                    target: t,
                    n,
                });
            }
        }
        let mut fin = vec![false; n];
        for q in finals {
            if q >= n {
                return Err(AutomataError::FinalOutOfRange(q));
            }
            fin[q] = true;
        }
        Ok(Dfa {
            alphabet,
            n,
            transitions: table,
            finals: fin,
        })
    }

    pub fn from_fn(
        alphabet: Alphabet,
        n: usize,
        delta: impl Fn(State, usize) -> State,
        finals: impl IntoIterator<Item = State>,
    ) -> Result<Self, AutomataError> {
        let s = alphabet.len();
        let table = (0..n * s).map(|i| delta(i / s, i % s)).collect();
        Self::from_table(alphabet, n, table, finals)
    }

    /// One state with self-loops, final.
    pub fn accept_all(alphabet: Alphabet) -> Self {
        Self::from_fn(alphabet, 1, |_, _| 0, [0]).expect("valid one-state DFA")
    }

    /// One state with self-loops, not final.
    pub fn reject_all(alphabet: Alphabet) -> Self {
        Self::from_fn(alphabet, 1, |_, _| 0, []).expect("valid one-state DFA")
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn initial(&self) -> State {
        0
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn successor(&self, state: State, symbol_index: usize) -> State {
        self.transitions[state * self.alphabet.len() + symbol_index]
    }

    pub fn is_final(&self, state: State) -> bool {
        self.finals[state]
    }

    pub fn finals(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.n).filter(|&q| self.finals[q])
    }

    /// Row-major transition table.
    pub fn table(&self) -> &[State] {
        &self.transitions
    }

    fn symbol_index(&self, symbol: &Symbol) -> Result<usize, AutomataError> {
        self.alphabet
            .index_of(symbol)
            .ok_or_else(|| AutomataError::UnknownSymbol(symbol.clone()))
    }

    /// The run `q_0 … q_n` on `word`; it has `|word| + 1` states.
    pub fn run(&self, word: &Word) -> Result<Vec<State>, AutomataError> {
        let mut states = Vec::with_capacity(word.len() + 1);
        let mut q = self.initial();
        states.push(q);
        for sym in word.symbols() {
            q = self.successor(q, self.symbol_index(sym)?);
            states.push(q);
        }
        Ok(states)
    }

    /// State reached after reading `word`.
    pub fn target(&self, word: &Word) -> Result<State, AutomataError> {
        word.symbols()
            .iter()
            .try_fold(self.initial(), |q, sym| Ok(self.successor(q, self.symbol_index(sym)?)))
    }

    pub fn accepts(&self, word: &Word) -> Result<bool, AutomataError> {
        Ok(self.finals[self.target(word)?])
    }

    /// Multiplicity-weighted number of accepted words, `Σ_w S(w)·A(w)`.
    pub fn count_accepted(&self, sample: &Sample) -> Result<u64, AutomataError> {
        let mut total = 0;
        for (w, c) in sample.iter() {
            if self.accepts(w)? {
                total += c;
            }
        }
        Ok(total)
    }

    pub fn to_dot(&self, options: &DotOptions) -> String {
        dot::render(self, options)
    }
}
