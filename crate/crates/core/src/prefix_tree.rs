//! Prefix tree of a sample: one node per distinct prefix, indexed canonically
//! (by prefix length, then token order). Node `0` is ε.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::automata::{Alphabet, Sample, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrefixTreeError {
    #[error("cannot build a prefix tree from an empty sample")]
    EmptySample,
}

/// Node index into a [`PrefixTree`].
pub type Node = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixTree {
    alphabet: Alphabet,
    prefixes: Vec<Word>,
    index: HashMap<Word, Node>,
    // (parent, symbol index) for every node except the root
    parent: Vec<Option<(Node, usize)>>,
    children: HashMap<(Node, usize), Node>,
}

impl PrefixTree {
    pub fn build(sample: &Sample) -> Result<Self, PrefixTreeError> {
        if sample.is_empty() {
            return Err(PrefixTreeError::EmptySample);
        }
        let mut all = BTreeSet::new();
        for (w, _) in sample.iter() {
            for len in 0..=w.len() {
                all.insert(w.prefix(len));
            }
        }
        let alphabet = sample.alphabet().clone();
        let prefixes: Vec<Word> = all.into_iter().collect();
        let index: HashMap<Word, Node> = prefixes.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let mut parent = Vec::with_capacity(prefixes.len());
        let mut children = HashMap::new();
        for (i, w) in prefixes.iter().enumerate() {
            if w.is_empty() {
                parent.push(None);
                continue;
            }
            let p = index[&w.prefix(w.len() - 1)];
            let a = alphabet
                .index_of(w.symbols().last().expect("non-empty prefix"))
                .expect("sample alphabet covers its prefixes");
            parent.push(Some((p, a)));
            children.insert((p, a), i);
        }
        Ok(PrefixTree {
            alphabet,
            prefixes,
            index,
            parent,
            children,
        })
    }

    /// `p = |Pref(S)|`.
    pub fn len(&self) -> usize {
        self.prefixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefixes.is_empty()
    }

    pub fn root(&self) -> Node {
        0
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn prefix(&self, node: Node) -> &Word {
        &self.prefixes[node]
    }

    /// Node reached by `word`, if it is a prefix of the sample.
    pub fn node(&self, word: &Word) -> Option<Node> {
        self.index.get(word).copied()
    }

    /// Parent node and the index of the symbol on the edge into `node`.
    pub fn parent(&self, node: Node) -> Option<(Node, usize)> {
        self.parent[node]
    }

    pub fn child(&self, node: Node, symbol_index: usize) -> Option<Node> {
        self.children.get(&(node, symbol_index)).copied()
    }

    /// Number of tree edges, `p - 1`.
    pub fn num_edges(&self) -> usize {
        self.children.len()
    }

    /// Nodes in canonical order; parents always precede their children.
    pub fn nodes(&self) -> impl Iterator<Item = (Node, &Word)> {
        self.prefixes.iter().enumerate()
    }

    /// Largest DFA size a two-bound search has to try: `|Pref(S)| + 1`.
    ///
    /// Completing the tree with one extra state for every unspecified
    /// transition yields a DFA in which each sample word ends in its own
    /// state, so any achievable acceptance count is reachable at this size.
    pub fn size_upper_bound(&self) -> usize {
        self.len() + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::Word;

    fn fig1() -> Sample {
        Sample::from_words(["aa", "ab", "ba", "aaa"].map(Word::from_chars))
    }

    fn shown(t: &PrefixTree) -> Vec<String> {
        t.nodes().map(|(_, w)| w.symbols().iter().map(|s| s.as_str()).collect()).collect()
    }

    #[test]
    fn figure_one_tree() {
        let t = PrefixTree::build(&fig1()).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(shown(&t), ["", "a", "b", "aa", "ab", "ba", "aaa"]);
        assert_eq!(t.num_edges(), 6);
        assert_eq!(t.size_upper_bound(), 8);
        let a = t.alphabet().index_of(&crate::automata::Symbol::new("a").unwrap()).unwrap();
        let b = 1 - a;
        assert_eq!(t.child(0, a), Some(1));
        assert_eq!(t.child(0, b), Some(2));
        assert_eq!(t.child(1, a), Some(3));
        assert_eq!(t.child(1, b), Some(4));
        assert_eq!(t.child(2, a), Some(5));
        assert_eq!(t.child(3, a), Some(6));
        assert_eq!(t.child(2, b), None);
        assert_eq!(t.parent(6), Some((3, a)));
    }

    #[test]
    fn epsilon_only() {
        let t = PrefixTree::build(&Sample::from_words([Word::empty()])).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.size_upper_bound(), 2);
        assert!(t.alphabet().is_empty());
    }

    #[test]
    fn multiplicity_adds_no_nodes() {
        let s = Sample::from_counts([(Word::from_chars("a"), 2), (Word::from_chars("b"), 1)]).unwrap();
        let t = PrefixTree::build(&s).unwrap();
        assert_eq!(shown(&t), ["", "a", "b"]);
        assert_eq!(t.size_upper_bound(), 4);
    }

    #[test]
    fn empty_sample_rejected() {
        assert_eq!(PrefixTree::build(&Sample::new()), Err(PrefixTreeError::EmptySample));
    }

    #[test]
    fn every_word_has_its_node() {
        let s = fig1();
        let t = PrefixTree::build(&s).unwrap();
        for (w, _) in s.iter() {
            let node = t.node(w).unwrap();
            // walk the tree edges by the word's own symbols
            let mut cur = t.root();
            for sym in w.symbols() {
                cur = t.child(cur, t.alphabet().index_of(sym).unwrap()).unwrap();
            }
            assert_eq!(cur, node);
        }
    }
}
