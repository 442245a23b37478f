//! Instance generators and reference checks shared by the integration tests.
//! Nothing here goes through the MILP encoding.
#![allow(dead_code)]

use std::collections::BTreeSet;

use boundfa::automata::{Alphabet, Dfa, Sample, Word};
use boundfa::encoder::{EncodingSpec, RegularizerSpec, Task};
use boundfa::milp::Rational;
use boundfa::prefix_tree::PrefixTree;
use boundfa::solver::{candidate_count, enumerate_optimum, DEFAULT_ENUMERATION_BUDGET};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn word(s: &str) -> Word {
    Word::from_chars(s)
}

pub fn sample(words: &[(&str, u64)]) -> Sample {
    Sample::from_counts(words.iter().map(|(w, c)| (word(w), *c))).unwrap()
}

fn random_word(rng: &mut ChaCha8Rng, letters: &[char], max_len: usize) -> String {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| *letters.choose(rng).unwrap()).collect()
}

/// Up to `max_words` distinct words over `letters` of length at most
/// `max_len`, each with multiplicity in `1..=max_mult`.
pub fn random_sample(rng: &mut ChaCha8Rng, letters: &[char], max_words: usize, max_len: usize, max_mult: u64) -> Sample {
    let target = rng.gen_range(1..=max_words);
    let mut words = BTreeSet::new();
    for _ in 0..50 {
        if words.len() == target {
            break;
        }
        words.insert(random_word(rng, letters, max_len));
    }
    Sample::from_counts(words.into_iter().map(|w| (word(&w), rng.gen_range(1..=max_mult)))).unwrap()
}

pub fn random_word_set(rng: &mut ChaCha8Rng, letters: &[char], max_words: usize, max_len: usize) -> BTreeSet<String> {
    let target = rng.gen_range(0..=max_words);
    (0..target).map(|_| random_word(rng, letters, max_len)).collect()
}

/// Every weighted acceptance count reachable by choosing final states,
/// given the per-state weights.
fn subset_sums(weights: &[u64]) -> BTreeSet<u64> {
    let mut sums = BTreeSet::from([0u64]);
    for &w in weights {
        let shifted: Vec<u64> = sums.iter().map(|s| s + w).collect();
        sums.extend(shifted);
    }
    sums
}

/// Whether some subset of the unique words has weight in `[lo, hi]`. If not,
/// no DFA of any size meets the bounds.
pub fn any_subset_in(sample: &Sample, lo: u64, hi: u64) -> bool {
    let counts: Vec<u64> = sample.iter().map(|(_, c)| c).collect();
    subset_sums(&counts).range(lo..=hi).next().is_some()
}

/// Depth-first search over the transitions the prefix tree actually uses.
/// Fresh states are introduced in order, so renamings are skipped. `visit`
/// receives the weight reaching each state and returns `true` to stop.
pub fn tree_search(sample: &Sample, n: usize, visit: &mut dyn FnMut(&[u64]) -> bool) {
    let tree = PrefixTree::build(sample).unwrap();
    let s = sample.alphabet().len();
    let order: Vec<usize> = tree.nodes().map(|(v, _)| v).collect();
    let node_weight: Vec<u64> = {
        let mut w = vec![0; tree.len()];
        for (wd, c) in sample.iter() {
            w[tree.node(wd).unwrap()] += c;
        }
        w
    };
    let parents: Vec<Option<(usize, usize)>> = (0..tree.len()).map(|v| tree.parent(v)).collect();

    struct St<'a> {
        n: usize,
        s: usize,
        order: &'a [usize],
        parents: &'a [Option<(usize, usize)>],
        node_weight: &'a [u64],
        table: Vec<Option<usize>>,
        state_of: Vec<usize>,
        used: usize,
    }

    fn go(st: &mut St<'_>, k: usize, visit: &mut dyn FnMut(&[u64]) -> bool) -> bool {
        if k == st.order.len() {
            let mut w = vec![0u64; st.n];
            for (v, &q) in st.state_of.iter().enumerate() {
                w[q] += st.node_weight[v];
            }
            return visit(&w);
        }
        let v = st.order[k];
        let Some((u, a)) = st.parents[v] else {
            st.state_of[v] = 0;
            return go(st, k + 1, visit);
        };
        let slot = st.state_of[u] * st.s + a;
        if let Some(t) = st.table[slot] {
            st.state_of[v] = t;
            return go(st, k + 1, visit);
        }
        let fresh = st.used < st.n;
        let mut choices: Vec<usize> = (0..st.used).collect();
        if fresh {
            choices.insert(0, st.used);
        }
        for t in choices {
            let grew = t == st.used;
            if grew {
                st.used += 1;
            }
            st.table[slot] = Some(t);
            st.state_of[v] = t;
            let stop = go(st, k + 1, visit);
            st.table[slot] = None;
            if grew {
                st.used -= 1;
            }
            if stop {
                return true;
            }
        }
        false
    }

    let mut st = St {
        n,
        s,
        order: &order,
        parents: &parents,
        node_weight: &node_weight,
        table: vec![None; n * s],
        state_of: vec![0; tree.len()],
        used: 1,
    };
    go(&mut st, 0, visit);
}

/// Weighted acceptance counts reachable by some `n`-state DFA.
pub fn reachable_counts(sample: &Sample, n: usize) -> BTreeSet<u64> {
    let mut all = BTreeSet::new();
    let full = subset_sums(&sample.iter().map(|(_, c)| c).collect::<Vec<_>>());
    tree_search(sample, n, &mut |w| {
        all.extend(subset_sums(w));
        all.len() == full.len()
    });
    all
}

/// Whether an `n`-state DFA accepts between `lo` and `hi` words of `sample`.
pub fn feasible_at(sample: &Sample, n: usize, lo: u64, hi: u64) -> bool {
    if !any_subset_in(sample, lo, hi) {
        return false;
    }
    let s = sample.alphabet().len();
    if candidate_count(n, s).is_some_and(|c| c <= DEFAULT_ENUMERATION_BUDGET) {
        let tree = PrefixTree::build(sample).unwrap();
        let task = Task::new(sample, &tree, EncodingSpec::two_bound(n, lo, hi, RegularizerSpec::none()));
        return enumerate_optimum(&task, DEFAULT_ENUMERATION_BUDGET).unwrap().best.is_some();
    }
    let mut found = false;
    tree_search(sample, n, &mut |w| {
        found = subset_sums(w).range(lo..=hi).next().is_some();
        found
    });
    found
}

/// Every DFA with `n` states over `alphabet`, in table-then-finals order.
pub fn all_dfas(alphabet: &Alphabet, n: usize) -> impl Iterator<Item = Dfa> + '_ {
    let cells = n * alphabet.len();
    let tables = (n as u64).pow(cells as u32);
    (0..tables).flat_map(move |code| {
        let mut c = code;
        let mut table = vec![0usize; cells];
        for slot in table.iter_mut().rev() {
            *slot = (c % n as u64) as usize;
            c /= n as u64;
        }
        (0..1usize << n).map(move |mask| {
            let finals: Vec<usize> = (0..n).filter(|q| mask & (1 << q) != 0).collect();
            Dfa::from_table(alphabet.clone(), n, table.clone(), finals).unwrap()
        })
    })
}

/// Penalty of a DFA, counted transition by transition.
pub fn semantic_penalty(dfa: &Dfa, reg: &RegularizerSpec) -> Rational {
    let n = dfa.num_states();
    let s = dfa.alphabet().len();
    let mut leave_sink_path = 0i64;
    let mut moving = 0i64;
    let mut edges = BTreeSet::new();
    for q in 0..n {
        for a in 0..s {
            let t = dfa.successor(q, a);
            if t != 1 {
                leave_sink_path += 1;
            }
            if t != q {
                moving += 1;
            }
            edges.insert((q, t));
        }
    }
    let mut total = Rational::from_integer(0);
    if reg.has_sink() {
        total += reg.lambda_sink * leave_sink_path;
    }
    total += reg.lambda_selfloop * moving;
    total += reg.lambda_parallel * edges.len() as i64;
    total
}

/// `q1` is a non-final state whose transitions all loop.
pub fn has_sink(dfa: &Dfa) -> bool {
    dfa.num_states() > 1 && !dfa.is_final(1) && (0..dfa.alphabet().len()).all(|a| dfa.successor(1, a) == 1)
}
