use std::collections::BTreeMap;
use std::fmt::Write;

use super::Dfa;

/// Rendering switches for [`Dfa::to_dot`].
#[derive(Debug, Clone, Default)]
pub struct DotOptions {
    /// Drop `q -> q` edges. Readers then assume a missing symbol loops.
    pub omit_self_loops: bool,
}

fn escape(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

pub(super) fn render(dfa: &Dfa, options: &DotOptions) -> String {
    let mut out = String::new();
    out.push_str("digraph dfa {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  __start [shape=none, label=\"\", width=0, height=0];\n");
    for q in 0..dfa.num_states() {
        let shape = if dfa.is_final(q) { "doublecircle" } else { "circle" };
        writeln!(out, "  q{q} [shape={shape}];").unwrap();
    }
    out.push_str("  __start -> q0;\n");

    // parallel transitions collapse into one edge
    let mut edges: BTreeMap<(usize, usize), Vec<&str>> = BTreeMap::new();
    for q in 0..dfa.num_states() {
        for (a, sym) in dfa.alphabet().iter().enumerate() {
            let t = dfa.successor(q, a);
            if options.omit_self_loops && t == q {
                continue;
            }
            edges.entry((q, t)).or_default().push(sym.as_str());
        }
    }
    for ((from, to), labels) in edges {
        writeln!(out, "  q{from} -> q{to} [label=\"{}\"];", escape(&labels.join(","))).unwrap();
    }
    out.push_str("}\n");
    out
}
