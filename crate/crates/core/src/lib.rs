//! Learning minimal deterministic finite automata as anomaly detectors from
//! unlabeled multi-sets of sequences.
//!
//! The learning problems are compiled to 0/1 integer programs
//! ([`encoder`]) and handed to a [`solver::Backend`]. [`learner`] runs the
//! size search (two bounds) or the fixed-size optimization (one bound).

pub mod automata;
pub mod datagen;
pub mod encoder;
pub mod eval;
pub mod learner;
pub mod milp;
pub mod prefix_tree;
pub mod solver;
