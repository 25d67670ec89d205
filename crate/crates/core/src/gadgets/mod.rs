//! Generators for the example automata, the hardness reductions and the
//! characterization experiment.

mod chain;
mod characterization;
mod experiment;
mod figures;
mod sat0;
mod size;
mod vectors;

pub use chain::sample_chain;
pub use characterization::{characterization, has_marker};
pub use experiment::{experiment_distinguish, ExperimentKind, ExperimentReport};
pub use figures::{a1, a2, a3, a_exp, a_exp_merged, a_exp_with, branches, two_branch, two_branch_large, two_branch_small};
pub use sat0::{
    sat0_alphabet, sat0_canonical_automaton, sat0_to_esample, sat0_to_usample, Clause, Sat0Formula,
    Sat0Variant,
};
pub use size::{estimate_sample_size, ln_bounds};
pub use vectors::{
    bkmp_automaton, condition_c1, condition_c2, condition_c3, cover_automaton, dominating_set_cover,
    dominating_set_to_vectors, is_quarter_cover, median_automaton, modify_bkmp, BkmpVariant, Graph,
    MedianSolution, VectorInstance,
};
