//! Limit-average weighted automata over infinite words under probabilistic semantics.
//!
//! Values are exact rationals throughout. Under a word measure (uniform by default,
//! or a finite Markov chain) almost every run ends in a bottom strongly connected
//! component, and almost every word absorbed there has that component's expected
//! value; every analysis here is built on that fact.

pub mod analysis;
pub mod automaton;
pub mod error;
pub mod fit;
pub mod gadgets;
pub mod json;
pub mod lasso;
pub mod learn;
pub mod linalg;
pub mod measures;
pub mod rational;
pub mod scc;

pub use analysis::{
    almost_equivalent, bottom_scc_value, conditional_expectation, contract_bottom_sccs, distance,
    expected_value, minimize_almost_exact, reach_probabilities, rigid_check, Analysis,
    DistanceReport, Equivalence, RigidReport,
};
pub use automaton::{validate, Alphabet, Automaton, Builder, Defect, RawAutomaton, Word};
pub use error::{Error, Result};
pub use lasso::Lasso;
pub use measures::{Distribution, LabeledExample, MarkovChain, Sample, SampleKind};
pub use rational::Rational;
pub use scc::{scc_decompose, SccDecomposition};
