//! Word measures, labelled samples and their consistency.

mod chain;
mod distribution;
mod sample;

pub use chain::MarkovChain;
pub use distribution::Distribution;
pub use sample::{
    check_sample_consistency, draw_sample, reduce_to_minimal, Conflict, LabeledExample, Sample,
    SampleKind, SampleSpec,
};
