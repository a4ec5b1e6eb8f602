//! Binary relations, formal concepts and gain-optimal coverage.

mod concept;
mod context;
mod coverage;

pub use concept::{
    compare_candidates, enumerate_concepts, enumerate_concepts_with, gain, intent_labels, optimal_rectangle, Concept,
    Enumeration, Rectangle, SUBSET_ENUMERATION_MAX,
};
pub use context::{ContextFile, FormalContext};
#[cfg(feature = "parallel")]
pub use coverage::parallel;
pub use coverage::{coverage_elements, sequential, Coverage};

#[cfg(test)]
pub(crate) use context::fixtures;
