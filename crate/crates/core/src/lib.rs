//! Wrapper feature-subset selection with island-model binary differential
//! evolution and its chaotic variants.
//!
//! Candidate subsets are bit masks scored by `AUC * (1 - |subset| / N)`,
//! where the AUC comes from a logistic regression trained on the selected
//! columns. Islands evolve sub-populations on disjoint shards of the
//! training data and meet at a synchronous migration barrier.

pub mod analysis;
pub mod chaos;
pub mod classifier;
pub mod data;
pub mod draw;
pub mod engine;
pub mod evolution;
pub mod mask;

pub use mask::FeatureMask;
