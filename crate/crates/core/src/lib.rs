//! Explainable classification of tabular data.
//!
//! Attributes are abstracted into discrete *flips* (Up/Down around an
//! ROC-optimal threshold for continuous attributes, one flip per value for
//! categorical ones). One weighted knowledge graph over the flips is built
//! per class, and records are classified either by summing conditional
//! probabilities or by summing PageRank-based significances. Auxiliary
//! analyses (community detection, correlation graphs, decision trees) are
//! emitted alongside for interpretation.

pub mod abstraction;
pub mod classify;
pub mod community;
pub mod correlate;
pub mod dtree;
pub mod error;
pub mod graph;
pub mod graphml;
pub mod ingest;
pub mod kgraph;
pub mod pipeline;
pub mod plot;

pub use error::{CactusError, Result};
