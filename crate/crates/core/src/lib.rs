//! Topic evolution over a time-stamped corpus.
//!
//! The corpus is cut into overlapping epochs, each epoch gets its own
//! hierarchical Dirichlet process topic model, and topics of adjacent
//! epochs are linked in a thresholded similarity graph from which topic
//! emergence, disappearance, splitting and merging are read off.

pub mod app;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod hdp;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

/// Engine version recorded in exports and run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
