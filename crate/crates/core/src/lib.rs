//! Distributed pseudo-likelihood community detection for stochastic block
//! models.
//!
//! A graph is split row-wise into equal blocks held by simulated workers.
//! Each round the master gathers block-edge counts, broadcasts global
//! parameters and labels, and merges the labels each worker picks for its own
//! nodes after a local EM.

pub mod error;
#[doc(hidden)]
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod labels;
pub mod master;
pub mod matrix;
pub mod metrics;
pub mod partition;
pub mod protocol;
pub mod select;
pub mod sim;
pub mod spectral;
pub mod worker;

pub use error::{Error, Result};
pub use graph::SparseGraph;
pub use labels::LabelVector;
