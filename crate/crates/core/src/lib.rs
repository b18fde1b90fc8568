//! Reeb networks over prediction lenses.
//!
//! A dataset is a graph over datapoints plus a matrix of lens values (for a
//! classifier, its per-class probabilities). The lenses are smoothed over the
//! graph, the graph is recursively split along the widest lens into small
//! overlapping vertex sets, tiny sets and components are merged away, and
//! the resulting Reeb net is used to estimate where the classifier errs.

pub mod datasets;
pub mod diagnose;
mod diffusion;
pub mod error;
pub mod graph;
pub mod layout;
pub mod lens;
pub mod mapper;
pub mod merging;
pub mod pipeline;
pub mod preprocess;
pub mod reeb;
pub mod report;
pub mod splitter;

pub use error::{Error, Result};
pub use graph::{Graph, VertexSet};
pub use lens::{LensMatrix, SmoothingParams};
pub use reeb::ReebNet;
pub use splitter::GtdaParams;
