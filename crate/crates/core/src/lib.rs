//! Fine hyperbolic graphs, normal triangles, sphere partitions and the
//! weighted Hilbert-space representation built on them.

pub mod cli;
pub mod error;
pub mod fine;
pub mod generators;
pub mod graph;
pub mod hilbert;
pub mod partitions;
pub mod triangles;

pub use error::{Error, Result};
