//! Effective resistances on weighted undirected graphs.
//!
//! The pipeline: build the graph Laplacian, ground it so it becomes positive
//! definite, factor it (full or incomplete sparse Cholesky), then either solve
//! per query or build a sparse approximate inverse of the factor and answer
//! every query as a sparse vector distance. A randomized projection baseline
//! is included for comparison.

pub mod ainv;
pub mod engine;
pub mod error;
pub mod factor;
pub mod graph;
pub mod io;
pub mod order;
pub mod seed;
pub mod sketch;

pub use error::{Error, Result};
