use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("partition file is missing {count} node(s), first missing: {first}")]
    PartitionMissingNodes { count: usize, first: String },
    #[error("cannot split {n} node(s) into {blocks} block(s)")]
    BadBlockCount { blocks: usize, n: usize },
    #[error("eliminated submatrix is singular: node {node} has no path to a kept node or ground")]
    SingularPivot { node: usize },
    #[error("interior of block {block} is singular: node {node} has no path to a kept node or ground")]
    SingularInterior { block: usize, node: usize },
    #[error("subnetwork containing node {node} has no path to ground or a fixed potential")]
    FloatingSubnetwork { node: usize },
    #[error("node {node} carries conflicting fixed potentials {a} and {b}")]
    ConflictingPotential { node: usize, a: f64, b: f64 },
    #[error("sample count must be positive")]
    BadSampleCount,
    #[error("sample fraction {0} is not in (0, 10]")]
    BadSampleFraction(f64),
    #[error("stitch: edge endpoint {node} is not a retained node of its part")]
    InconsistentStitch { node: usize },
    #[error("block {block} input changed but was not listed as modified")]
    UnlistedBlockModified { block: usize },
    #[error("prior partition covers {expected} node(s), new netlist has {found}")]
    AssignmentMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Core(#[from] effres_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
