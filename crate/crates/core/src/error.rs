use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({u}, {v}) has nonpositive weight {w}")]
    NonpositiveWeight { u: usize, v: usize, w: f64 },

    #[error("node index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("grounding value {0} must be positive")]
    NonpositiveGround(f64),

    #[error("matrix is not positive definite: pivot {pivot:e} at column {column} (original node {node})")]
    NonpositivePivot {
        column: usize,
        node: usize,
        pivot: f64,
    },

    #[error("{op} requires a full factor, got an incomplete one")]
    FullFactorRequired { op: &'static str },

    #[error("epsilon {0} must lie in [0, 1)")]
    InvalidEpsilon(f64),

    #[error("drop tolerance {0} must lie in [0, 1)")]
    InvalidDropTol(f64),

    #[error("sketch dimension k must be at least 1")]
    InvalidSketchDim,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
