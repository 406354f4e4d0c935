//! Power-grid model reduction. A SPICE-subset netlist is split into blocks,
//! each block's source-free interior is eliminated exactly, the surviving
//! block networks are thinned by resistance-weighted edge sampling, and the
//! results are stitched into one small model that reproduces port behavior.

pub mod dc;
pub mod error;
pub mod model;
pub mod netlist;
pub mod partition;
pub mod reduce;
pub mod schur;

pub use error::{Error, Result};
