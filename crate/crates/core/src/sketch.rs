//! Randomized projection baseline for resistance estimation.
//!
//! Projects the weighted incidence matrix with a random sign matrix
//! (entries plus or minus `1/sqrt(k)`), solves one grounded system per
//! projection row, and answers queries as squared distances between sketch
//! columns. Unbiased in expectation; variance decays like `1/k`.

use crate::engine::{Method, ResistanceResult};
use crate::error::{Error, Result};
use crate::factor::{self, SparseCholeskyFactor};
use crate::graph::{IncidenceMatrix, LaplacianMatrix, QuerySet, WeightedGraph};
use crate::order::{self, OrderingMethod};
use crate::seed;
use rand_chacha::rand_core::RngCore;

/// `k`-row sketch of `Q W^{1/2} B A^{-1}`, stored column major: node `v`
/// occupies `cols[v*k .. (v+1)*k]`. Columns are in original node numbering.
#[derive(Debug, Clone)]
pub struct ProjectionSketch {
    k: usize,
    n: usize,
    cols: Vec<f64>,
    pub seed: u64,
}

impl ProjectionSketch {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn col(&self, v: usize) -> &[f64] {
        &self.cols[v * self.k..(v + 1) * self.k]
    }
}

/// Builds the sketch from a grounded matrix and its graph; the full factor is
/// computed internally with the default ordering.
pub fn build_jl_sketch(
    lap: &LaplacianMatrix,
    g: &WeightedGraph,
    k: usize,
    seed_value: u64,
) -> Result<ProjectionSketch> {
    let ord = order::compute_ordering(lap, OrderingMethod::AmdLike);
    let f = factor::full_cholesky(lap, &ord)?;
    build_jl_sketch_with_factor(g, &f, k, seed_value)
}

/// Same as [`build_jl_sketch`] but reuses an existing full factor.
pub fn build_jl_sketch_with_factor(
    g: &WeightedGraph,
    factor: &SparseCholeskyFactor,
    k: usize,
    seed_value: u64,
) -> Result<ProjectionSketch> {
    if k < 1 {
        return Err(Error::InvalidSketchDim);
    }
    if factor.n() != g.n() {
        return Err(Error::DimensionMismatch {
            left: factor.n(),
            right: g.n(),
        });
    }
    let n = g.n();
    let b = IncidenceMatrix::from_graph(g);
    let scale = 1.0 / (k as f64).sqrt();

    // rows of Q W^1/2 B, one dense vector per projection row
    let mut rng = seed::rng(seed_value, 0);
    let mut y = vec![0.0f64; k * n];
    for e in 0..b.m() {
        let (head, tail, w) = b.row(e);
        let sw = w.sqrt();
        for i in 0..k {
            let sign = if rng.next_u32() & 1 == 0 { scale } else { -scale };
            y[i * n + head] += sign * sw;
            y[i * n + tail] -= sign * sw;
        }
    }

    let mut cols = vec![0.0f64; k * n];
    for i in 0..k {
        let x = factor.solve(&y[i * n..(i + 1) * n]);
        for v in 0..n {
            cols[v * k + i] = x[v];
        }
    }
    Ok(ProjectionSketch {
        k,
        n,
        cols,
        seed: seed_value,
    })
}

/// Squared distance between sketch columns `p` and `q`.
pub fn query_jl(s: &ProjectionSketch, queries: &QuerySet) -> Vec<ResistanceResult> {
    queries
        .pairs()
        .iter()
        .map(|&(p, q)| {
            let r = if p == q {
                0.0
            } else {
                s.col(p)
                    .iter()
                    .zip(s.col(q))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum()
            };
            ResistanceResult {
                p,
                q,
                resistance: r,
                method: Method::Jl,
                bound: None,
            }
        })
        .collect()
}
