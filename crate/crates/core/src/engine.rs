//! Effective resistance queries and the end-to-end pipeline.

use crate::ainv::{self, ApproxInverse};
use crate::error::{Error, Result};
use crate::factor::{self, DepthProfile, SparseCholeskyFactor};
use crate::graph::{self, GroundingPolicy, QuerySet, WeightedGraph};
use crate::order::{self, OrderingMethod};
use crate::sketch;
use rayon::prelude::*;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ainv,
    Exact,
    Jl,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ainv" => Ok(Method::Ainv),
            "exact" => Ok(Method::Exact),
            "jl" => Ok(Method::Jl),
            other => Err(format!("unknown method {other:?} (expected ainv|exact|jl)")),
        }
    }
}

/// One answered query. `bound` carries the heuristic relative error band
/// `alpha * epsilon` when the caller asked for certificates.
#[derive(Debug, Clone)]
pub struct ResistanceResult {
    pub p: usize,
    pub q: usize,
    pub resistance: f64,
    pub method: Method,
    pub bound: Option<f64>,
}

/// Squared 2-norm distance between approximate inverse columns `p` and `q`.
///
/// Queries are in original node numbering and are mapped through the factor
/// ordering internally. Evaluation is parallel over the query list; results
/// keep input order and each value is independent of thread count.
pub fn query_ainv(z: &ApproxInverse, queries: &QuerySet) -> Vec<ResistanceResult> {
    queries
        .pairs()
        .par_iter()
        .map(|&(p, q)| ResistanceResult {
            p,
            q,
            resistance: ainv_resistance(z, p, q),
            method: Method::Ainv,
            bound: None,
        })
        .collect()
}

/// Same queries with the heuristic error band attached.
pub fn query_ainv_certified(
    z: &ApproxInverse,
    depth: &DepthProfile,
    queries: &QuerySet,
) -> Vec<ResistanceResult> {
    queries
        .pairs()
        .par_iter()
        .map(|&(p, q)| {
            let pp = z.ordering().new_of_old(p);
            let qq = z.ordering().new_of_old(q);
            ResistanceResult {
                p,
                q,
                resistance: ainv_resistance(z, p, q),
                method: Method::Ainv,
                bound: ainv::alpha_surrogate(z, depth, pp, qq).map(|a| a * z.epsilon()),
            }
        })
        .collect()
}

fn ainv_resistance(z: &ApproxInverse, p: usize, q: usize) -> f64 {
    if p == q {
        return 0.0;
    }
    let pp = z.ordering().new_of_old(p);
    let qq = z.ordering().new_of_old(q);
    let (_, n2) = ainv::diff_norms(z.col(pp), z.col(qq));
    n2
}

/// Exact resistance through the full factor: solve `L y = e_p - e_q` and
/// return `||y||^2`. Requires a full factor.
pub fn query_exact(
    factor: &SparseCholeskyFactor,
    queries: &QuerySet,
) -> Result<Vec<ResistanceResult>> {
    if !factor.is_full() {
        return Err(Error::FullFactorRequired { op: "query_exact" });
    }
    let n = factor.n();
    for &(p, q) in queries.pairs() {
        if p >= n {
            return Err(Error::IndexOutOfRange { index: p, n });
        }
        if q >= n {
            return Err(Error::IndexOutOfRange { index: q, n });
        }
    }
    let results = queries
        .pairs()
        .par_iter()
        .map_init(
            || vec![0.0f64; n],
            |y, &(p, q)| {
                let r = if p == q {
                    0.0
                } else {
                    for v in y.iter_mut() {
                        *v = 0.0;
                    }
                    y[factor.ordering().new_of_old(p)] = 1.0;
                    y[factor.ordering().new_of_old(q)] = -1.0;
                    factor.solve_lower(y);
                    y.iter().map(|v| v * v).sum()
                };
                ResistanceResult {
                    p,
                    q,
                    resistance: r,
                    method: Method::Exact,
                    bound: None,
                }
            },
        )
        .collect();
    Ok(results)
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub method: Method,
    pub epsilon: f64,
    pub drop_tol: f64,
    pub ordering: OrderingMethod,
    /// Diagonal bump; `None` means one tenth of the mean edge weight.
    pub ground_value: Option<f64>,
    pub ground_policy: GroundingPolicy,
    /// Projection dimension for the randomized baseline.
    pub jl_k: usize,
    pub seed: u64,
    /// Attach heuristic error bands to approximate results.
    pub certify: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            method: Method::Ainv,
            epsilon: 1e-3,
            drop_tol: 1e-3,
            ordering: OrderingMethod::AmdLike,
            ground_value: None,
            ground_policy: GroundingPolicy::Deterministic,
            jl_k: 200,
            seed: 42,
            certify: false,
        }
    }
}

/// Wall times and size counters for one pipeline run.
#[derive(Debug, Clone, Default)]
pub struct PipelineReport {
    pub n: usize,
    pub m: usize,
    pub ground_seconds: f64,
    pub order_seconds: f64,
    pub factor_seconds: f64,
    pub ainv_seconds: f64,
    pub query_seconds: f64,
    pub factor_nnz: usize,
    pub ainv_nnz: usize,
    pub max_depth: usize,
    pub ground_value: f64,
}

impl PipelineReport {
    /// nnz scaled by `n * log2(n)`, the natural budget for inverse columns.
    pub fn nnz_ratio(nnz: usize, n: usize) -> f64 {
        if n < 2 {
            return nnz as f64;
        }
        nnz as f64 / (n as f64 * (n as f64).log2())
    }
}

pub struct PipelineOutput {
    pub results: Vec<ResistanceResult>,
    pub report: PipelineReport,
}

/// Ground, order, factor, then answer queries with the configured method.
pub fn run_pipeline(
    g: &WeightedGraph,
    queries: &QuerySet,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    let mut report = PipelineReport {
        n: g.n(),
        m: g.edge_count(),
        ..Default::default()
    };

    let t = Instant::now();
    let ground_value = cfg.ground_value.unwrap_or_else(|| graph::default_ground_value(g));
    report.ground_value = ground_value;
    let lap = graph::build_laplacian(g);
    let grounded = graph::ground_laplacian(&lap, ground_value, cfg.ground_policy)?;
    report.ground_seconds = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let ord = order::compute_ordering(&grounded, cfg.ordering);
    report.order_seconds = t.elapsed().as_secs_f64();

    let results = match cfg.method {
        Method::Ainv => {
            let t = Instant::now();
            let f = if cfg.drop_tol > 0.0 {
                factor::incomplete_cholesky(&grounded, &ord, cfg.drop_tol)?
            } else {
                factor::full_cholesky(&grounded, &ord)?
            };
            report.factor_seconds = t.elapsed().as_secs_f64();
            report.factor_nnz = f.nnz();

            let t = Instant::now();
            let z = ainv::approximate_inverse(&f, cfg.epsilon)?;
            report.ainv_seconds = t.elapsed().as_secs_f64();
            report.ainv_nnz = z.nnz();
            let depth = factor::depth_profile(&f);
            report.max_depth = depth.max_depth();

            let t = Instant::now();
            let out = if cfg.certify {
                query_ainv_certified(&z, &depth, queries)
            } else {
                query_ainv(&z, queries)
            };
            report.query_seconds = t.elapsed().as_secs_f64();
            out
        }
        Method::Exact => {
            let t = Instant::now();
            let f = factor::full_cholesky(&grounded, &ord)?;
            report.factor_seconds = t.elapsed().as_secs_f64();
            report.factor_nnz = f.nnz();
            let depth = factor::depth_profile(&f);
            report.max_depth = depth.max_depth();

            let t = Instant::now();
            let out = query_exact(&f, queries)?;
            report.query_seconds = t.elapsed().as_secs_f64();
            out
        }
        Method::Jl => {
            let t = Instant::now();
            let f = factor::full_cholesky(&grounded, &ord)?;
            report.factor_seconds = t.elapsed().as_secs_f64();
            report.factor_nnz = f.nnz();
            let depth = factor::depth_profile(&f);
            report.max_depth = depth.max_depth();

            let t = Instant::now();
            let s = sketch::build_jl_sketch_with_factor(g, &f, cfg.jl_k, cfg.seed)?;
            report.ainv_seconds = t.elapsed().as_secs_f64();

            let t = Instant::now();
            let out = sketch::query_jl(&s, queries);
            report.query_seconds = t.elapsed().as_secs_f64();
            out
        }
    };

    Ok(PipelineOutput { results, report })
}
