//! Benchmark reporting: per-stage wall times, factor and inverse sizes with
//! their ratios over `n·log₂n`, and optional error statistics against exact
//! answers. Emitted both as an aligned human table and as flat `key=value`
//! lines; timing keys can be left out so report files stay byte-stable
//! across runs.

use effres_core::engine::PipelineReport;
use std::fmt::Write as _;

/// Average and worst relative error over a sampled query set.
#[derive(Debug, Clone, Copy)]
pub struct ErrorStats {
    pub e_a: f64,
    pub e_m: f64,
    pub sample: usize,
}

impl ErrorStats {
    /// The average can never exceed the maximum.
    pub fn new(e_a: f64, e_m: f64, sample: usize) -> Self {
        assert!(e_a >= 0.0 && e_m >= 0.0 && sample > 0);
        assert!(e_a <= e_m, "mean error {e_a} above max error {e_m}");
        ErrorStats { e_a, e_m, sample }
    }

    pub fn from_rels(rels: &[f64]) -> Self {
        assert!(!rels.is_empty(), "no relative errors collected");
        let e_a = rels.iter().sum::<f64>() / rels.len() as f64;
        let e_m = rels.iter().fold(0.0f64, |m, &r| m.max(r));
        ErrorStats::new(e_a, e_m, rels.len())
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
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
    pub errors: Option<ErrorStats>,
}

impl BenchReport {
    pub fn from_pipeline(r: &PipelineReport) -> Self {
        BenchReport {
            n: r.n,
            m: r.m,
            ground_seconds: r.ground_seconds,
            order_seconds: r.order_seconds,
            factor_seconds: r.factor_seconds,
            ainv_seconds: r.ainv_seconds,
            query_seconds: r.query_seconds,
            factor_nnz: r.factor_nnz,
            ainv_nnz: r.ainv_nnz,
            max_depth: r.max_depth,
            errors: None,
        }
    }

    pub fn with_errors(mut self, errors: ErrorStats) -> Self {
        self.errors = Some(errors);
        self
    }

    pub fn factor_ratio(&self) -> f64 {
        PipelineReport::nnz_ratio(self.factor_nnz, self.n)
    }

    pub fn ainv_ratio(&self) -> f64 {
        PipelineReport::nnz_ratio(self.ainv_nnz, self.n)
    }

    pub fn total_seconds(&self) -> f64 {
        self.ground_seconds
            + self.order_seconds
            + self.factor_seconds
            + self.ainv_seconds
            + self.query_seconds
    }

    /// Flat `key=value` lines. Size counters and errors are deterministic;
    /// wall times are appended only when asked for.
    pub fn machine_lines(&self, include_timings: bool) -> String {
        let mut out = String::new();
        writeln!(out, "n={}", self.n).unwrap();
        writeln!(out, "m={}", self.m).unwrap();
        writeln!(out, "factor_nnz={}", self.factor_nnz).unwrap();
        writeln!(out, "ainv_nnz={}", self.ainv_nnz).unwrap();
        writeln!(out, "factor_ratio={:.6}", self.factor_ratio()).unwrap();
        writeln!(out, "ainv_ratio={:.6}", self.ainv_ratio()).unwrap();
        writeln!(out, "max_depth={}", self.max_depth).unwrap();
        if let Some(e) = self.errors {
            writeln!(out, "sample={}", e.sample).unwrap();
            writeln!(out, "E_a={:.16e}", e.e_a).unwrap();
            writeln!(out, "E_m={:.16e}", e.e_m).unwrap();
        }
        if include_timings {
            writeln!(out, "ground_seconds={:.6}", self.ground_seconds).unwrap();
            writeln!(out, "order_seconds={:.6}", self.order_seconds).unwrap();
            writeln!(out, "factor_seconds={:.6}", self.factor_seconds).unwrap();
            writeln!(out, "ainv_seconds={:.6}", self.ainv_seconds).unwrap();
            writeln!(out, "query_seconds={:.6}", self.query_seconds).unwrap();
            writeln!(out, "total_seconds={:.6}", self.total_seconds()).unwrap();
        }
        out
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<24}{:>14}", "quantity", "value").unwrap();
        writeln!(out, "{:<24}{:>14}", "nodes", self.n).unwrap();
        writeln!(out, "{:<24}{:>14}", "edges", self.m).unwrap();
        writeln!(out, "{:<24}{:>14}", "factor nnz", self.factor_nnz).unwrap();
        writeln!(out, "{:<24}{:>14}", "inverse nnz", self.ainv_nnz).unwrap();
        writeln!(out, "{:<24}{:>14.3}", "factor nnz / n log2 n", self.factor_ratio()).unwrap();
        writeln!(out, "{:<24}{:>14.3}", "inverse nnz / n log2 n", self.ainv_ratio()).unwrap();
        writeln!(out, "{:<24}{:>14}", "max column depth", self.max_depth).unwrap();
        if let Some(e) = self.errors {
            writeln!(out, "{:<24}{:>14}", "error sample size", e.sample).unwrap();
            writeln!(out, "{:<24}{:>14.3e}", "avg relative error E_a", e.e_a).unwrap();
            writeln!(out, "{:<24}{:>14.3e}", "max relative error E_m", e.e_m).unwrap();
        }
        writeln!(out, "{:<24}{:>14.4}", "ground seconds", self.ground_seconds).unwrap();
        writeln!(out, "{:<24}{:>14.4}", "ordering seconds", self.order_seconds).unwrap();
        writeln!(out, "{:<24}{:>14.4}", "factor seconds", self.factor_seconds).unwrap();
        writeln!(out, "{:<24}{:>14.4}", "inverse seconds", self.ainv_seconds).unwrap();
        writeln!(out, "{:<24}{:>14.4}", "query seconds", self.query_seconds).unwrap();
        writeln!(out, "{:<24}{:>14.4}", "total seconds", self.total_seconds()).unwrap();
        out
    }
}
