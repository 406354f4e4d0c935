//! Run configuration shared by the resistance-computing commands, and the
//! file-loading glue that turns command-line paths into in-memory objects.

use anyhow::{bail, Context, Result};
use effres_core::engine::{Method, PipelineConfig};
use effres_core::graph::{GroundingPolicy, QuerySet, WeightedGraph};
use effres_core::io::{GraphFormat, IndexBase};
use effres_core::order::OrderingMethod;
use std::path::{Path, PathBuf};

/// Everything one resistance run depends on, validated in one place.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: Method,
    pub epsilon: f64,
    pub drop_tol: f64,
    pub ordering: OrderingMethod,
    /// `None` lets the pipeline pick a tenth of the mean edge weight.
    pub ground_value: Option<f64>,
    pub ground_policy: GroundingPolicy,
    pub jl_k: usize,
    pub seed: u64,
    /// `None` keeps the default thread pool.
    pub threads: Option<usize>,
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub format: FileKind,
    pub index_base: IndexBase,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            bail!("epsilon must be nonnegative, got {}", self.epsilon);
        }
        if self.drop_tol.is_nan() || self.drop_tol < 0.0 {
            bail!("drop tolerance must be nonnegative, got {}", self.drop_tol);
        }
        if self.jl_k == 0 {
            bail!("projection dimension must be at least 1");
        }
        if let Some(g) = self.ground_value {
            if !g.is_finite() || g <= 0.0 {
                bail!("ground conductance must be positive and finite, got {g}");
            }
        }
        if self.input.as_os_str().is_empty() {
            bail!("input path is empty");
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            method: self.method,
            epsilon: self.epsilon,
            drop_tol: self.drop_tol,
            ordering: self.ordering,
            ground_value: self.ground_value,
            ground_policy: self.ground_policy,
            jl_k: self.jl_k,
            seed: self.seed,
            certify: false,
        }
    }

    /// Result path: explicit `--output`, or the input path with `.res` added.
    pub fn output_path(&self) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| with_suffix(&self.input, ".res"))
    }
}

/// `path` with `suffix` appended to the full file name.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(suffix);
    PathBuf::from(os)
}

/// File kinds the frontend distinguishes; graphs and netlists take different
/// commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    EdgeList,
    MatrixMarket,
    Spice,
}

/// Extension-based kind detection: `.mtx`/`.mm` are Matrix Market,
/// `.sp`/`.spice`/`.cir`/`.ckt`/`.net` are netlists, anything else is an
/// edge list.
pub fn detect_kind(path: &Path) -> FileKind {
    match path.extension().and_then(|e| e.to_str()) {
        Some("mtx") | Some("mm") => FileKind::MatrixMarket,
        Some("sp") | Some("spice") | Some("cir") | Some("ckt") | Some("net") => FileKind::Spice,
        _ => FileKind::EdgeList,
    }
}

/// Matrix Market files are one-indexed by convention; edge lists default to
/// zero unless the flag says otherwise.
pub fn default_base(kind: FileKind) -> IndexBase {
    match kind {
        FileKind::MatrixMarket => IndexBase::One,
        _ => IndexBase::Zero,
    }
}

pub fn load_graph(cfg: &RunConfig) -> Result<WeightedGraph> {
    let format = match cfg.format {
        FileKind::EdgeList => GraphFormat::EdgeList,
        FileKind::MatrixMarket => GraphFormat::MatrixMarket,
        FileKind::Spice => {
            bail!(
                "{} is a circuit netlist; use the reduce command",
                cfg.input.display()
            )
        }
    };
    effres_core::io::parse_graph(&cfg.input, format, cfg.index_base)
        .with_context(|| format!("reading graph {}", cfg.input.display()))
}

pub fn load_queries(
    g: &WeightedGraph,
    queries: Option<&Path>,
    all_edges: bool,
    base: IndexBase,
) -> Result<QuerySet> {
    match (queries, all_edges) {
        (Some(path), false) => effres_core::io::parse_queries(path, base, g.n())
            .with_context(|| format!("reading queries {}", path.display())),
        (None, true) => Ok(QuerySet::all_edges(g)),
        _ => bail!("pass exactly one of --queries and --all-edges"),
    }
}

/// Caps the global thread pool. Later calls in the same process keep the
/// first pool, which is fine: the output contract is thread-count independent.
pub fn init_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> RunConfig {
        RunConfig {
            method: Method::Ainv,
            epsilon: 1e-3,
            drop_tol: 1e-3,
            ordering: OrderingMethod::AmdLike,
            ground_value: None,
            ground_policy: GroundingPolicy::Deterministic,
            jl_k: 200,
            seed: 42,
            threads: None,
            input: PathBuf::from("g.txt"),
            output: None,
            format: FileKind::EdgeList,
            index_base: IndexBase::Zero,
        }
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(base_config().validate().is_ok());
        for bad in [
            RunConfig { epsilon: -1.0, ..base_config() },
            RunConfig { drop_tol: f64::NAN, ..base_config() },
            RunConfig { jl_k: 0, ..base_config() },
            RunConfig { ground_value: Some(0.0), ..base_config() },
            RunConfig { input: PathBuf::new(), ..base_config() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn kind_detection_follows_extensions() {
        assert_eq!(detect_kind(Path::new("a.mtx")), FileKind::MatrixMarket);
        assert_eq!(detect_kind(Path::new("a.mm")), FileKind::MatrixMarket);
        assert_eq!(detect_kind(Path::new("a.sp")), FileKind::Spice);
        assert_eq!(detect_kind(Path::new("a.cir")), FileKind::Spice);
        assert_eq!(detect_kind(Path::new("a.txt")), FileKind::EdgeList);
        assert_eq!(detect_kind(Path::new("noext")), FileKind::EdgeList);
    }

    #[test]
    fn default_output_appends_res() {
        assert_eq!(base_config().output_path(), PathBuf::from("g.txt.res"));
        let explicit = RunConfig {
            output: Some(PathBuf::from("out.txt")),
            ..base_config()
        };
        assert_eq!(explicit.output_path(), PathBuf::from("out.txt"));
    }

    #[test]
    fn pipeline_mapping_carries_every_knob() {
        let cfg = RunConfig {
            method: Method::Jl,
            epsilon: 1e-2,
            drop_tol: 0.0,
            ordering: OrderingMethod::Rcm,
            ground_value: Some(0.5),
            jl_k: 64,
            seed: 7,
            ..base_config()
        };
        let p = cfg.pipeline();
        assert_eq!(p.method, Method::Jl);
        assert_eq!(p.epsilon, 1e-2);
        assert_eq!(p.drop_tol, 0.0);
        assert_eq!(p.ordering, OrderingMethod::Rcm);
        assert_eq!(p.ground_value, Some(0.5));
        assert_eq!(p.jl_k, 64);
        assert_eq!(p.seed, 7);
    }
}
