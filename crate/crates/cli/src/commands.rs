//! Implementations behind the subcommands. Each validates its inputs, runs
//! the library pipeline, writes any output files, and prints a `key=value`
//! report to stdout. Timing keys never reach output files.

use crate::config::{self, FileKind, RunConfig};
use crate::report::{BenchReport, ErrorStats};
use crate::{
    BaseArg, BenchArgs, ErArg, FormatArg, MethodArg, OrderArg, ReduceArgs, ResistArgs, SketchArgs,
    ValidateArgs,
};
use anyhow::{bail, Context, Result};
use effres_core::engine::{run_pipeline, Method, PipelineConfig, ResistanceResult};
use effres_core::graph::{GroundingPolicy, QuerySet, WeightedGraph};
use effres_core::io::IndexBase;
use effres_core::order::OrderingMethod;
use effres_pgreduce::dc::{accuracy_report, dc_solve};
use effres_pgreduce::model::ReducedModel;
use effres_pgreduce::netlist::Netlist;
use effres_pgreduce::partition::{partition_from_file, write_partition};
use effres_pgreduce::reduce::{self, ErMethod, ReduceOptions};
use rand::Rng;
use std::fmt::Write as _;
use std::path::Path;

fn resolve_kind(format: FormatArg, path: &Path) -> FileKind {
    match format {
        FormatArg::Auto => config::detect_kind(path),
        FormatArg::Edgelist => FileKind::EdgeList,
        FormatArg::Mm => FileKind::MatrixMarket,
        FormatArg::Spice => FileKind::Spice,
    }
}

fn resolve_base(base: BaseArg, kind: FileKind) -> IndexBase {
    match base {
        BaseArg::Auto => config::default_base(kind),
        BaseArg::Zero => IndexBase::Zero,
        BaseArg::One => IndexBase::One,
    }
}

fn method_of(m: MethodArg) -> Method {
    match m {
        MethodArg::Ainv => Method::Ainv,
        MethodArg::Exact => Method::Exact,
        MethodArg::Jl => Method::Jl,
    }
}

fn ordering_of(o: OrderArg) -> OrderingMethod {
    match o {
        OrderArg::Natural => OrderingMethod::Natural,
        OrderArg::Rcm => OrderingMethod::Rcm,
        OrderArg::Amd => OrderingMethod::AmdLike,
    }
}

fn ground_policy(random: bool, seed: u64) -> GroundingPolicy {
    if random {
        GroundingPolicy::Seeded(seed)
    } else {
        GroundingPolicy::Deterministic
    }
}

pub fn resist(a: &ResistArgs) -> Result<()> {
    config::init_threads(a.common.threads);
    let kind = resolve_kind(a.graph.format, &a.graph.input);
    let cfg = RunConfig {
        method: method_of(a.method),
        epsilon: a.factor.epsilon,
        drop_tol: a.factor.drop_tol,
        ordering: ordering_of(a.factor.ordering),
        ground_value: a.factor.ground,
        ground_policy: ground_policy(a.factor.random_ground, a.common.seed),
        jl_k: a.jl_k,
        seed: a.common.seed,
        threads: a.common.threads,
        input: a.graph.input.clone(),
        output: a.output.clone(),
        format: kind,
        index_base: resolve_base(a.graph.index_base, kind),
    };
    run_resistances(&cfg, a.query.queries.as_deref(), a.query.all_edges)
}

pub fn sketch(a: &SketchArgs) -> Result<()> {
    config::init_threads(a.common.threads);
    let kind = resolve_kind(a.graph.format, &a.graph.input);
    let cfg = RunConfig {
        method: Method::Jl,
        epsilon: 0.0,
        drop_tol: 0.0,
        ordering: ordering_of(a.ordering),
        ground_value: a.ground,
        ground_policy: ground_policy(a.random_ground, a.common.seed),
        jl_k: a.k,
        seed: a.common.seed,
        threads: a.common.threads,
        input: a.graph.input.clone(),
        output: a.output.clone(),
        format: kind,
        index_base: resolve_base(a.graph.index_base, kind),
    };
    run_resistances(&cfg, a.query.queries.as_deref(), a.query.all_edges)
}

fn run_resistances(cfg: &RunConfig, queries: Option<&Path>, all_edges: bool) -> Result<()> {
    cfg.validate()?;
    let g = config::load_graph(cfg)?;
    let queries = config::load_queries(&g, queries, all_edges, cfg.index_base)?;
    let out = run_pipeline(&g, &queries, &cfg.pipeline())?;

    let path = cfg.output_path();
    let file = std::fs::File::create(&path)
        .with_context(|| format!("creating result file {}", path.display()))?;
    effres_core::io::write_results(&out.results, cfg.index_base, std::io::BufWriter::new(file))?;

    print!("{}", BenchReport::from_pipeline(&out.report).machine_lines(true));
    println!("queries={}", out.results.len());
    println!("ground_value={:.6e}", out.report.ground_value);
    println!("results={}", path.display());
    Ok(())
}

/// `want` distinct edges of `g`, drawn by a seeded partial shuffle; the whole
/// edge set when `want >= m`. Returned as endpoint query pairs in edge order.
fn sample_edge_pairs(g: &WeightedGraph, want: usize, seed: u64) -> Vec<(usize, usize)> {
    let m = g.edge_count();
    let take = want.min(m);
    let mut idx: Vec<usize> = (0..m).collect();
    let mut rng = effres_core::seed::rng(seed, 5);
    for i in 0..take {
        let j = rng.gen_range(i..m);
        idx.swap(i, j);
    }
    idx.truncate(take);
    idx.sort_unstable();
    idx.into_iter()
        .map(|e| {
            let e = &g.edges()[e];
            (e.u, e.v)
        })
        .collect()
}

fn error_stats(approx: &[ResistanceResult], exact: &[ResistanceResult]) -> ErrorStats {
    let rels: Vec<f64> = approx
        .iter()
        .zip(exact)
        .map(|(a, e)| {
            assert!(e.resistance > 0.0, "zero exact resistance on an edge query");
            (a.resistance - e.resistance).abs() / e.resistance
        })
        .collect();
    ErrorStats::from_rels(&rels)
}

pub fn validate(a: &ValidateArgs) -> Result<()> {
    config::init_threads(a.common.threads);
    if a.sample == 0 {
        bail!("sample must be at least 1");
    }
    let kind = resolve_kind(a.graph.format, &a.graph.input);
    let cfg = RunConfig {
        method: method_of(a.method),
        epsilon: a.factor.epsilon,
        drop_tol: a.factor.drop_tol,
        ordering: ordering_of(a.factor.ordering),
        ground_value: a.factor.ground,
        ground_policy: ground_policy(a.factor.random_ground, a.common.seed),
        jl_k: a.jl_k,
        seed: a.common.seed,
        threads: a.common.threads,
        input: a.graph.input.clone(),
        output: None,
        format: kind,
        index_base: resolve_base(a.graph.index_base, kind),
    };
    cfg.validate()?;
    let g = config::load_graph(&cfg)?;
    if g.edge_count() == 0 {
        bail!("graph has no edges to sample");
    }

    let queries = QuerySet::new(g.n(), sample_edge_pairs(&g, a.sample, a.common.seed))?;
    let approx = run_pipeline(&g, &queries, &cfg.pipeline())?;
    let exact = run_pipeline(
        &g,
        &queries,
        &PipelineConfig {
            method: Method::Exact,
            ..cfg.pipeline()
        },
    )?;
    let report = BenchReport::from_pipeline(&approx.report)
        .with_errors(error_stats(&approx.results, &exact.results));

    print!("{}", report.machine_lines(true));
    if let Some(path) = &a.report_out {
        std::fs::write(path, report.machine_lines(false))
            .with_context(|| format!("writing report {}", path.display()))?;
    }
    Ok(())
}

fn parse_grid(spec: &str) -> Result<(usize, usize)> {
    let (r, c) = spec
        .split_once(['x', 'X'])
        .with_context(|| format!("grid spec is ROWSxCOLS, got {spec:?}"))?;
    let rows: usize = r.trim().parse().with_context(|| format!("bad grid rows {r:?}"))?;
    let cols: usize = c.trim().parse().with_context(|| format!("bad grid cols {c:?}"))?;
    if rows == 0 || cols == 0 {
        bail!("grid sides must be positive, got {spec:?}");
    }
    Ok((rows, cols))
}

pub fn bench(a: &BenchArgs) -> Result<()> {
    config::init_threads(a.common.threads);
    let g = match (&a.input, &a.grid) {
        (Some(path), None) => {
            let kind = resolve_kind(a.format, path);
            if kind == FileKind::Spice {
                bail!("{} is a circuit netlist; use the reduce command", path.display());
            }
            let format = match kind {
                FileKind::EdgeList => effres_core::io::GraphFormat::EdgeList,
                _ => effres_core::io::GraphFormat::MatrixMarket,
            };
            effres_core::io::parse_graph(path, format, resolve_base(a.index_base, kind))
                .with_context(|| format!("reading graph {}", path.display()))?
        }
        (None, Some(spec)) => {
            let (rows, cols) = parse_grid(spec)?;
            WeightedGraph::grid(rows, cols)
        }
        _ => bail!("pass exactly one of --input and --grid"),
    };

    let pairs = if a.sample > 0 {
        sample_edge_pairs(&g, a.sample, a.common.seed)
    } else {
        Vec::new()
    };
    let queries = QuerySet::new(g.n(), pairs)?;
    let cfg = PipelineConfig {
        method: Method::Ainv,
        epsilon: a.factor.epsilon,
        drop_tol: a.factor.drop_tol,
        ordering: ordering_of(a.factor.ordering),
        ground_value: a.factor.ground,
        ground_policy: ground_policy(a.factor.random_ground, a.common.seed),
        seed: a.common.seed,
        ..PipelineConfig::default()
    };
    let out = run_pipeline(&g, &queries, &cfg)?;
    let mut report = BenchReport::from_pipeline(&out.report);
    if a.sample > 0 {
        let exact = run_pipeline(
            &g,
            &queries,
            &PipelineConfig {
                method: Method::Exact,
                ..cfg.clone()
            },
        )?;
        report = report.with_errors(error_stats(&out.results, &exact.results));
    }

    print!("{}", report.table());
    print!("{}", report.machine_lines(true));
    if let Some(path) = &a.report_out {
        std::fs::write(path, report.machine_lines(false))
            .with_context(|| format!("writing report {}", path.display()))?;
    }
    Ok(())
}

pub fn reduce(a: &ReduceArgs) -> Result<()> {
    config::init_threads(a.common.threads);
    let text = std::fs::read_to_string(&a.input)
        .with_context(|| format!("reading netlist {}", a.input.display()))?;
    let net = Netlist::parse(&a.input, &text)?;
    let opts = ReduceOptions {
        blocks: a.blocks,
        er_method: match a.er {
            ErArg::Ainv => ErMethod::Ainv { epsilon: a.epsilon },
            ErArg::Exact => ErMethod::Exact,
        },
        sample_fraction: a.sample_fraction,
        merge_tau: a.merge_tau,
        seed: a.common.seed,
    };
    let reduction = match &a.partition {
        Some(p) => {
            let part = partition_from_file(p, &net)?;
            reduce::reduce_with_assignment(&net, part, &opts)?
        }
        None => reduce::reduce(&net, &opts)?,
    };

    let out_path = a
        .output
        .clone()
        .unwrap_or_else(|| config::with_suffix(&a.input, ".red"));
    reduction
        .model
        .to_netlist(&net)
        .write_file(&out_path)
        .with_context(|| format!("writing reduced netlist {}", out_path.display()))?;
    if let Some(p) = &a.partition_out {
        std::fs::write(p, write_partition(&net, &reduction.assignment))
            .with_context(|| format!("writing partition {}", p.display()))?;
    }

    let mut lines = String::new();
    writeln!(lines, "nodes_in={}", net.node_count()).unwrap();
    writeln!(lines, "nodes_out={}", reduction.model.nodes.len()).unwrap();
    writeln!(lines, "edges_out={}", reduction.model.edge_count()).unwrap();
    writeln!(lines, "blocks={}", reduction.assignment.blocks()).unwrap();
    writeln!(lines, "ports={}", reduction.ports.len()).unwrap();
    writeln!(lines, "eliminated={}", reduction.model.eliminated).unwrap();
    writeln!(lines, "merged={}", reduction.model.merged).unwrap();
    writeln!(lines, "sampled={}", reduction.model.sampled).unwrap();
    if a.check {
        if reduction.ports.is_empty() {
            writeln!(lines, "check=skipped").unwrap();
        } else {
            let reference = dc_solve(&ReducedModel::from_netlist(&net)?)?;
            let solved = dc_solve(&reduction.model)?;
            let rep = accuracy_report(&reference, &solved, &reduction.ports);
            writeln!(lines, "err_volts={:.16e}", rep.err_volts).unwrap();
            if let Some(rel) = rep.rel {
                writeln!(lines, "rel={:.16e}", rel).unwrap();
            }
        }
    }

    print!("{lines}");
    println!("seconds={:.6}", reduction.seconds);
    println!("reduced={}", out_path.display());
    if let Some(p) = &a.report_out {
        std::fs::write(p, &lines).with_context(|| format!("writing report {}", p.display()))?;
    }
    Ok(())
}
