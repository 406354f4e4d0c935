//! Command-line frontend. Five subcommands: `effres` answers resistance
//! queries through the sparse-factor pipeline, `sketch` answers them with a
//! seeded random projection, `reduce` shrinks a power-grid netlist to its
//! source-facing nodes, `validate` measures approximation error against
//! exact solves, and `bench` times the pipeline stages.
//!
//! Output files are byte-identical across repeated runs with the same inputs
//! and seed, independent of thread count; wall times go to stdout only.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::path::PathBuf;

pub mod commands;
pub mod config;
pub mod report;

pub use config::RunConfig;
pub use report::{BenchReport, ErrorStats};

#[derive(Debug, Parser)]
#[command(
    name = "effres",
    version,
    about = "Effective resistances and power-grid reduction on sparse graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute effective resistances through the sparse factor pipeline.
    Effres(ResistArgs),
    /// Compute effective resistances with a seeded random projection.
    Sketch(SketchArgs),
    /// Reduce a power-grid netlist to its source-facing nodes.
    Reduce(ReduceArgs),
    /// Measure approximation error against exact solves on sampled edges.
    Validate(ValidateArgs),
    /// Time the pipeline stages and report size counters.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Auto,
    Edgelist,
    Mm,
    Spice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaseArg {
    Auto,
    #[value(name = "0")]
    Zero,
    #[value(name = "1")]
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Natural,
    Rcm,
    Amd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ainv,
    Exact,
    Jl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ErArg {
    Ainv,
    Exact,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Graph file: `u v w` edge list or Matrix Market coordinate.
    #[arg(long)]
    pub input: PathBuf,
    /// Input format override; the default follows the file extension.
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
    /// Node numbering of the input; Matrix Market defaults to 1, edge lists to 0.
    #[arg(long, value_enum, default_value_t = BaseArg::Auto)]
    pub index_base: BaseArg,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct QueryArgs {
    /// Query file with one `p q` pair per line.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Answer one query per graph edge.
    #[arg(long)]
    pub all_edges: bool,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Seed behind every randomized choice.
    #[arg(long, env = "EFFRES_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Worker threads; results never depend on this.
    #[arg(long, env = "EFFRES_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FactorArgs {
    /// Per-column truncation budget of the approximate inverse.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Relative drop tolerance of the factorization; 0 keeps every entry.
    #[arg(long, default_value_t = 1e-3)]
    pub drop_tol: f64,
    /// Elimination order.
    #[arg(long, value_enum, default_value_t = OrderArg::Amd)]
    pub ordering: OrderArg,
    /// Ground conductance; the default is a tenth of the mean edge weight.
    #[arg(long)]
    pub ground: Option<f64>,
    /// Ground a seeded random node per component instead of the lowest one.
    #[arg(long)]
    pub random_ground: bool,
}

#[derive(Debug, Args)]
pub struct ResistArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub factor: FactorArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// `ainv` reads answers off the truncated inverse, `exact` runs one
    /// triangular solve per query, `jl` uses the projection sketch.
    #[arg(long, value_enum, default_value_t = MethodArg::Ainv)]
    pub method: MethodArg,
    /// Projection dimension when `--method jl` is chosen.
    #[arg(long, default_value_t = 200)]
    pub jl_k: usize,
    /// Result file; the default adds `.res` to the input path.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SketchArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Projection dimension.
    #[arg(long, default_value_t = 200)]
    pub k: usize,
    /// Elimination order of the underlying factor.
    #[arg(long, value_enum, default_value_t = OrderArg::Amd)]
    pub ordering: OrderArg,
    /// Ground conductance; the default is a tenth of the mean edge weight.
    #[arg(long)]
    pub ground: Option<f64>,
    /// Ground a seeded random node per component instead of the lowest one.
    #[arg(long)]
    pub random_ground: bool,
    /// Result file; the default adds `.res` to the input path.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// Power-grid netlist: resistors, current sources, ground-referenced
    /// voltage sources.
    #[arg(long)]
    pub input: PathBuf,
    /// Reduced netlist; the default adds `.red` to the input path.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Block count; the default is one block per 50 source nodes.
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Node-to-block assignment file, one `node_name block_id` per line;
    /// the default partitions with the builtin region grower.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Write the assignment that was used.
    #[arg(long)]
    pub partition_out: Option<PathBuf>,
    /// Resistance estimates that drive merging and edge sampling.
    #[arg(long, value_enum, default_value_t = ErArg::Ainv)]
    pub er: ErArg,
    /// Truncation budget of the approximate resistance estimates.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Kept fraction of each block's reduced edge count.
    #[arg(long, default_value_t = 0.65)]
    pub sample_fraction: f64,
    /// Port-merge threshold as a multiple of the median edge resistance;
    /// 0 disables merging.
    #[arg(long, default_value_t = 0.0)]
    pub merge_tau: f64,
    /// Solve both grids and report the reduced one's port-voltage error.
    #[arg(long)]
    pub check: bool,
    /// Also write the deterministic report lines to this file.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub factor: FactorArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Method under test.
    #[arg(long, value_enum, default_value_t = MethodArg::Ainv)]
    pub method: MethodArg,
    /// Projection dimension when validating the sketch.
    #[arg(long, default_value_t = 200)]
    pub jl_k: usize,
    /// Number of sampled edges to compare on.
    #[arg(long, default_value_t = 1000)]
    pub sample: usize,
    /// Also write the deterministic report lines to this file.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Graph file to benchmark.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Benchmark a generated grid instead, `ROWSxCOLS` (e.g. `100x100`).
    #[arg(long)]
    pub grid: Option<String>,
    /// Input format override; the default follows the file extension.
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
    /// Node numbering of the input; Matrix Market defaults to 1, edge lists to 0.
    #[arg(long, value_enum, default_value_t = BaseArg::Auto)]
    pub index_base: BaseArg,
    #[command(flatten)]
    pub factor: FactorArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Sampled edges for the error columns; 0 skips the oracle comparison.
    #[arg(long, default_value_t = 0)]
    pub sample: usize,
    /// Also write the deterministic report lines to this file.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

pub fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Effres(a) => commands::resist(a),
        Command::Sketch(a) => commands::sketch(a),
        Command::Reduce(a) => commands::reduce(a),
        Command::Validate(a) => commands::validate(a),
        Command::Bench(a) => commands::bench(a),
    }
}

/// Parses and runs in one call; integration tests drive the binary through
/// this without spawning a process.
pub fn run<I, T>(args: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    dispatch(&cli)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resist_defaults_parse() {
        let cli =
            Cli::try_parse_from(["effres", "effres", "--input", "g.txt", "--all-edges"]).unwrap();
        match cli.command {
            Command::Effres(a) => {
                assert!(a.query.all_edges);
                assert_eq!(a.factor.epsilon, 1e-3);
                assert_eq!(a.factor.drop_tol, 1e-3);
                assert_eq!(a.method, MethodArg::Ainv);
                assert_eq!(a.common.seed, 42);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn queries_and_all_edges_exclude_each_other() {
        let both = Cli::try_parse_from([
            "effres", "effres", "--input", "g.txt", "--queries", "q.txt", "--all-edges",
        ]);
        assert!(both.is_err());
        let neither = Cli::try_parse_from(["effres", "effres", "--input", "g.txt"]);
        assert!(neither.is_err());
    }

    #[test]
    fn index_base_accepts_bare_digits() {
        let cli = Cli::try_parse_from([
            "effres", "effres", "--input", "g.txt", "--all-edges", "--index-base", "1",
        ])
        .unwrap();
        match cli.command {
            Command::Effres(a) => assert_eq!(a.graph.index_base, BaseArg::One),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reduce_flags_parse() {
        let cli = Cli::try_parse_from([
            "effres", "reduce", "--input", "net.sp", "--blocks", "4", "--er", "exact",
            "--sample-fraction", "0.8", "--check",
        ])
        .unwrap();
        match cli.command {
            Command::Reduce(a) => {
                assert_eq!(a.blocks, Some(4));
                assert_eq!(a.er, ErArg::Exact);
                assert_eq!(a.sample_fraction, 0.8);
                assert!(a.check);
            }
            other => panic!("{other:?}"),
        }
    }
}
