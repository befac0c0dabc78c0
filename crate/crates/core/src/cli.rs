//! The `thit` command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::engine::{approx_hitting, start_distribution, HittingProfile, Order, StartKind};
use crate::error::{Error, Result};
use crate::eval::{run_benchmark, BenchmarkConfig, CellSpec};
use crate::exact::{
    brute_force_paths, exact_first_passage, exact_first_passage_matrix, exact_recursive,
    HittingMatrix, PATH_BUDGET,
};
use crate::format::{matrix_json, matrix_tsv, profile_tsv, read_start_weights, ProfileReport};
use crate::generate::{generate, GenSpec, Model};
use crate::graph::{Duplicates, Graph};
use crate::sampling::{hoeffding_walk_count, sample_return_probabilities};
use crate::shard::{write_shards, ShardedTransition};
use crate::transition::{DanglingPolicy, TransitionMatrix, TransitionOperator};

#[derive(Debug, Parser)]
#[command(name = "thit", version, about = "Truncated random-walk hitting times")]
pub struct Cli {
    /// Seed for generators, sampling and the benchmark.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Suppress log lines and timing fields.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Tsv)]
    pub format: OutputFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Tsv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineChoice {
    Mem,
    Stream,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DanglingChoice {
    SelfLoop,
    Reject,
}

impl From<DanglingChoice> for DanglingPolicy {
    fn from(d: DanglingChoice) -> Self {
        match d {
            DanglingChoice::SelfLoop => DanglingPolicy::SelfLoop,
            DanglingChoice::Reject => DanglingPolicy::Reject,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExactMethod {
    Recursive,
    FirstPassage,
    Paths,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random graph as an edge list.
    Gen(GenArgs),
    /// Split a graph's transition matrix into checksummed shards.
    Shard(ShardArgs),
    /// Approximate hitting times from a start vertex or distribution.
    Hit(HitArgs),
    /// Exact hitting times from one start or all starts.
    Exact(ExactArgs),
    /// Estimate return probabilities by sampling walks.
    SampleDiag(SampleDiagArgs),
    /// Accuracy benchmark on generated graphs.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub model: Model,
    #[arg(long)]
    pub n: usize,
    /// Edge count (SP1/SP2 only).
    #[arg(long)]
    pub edges: Option<usize>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ShardArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub shards: usize,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = DanglingChoice::SelfLoop)]
    pub dangling: DanglingChoice,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["graph", "shards"])))]
#[command(group(ArgGroup::new("origin").required(true).args(["start", "start_dist", "uniform"])))]
pub struct HitArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Sharded graph directory; always streamed.
    #[arg(long)]
    pub shards: Option<PathBuf>,
    #[arg(long)]
    pub start: Option<usize>,
    #[arg(long)]
    pub start_dist: Option<PathBuf>,
    #[arg(long)]
    pub uniform: bool,
    #[arg(long = "T")]
    pub horizon: usize,
    #[arg(long, default_value = "0")]
    pub order: Order,
    /// Backend for `--graph` inputs.
    #[arg(long, value_enum, default_value_t = EngineChoice::Mem)]
    pub engine: EngineChoice,
    #[arg(long, value_enum, default_value_t = DanglingChoice::SelfLoop)]
    pub dangling: DanglingChoice,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum)]
    pub method: ExactMethod,
    /// Single start; without it the full matrix is written.
    #[arg(long)]
    pub start: Option<usize>,
    #[arg(long = "T")]
    pub horizon: usize,
    #[arg(long, value_enum, default_value_t = DanglingChoice::SelfLoop)]
    pub dangling: DanglingChoice,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("count").required(true).args(["eps", "walks"])))]
pub struct SampleDiagArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long = "T")]
    pub horizon: usize,
    #[arg(long, requires = "rho")]
    pub eps: Option<f64>,
    #[arg(long, requires = "eps", conflicts_with = "walks")]
    pub rho: Option<f64>,
    #[arg(long)]
    pub walks: Option<u64>,
    #[arg(long, value_enum, default_value_t = DanglingChoice::SelfLoop)]
    pub dangling: DanglingChoice,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Comma-separated models, e.g. `sp1,sp2,den`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<Model>,
    /// Comma-separated vertex counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// Edge counts paired with `--sizes` (ignored for DEN).
    #[arg(long, value_delimiter = ',')]
    pub edges: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    pub instances: usize,
    #[arg(long = "T", default_value_t = 10)]
    pub horizon: usize,
    #[arg(long, default_value = "0")]
    pub order: Order,
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::validation("--threads must be at least 1"));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Gen(a) => cmd_gen(cli, a),
        Command::Shard(a) => cmd_shard(cli, a),
        Command::Hit(a) => cmd_hit(cli, a),
        Command::Exact(a) => cmd_exact(cli, a),
        Command::SampleDiag(a) => cmd_sample_diag(cli, a),
        Command::Eval(a) => cmd_eval(cli, a),
    })
}

fn log(cli: &Cli, line: impl AsRef<str>) {
    if !cli.quiet {
        eprintln!("{}", line.as_ref());
    }
}

fn require_seed(cli: &Cli, command: &str) -> Result<u64> {
    cli.seed
        .ok_or_else(|| Error::validation(format!("`{command}` requires --seed")))
}

/// Writes `text` to `path`, or to stdout when `path` is `-`.
fn emit(path: &Path, text: &str) -> Result<()> {
    if path == Path::new("-") {
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("writing stdout", e))
    } else {
        fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

fn load_matrix(path: &Path, dangling: DanglingChoice) -> Result<TransitionMatrix> {
    let graph = Graph::load_edge_list(path, Duplicates::Merge)?;
    TransitionMatrix::from_graph(&graph, dangling.into())
}

fn cmd_gen(cli: &Cli, a: &GenArgs) -> Result<()> {
    let seed = require_seed(cli, "gen")?;
    let spec = match a.model {
        Model::Den => GenSpec::dense(a.n, seed),
        model => {
            let m = a
                .edges
                .ok_or_else(|| Error::validation(format!("--edges is required for {model}")))?;
            GenSpec::new(model, a.n, m, seed)
        }
    };
    let graph = generate(&spec)?;
    let mut text = Vec::new();
    graph
        .write_to(&mut text)
        .map_err(|e| Error::io("formatting edge list", e))?;
    emit(
        &a.output,
        std::str::from_utf8(&text).expect("ascii edge list"),
    )?;
    log(
        cli,
        format!(
            "gen: {} n={} edges={}",
            a.model,
            graph.n(),
            graph.edge_count()
        ),
    );
    Ok(())
}

fn cmd_shard(cli: &Cli, a: &ShardArgs) -> Result<()> {
    let p = load_matrix(&a.graph, a.dangling)?;
    let sharded = write_shards(&p, a.shards, &a.output)?;
    log(
        cli,
        format!(
            "shard: n={} nnz={} shards={} -> {}",
            p.n(),
            p.nnz(),
            sharded.manifest().shards.len(),
            a.output.display()
        ),
    );
    Ok(())
}

fn start_kind(a: &HitArgs, n: usize) -> Result<StartKind> {
    if let Some(i) = a.start {
        if i >= n {
            return Err(Error::validation(format!(
                "start vertex {i} is out of range for a graph with {n} vertices"
            )));
        }
        Ok(StartKind::Delta(i))
    } else if let Some(path) = &a.start_dist {
        Ok(StartKind::Custom(read_start_weights(path, n)?))
    } else {
        Ok(StartKind::Uniform)
    }
}

fn run_profile<O: TransitionOperator + ?Sized>(op: &O, a: &HitArgs) -> Result<HittingProfile> {
    let start = start_distribution(op.n(), &start_kind(a, op.n())?)?;
    approx_hitting(op, start, a.horizon, a.order)
}

/// Shard count used when `--engine stream` is asked for on an edge list.
fn auto_shards(p: &TransitionMatrix) -> usize {
    p.n().clamp(1, 4)
}

fn cmd_hit(cli: &Cli, a: &HitArgs) -> Result<()> {
    let clock = Instant::now();
    let (profile, engine, passes) = if let Some(dir) = &a.shards {
        let op = ShardedTransition::open(dir)?;
        let profile = run_profile(&op, a)?;
        (profile, "stream", op.stats().passes)
    } else {
        let path = a.graph.as_ref().expect("clap enforces an input");
        let p = load_matrix(path, a.dangling)?;
        match a.engine {
            EngineChoice::Mem => {
                let profile = run_profile(&p, a)?;
                let passes = a.horizon.saturating_sub(1) as u64 + u64::from(a.order == Order::One);
                (profile, "mem", passes)
            }
            EngineChoice::Stream => {
                let scratch = tempfile::tempdir()
                    .map_err(|e| Error::io("creating scratch shard directory", e))?;
                let op = write_shards(&p, auto_shards(&p), scratch.path())?;
                drop(p);
                let profile = run_profile(&op, a)?;
                (profile, "stream", op.stats().passes)
            }
        }
    };
    let elapsed = clock.elapsed().as_secs_f64();
    let text = match cli.format {
        OutputFormat::Tsv => profile_tsv(&profile.values),
        OutputFormat::Json => {
            let mut report = ProfileReport::new(&profile, engine, passes);
            if !cli.quiet {
                report.wall_clock_seconds = Some(elapsed);
            }
            report.to_json() + "\n"
        }
    };
    emit(&a.output, &text)?;
    log(
        cli,
        format!(
            "hit: n={} T={} order={} engine={engine} passes={passes} ({elapsed:.3}s)",
            profile.values.len(),
            a.horizon,
            a.order
        ),
    );
    Ok(())
}

fn method_name(m: ExactMethod) -> &'static str {
    match m {
        ExactMethod::Recursive => "recursive",
        ExactMethod::FirstPassage => "first-passage",
        ExactMethod::Paths => "paths",
    }
}

fn exact_profile(
    p: &TransitionMatrix,
    method: ExactMethod,
    start: usize,
    horizon: usize,
) -> Result<HittingProfile> {
    match method {
        ExactMethod::Recursive => Ok(exact_recursive(p, horizon)?.profile(start, Order::Zero)),
        ExactMethod::FirstPassage => exact_first_passage(p, start, horizon),
        ExactMethod::Paths => brute_force_paths(p, start, horizon, PATH_BUDGET),
    }
}

fn cmd_exact(cli: &Cli, a: &ExactArgs) -> Result<()> {
    let p = load_matrix(&a.graph, a.dangling)?;
    let name = method_name(a.method);
    let text = if let Some(start) = a.start {
        if start >= p.n() {
            return Err(Error::validation(format!(
                "start vertex {start} is out of range for a graph with {} vertices",
                p.n()
            )));
        }
        let profile = exact_profile(&p, a.method, start, a.horizon)?;
        match cli.format {
            OutputFormat::Tsv => profile_tsv(&profile.values),
            OutputFormat::Json => {
                let engine = format!("exact-{name}");
                ProfileReport::new(&profile, &engine, 0).to_json() + "\n"
            }
        }
    } else {
        let h = match a.method {
            ExactMethod::Recursive => exact_recursive(&p, a.horizon)?,
            ExactMethod::FirstPassage => exact_first_passage_matrix(&p, a.horizon)?,
            ExactMethod::Paths => {
                let profiles = (0..p.n())
                    .map(|s| brute_force_paths(&p, s, a.horizon, PATH_BUDGET))
                    .collect::<Result<Vec<_>>>()?;
                HittingMatrix::from_profiles(&profiles)?
            }
        };
        match cli.format {
            OutputFormat::Tsv => matrix_tsv(&h),
            OutputFormat::Json => matrix_json(&h, name) + "\n",
        }
    };
    emit(&a.output, &text)?;
    log(
        cli,
        format!("exact: method={name} n={} T={}", p.n(), a.horizon),
    );
    Ok(())
}

fn cmd_sample_diag(cli: &Cli, a: &SampleDiagArgs) -> Result<()> {
    let seed = require_seed(cli, "sample-diag")?;
    let walks = match (a.walks, a.eps, a.rho) {
        (Some(l), None, None) => l,
        (None, Some(eps), Some(rho)) => hoeffding_walk_count(eps, rho)?,
        _ => return Err(Error::validation("give either --eps and --rho, or --walks")),
    };
    let p = load_matrix(&a.graph, a.dangling)?;
    let est = sample_return_probabilities(&p, a.horizon, walks, seed)?;
    if a.output == Path::new("-") {
        std::io::stdout()
            .write_all(&est.to_bytes())
            .map_err(|e| Error::io("writing stdout", e))?;
    } else {
        est.write(&a.output)?;
    }
    log(
        cli,
        format!(
            "sample-diag: n={} T={} walks={walks} seed={seed}",
            p.n(),
            a.horizon
        ),
    );
    Ok(())
}

fn cmd_eval(cli: &Cli, a: &EvalArgs) -> Result<()> {
    let seed = require_seed(cli, "eval")?;
    let needs_edges = a.models.iter().any(|&m| m != Model::Den);
    if needs_edges && a.edges.len() != a.sizes.len() {
        return Err(Error::validation(format!(
            "--edges needs one value per size ({} sizes, {} edge counts)",
            a.sizes.len(),
            a.edges.len()
        )));
    }
    let cells =
        a.models
            .iter()
            .flat_map(|&model| {
                a.sizes.iter().enumerate().map(move |(k, &n)| {
                    CellSpec::new(model, n, a.edges.get(k).copied().unwrap_or(0))
                })
            })
            .collect();
    let config = BenchmarkConfig {
        horizon: a.horizon,
        order: a.order,
        base_seed: seed,
        instances: a.instances,
        cells,
    };
    let report = run_benchmark(&config)?;
    emit(&a.output, &(report.to_json() + "\n"))?;
    if !cli.quiet {
        print!("{}", report.table());
    }
    Ok(())
}
