//! `cdag`: simulate, estimate and benchmark conditional DAG models.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cdag::eval::{run_benchmark, run_misspec_sweep};
use cdag::io::{self, Meta};
use cdag::search::estimate;
use cdag::sim::simulate;
use cdag::{
    c_separated, BenchmarkConfig, Cdag, Dataset64, Error, Estimator, GChoice, GPriorConfig, NodeRef, Query,
    Result, SearchOptions, SimConfig,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "cdag", version, about = "Structure learning for conditional DAGs", propagate_version = true)]
struct Cli {
    /// Seed for every random draw; recorded in the output metadata.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for scoring and benchmarks (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a CDAG, its secondary DAG and a dataset from the linear-Gaussian SEM.
    ///
    /// The dataset CSV has columns y1..yp,x1..xp preceded by a `#` metadata
    /// line. The truth JSON is {"g": graph, "g_prime": graph, "misspec": [[i, j], ...]}
    /// with 0-based indices; a misspec pair (i, j) is an extra edge x_i -> y_j.
    Simulate(SimulateArgs),
    /// Estimate the primary DAG from a dataset CSV and print its log score.
    ///
    /// The input needs columns y1..yp and, for the cdag and dag2 modes,
    /// x1..xp. The output is graph JSON {"p": int, "edges": [[i, j], ...]}
    /// (0-based) with extra "mode", "log_score", "method", "optimal" and
    /// "meta" fields.
    Estimate(EstimateArgs),
    /// Test c-separation of node sets in the CDAG built on a primary graph.
    ///
    /// Nodes are written v<i> (primary) or w<i> (secondary), 1-based, and
    /// sets are comma-separated; an empty string is the empty set. Prints
    /// `separated: true` or `separated: false`.
    Csep(CsepArgs),
    /// Mean structural Hamming distance over a (theta, p, n) grid.
    ///
    /// Writes CSV with columns theta,p,n,estimator,mean_shd,stderr,reps;
    /// stderr is NA when reps is 1.
    Benchmark(BenchmarkArgs),
    /// Mean structural Hamming distance across misspecification probabilities.
    ///
    /// Writes CSV with columns misspec_prob,theta,p,n,estimator,mean_shd,stderr,reps.
    Misspec(MisspecArgs),
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    /// Number of primary variables.
    #[arg(long)]
    p: usize,
    /// Number of samples.
    #[arg(long)]
    n: usize,
    /// Dependence among secondary variables, in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Probability that an edge i -> j of G also gets an edge x_i -> y_j.
    #[arg(long, default_value_t = 0.0)]
    misspec_prob: f64,
    /// Edge inclusion probability (default 2/(p-1)).
    #[arg(long)]
    edge_prob: Option<f64>,
    /// Dataset CSV path.
    #[arg(long)]
    #[serde(skip)]
    out_data: PathBuf,
    /// Ground-truth JSON path.
    #[arg(long)]
    #[serde(skip)]
    out_truth: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct EstimateArgs {
    /// Dataset CSV path.
    #[arg(long)]
    #[serde(skip)]
    data: PathBuf,
    /// Model: cdag, dag (y only) or dag2 (y and x as one DAG).
    #[arg(long, default_value = "cdag")]
    mode: Estimator,
    /// Maximum parent-set size.
    #[arg(long, default_value_t = 5)]
    max_parents: usize,
    /// g-prior scale: `n` for the sample size or a positive number.
    #[arg(long, default_value = "n")]
    g: String,
    /// Largest node count searched exactly; larger problems use hill climbing.
    #[arg(long, default_value_t = 20)]
    exact_limit: usize,
    /// Hill-climbing restarts.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Graph JSON path.
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CsepArgs {
    /// Graph JSON {"p": int, "edges": [[i, j], ...]}, or a truth file (its graph g is used).
    #[arg(long)]
    graph: PathBuf,
    /// First node set, e.g. "v1,w2".
    #[arg(long)]
    a: String,
    /// Second node set.
    #[arg(long)]
    b: String,
    /// Conditioning set (may be empty).
    #[arg(long, default_value = "")]
    c: String,
}

#[derive(Args, Debug, Serialize)]
struct BenchmarkArgs {
    /// Comma-separated theta values.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,0.99")]
    theta: Vec<f64>,
    /// Comma-separated numbers of primary variables.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15")]
    p: Vec<usize>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    n: Vec<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonBench,
}

#[derive(Args, Debug, Serialize)]
struct MisspecArgs {
    /// Dependence among secondary variables.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Number of primary variables.
    #[arg(long, default_value_t = 15)]
    p: usize,
    /// Sample size.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Comma-separated misspecification probabilities.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    probs: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonBench,
}

#[derive(Args, Debug, Serialize)]
struct CommonBench {
    /// Replicates per cell.
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Comma-separated estimators.
    #[arg(long, value_delimiter = ',', default_value = "dag,dag2,cdag")]
    estimators: Vec<Estimator>,
    /// Maximum parent-set size.
    #[arg(long, default_value_t = 5)]
    max_parents: usize,
    /// Largest node count searched exactly.
    #[arg(long, default_value_t = 20)]
    exact_limit: usize,
    /// Hill-climbing restarts.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// CSV path; stdout if omitted.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

impl CommonBench {
    fn config(&self, seed: u64) -> BenchmarkConfig {
        BenchmarkConfig {
            thetas: Vec::new(),
            ps: Vec::new(),
            ns: Vec::new(),
            estimators: self.estimators.clone(),
            replicates: self.reps,
            seed,
            prior: GPriorConfig::with_max_parents(self.max_parents),
            search: SearchOptions {
                exact_limit: self.exact_limit,
                restarts: self.restarts,
                seed,
            },
        }
    }
}

fn parse_g(s: &str) -> Result<GChoice> {
    if s.eq_ignore_ascii_case("n") {
        return Ok(GChoice::SampleSize);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::input(format!("--g expects `n` or a number, got '{s}'")))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::input(format!("--g must be positive, got {v}")));
    }
    Ok(GChoice::Fixed(v))
}

fn parse_set(s: &str) -> Result<Vec<NodeRef>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::input(format!("cannot write {}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))
}

struct Ctx {
    seed: u64,
    quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn cmd_simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<()> {
    let cfg = SimConfig {
        misspec_prob: a.misspec_prob,
        edge_prob: a.edge_prob,
        ..SimConfig::new(a.p, a.n, a.theta, ctx.seed)
    };
    let (data, truth) = simulate::<f64>(&cfg)?;
    let meta = Meta::new("simulate", Some(ctx.seed), serde_json::to_value(cfg)?);
    let mut w = create(&a.out_data)?;
    io::write_dataset(&data, Some(&meta), &mut w)?;
    w.flush()?;
    let mut w = create(&a.out_truth)?;
    io::write_json(&io::truth_json(&truth, Some(&meta)), &mut w)?;
    w.flush()?;
    ctx.note(format!(
        "wrote {} ({} x {}) and {} ({} edges)",
        a.out_data.display(),
        a.n,
        2 * a.p,
        a.out_truth.display(),
        truth.g.edge_count()
    ));
    Ok(())
}

fn cmd_estimate(ctx: &Ctx, a: &EstimateArgs) -> Result<()> {
    let data: Dataset64 = io::read_dataset(open(&a.data)?)?;
    let prior = GPriorConfig {
        g: parse_g(&a.g)?,
        max_parents: a.max_parents,
    };
    let opts = SearchOptions {
        exact_limit: a.exact_limit,
        restarts: a.restarts,
        seed: ctx.seed,
    };
    let fit = estimate(&data, a.mode, &prior, &opts)?;
    let mut config = serde_json::to_value(a)?;
    config["data"] = json!(a.data.display().to_string());
    let meta = Meta::new("estimate", Some(ctx.seed), config);
    let score = fit.search.log_score;
    let v = io::graph_json(
        &fit.graph,
        &[
            ("mode", json!(a.mode)),
            ("log_score", json!(score)),
            ("method", json!(fit.search.method)),
            ("optimal", json!(fit.search.optimal)),
        ],
        Some(&meta),
    );
    let mut w = create(&a.out)?;
    io::write_json(&v, &mut w)?;
    w.flush()?;
    println!("log score: {score}");
    ctx.note(format!("wrote {} ({} edges)", a.out.display(), fit.graph.edge_count()));
    Ok(())
}

fn cmd_csep(a: &CsepArgs) -> Result<()> {
    let g = io::read_graph(open(&a.graph)?)?;
    let cdag = Cdag::new(g);
    let q = Query::from_refs(cdag.p(), &parse_set(&a.a)?, &parse_set(&a.b)?, &parse_set(&a.c)?)?;
    println!("separated: {}", c_separated(&cdag, &q)?);
    Ok(())
}

fn emit_csv(out: &Option<PathBuf>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn cmd_benchmark(ctx: &Ctx, a: &BenchmarkArgs) -> Result<()> {
    let cfg = BenchmarkConfig {
        thetas: a.theta.clone(),
        ps: a.p.clone(),
        ns: a.n.clone(),
        ..a.common.config(ctx.seed)
    };
    ctx.note(format!(
        "benchmark: {} cells x {} replicates",
        cfg.thetas.len() * cfg.ps.len() * cfg.ns.len(),
        cfg.replicates
    ));
    let report = run_benchmark(&cfg)?;
    let meta = Meta::new("benchmark", Some(ctx.seed), serde_json::to_value(a)?);
    emit_csv(&a.common.out, |w| io::write_benchmark_csv(&report, Some(&meta), w))
}

fn cmd_misspec(ctx: &Ctx, a: &MisspecArgs) -> Result<()> {
    let cfg = a.common.config(ctx.seed);
    ctx.note(format!("misspec sweep: {} probabilities x {} replicates", a.probs.len(), cfg.replicates));
    let report = run_misspec_sweep(a.theta, a.p, a.n, &a.probs, &cfg)?;
    let meta = Meta::new("misspec", Some(ctx.seed), serde_json::to_value(a)?);
    emit_csv(&a.common.out, |w| io::write_misspec_csv(&report, Some(&meta), w))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::input("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::input(e.to_string()))?;
    }
    let ctx = Ctx {
        seed: cli.seed,
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&ctx, a),
        Command::Estimate(a) => cmd_estimate(&ctx, a),
        Command::Csep(a) => cmd_csep(a),
        Command::Benchmark(a) => cmd_benchmark(&ctx, a),
        Command::Misspec(a) => cmd_misspec(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 2 } else { 1 })
        }
    }
}
