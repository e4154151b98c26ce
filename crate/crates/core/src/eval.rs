//! Structural Hamming distance and the simulation benchmark harness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::scoring::{Estimator, GPriorConfig};
use crate::search::{estimate, SearchOptions};
use crate::sim::{simulate, SimConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShdReport {
    pub shd: usize,
    pub missing: usize,
    pub extra: usize,
    pub reversed: usize,
}

/// Structural Hamming distance from `estimate` to `truth`. Each unordered
/// pair costs at most one: a reversed edge counts once.
pub fn shd(estimate: &Dag, truth: &Dag) -> Result<ShdReport> {
    if estimate.p() != truth.p() {
        return Err(Error::input(format!(
            "graphs have different node counts ({} vs {})",
            estimate.p(),
            truth.p()
        )));
    }
    let p = truth.p();
    let mut r = ShdReport::default();
    for i in 0..p {
        for j in (i + 1)..p {
            let t = (truth.has_edge(i, j), truth.has_edge(j, i));
            let e = (estimate.has_edge(i, j), estimate.has_edge(j, i));
            match (t, e) {
                (a, b) if a == b => {}
                ((false, false), _) => r.extra += 1,
                (_, (false, false)) => r.missing += 1,
                _ => r.reversed += 1,
            }
        }
    }
    r.shd = r.missing + r.extra + r.reversed;
    Ok(r)
}

/// Mean and standard error (`sd / sqrt(k)`); the error is `None` below two values.
pub fn mean_stderr(values: &[f64]) -> (f64, Option<f64>) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, None);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k as f64 - 1.0);
    (mean, Some((var / k as f64).sqrt()))
}

/// Simulation and estimation settings shared by every benchmark cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub thetas: Vec<f64>,
    pub ps: Vec<usize>,
    pub ns: Vec<usize>,
    pub estimators: Vec<Estimator>,
    pub replicates: usize,
    pub seed: u64,
    pub prior: GPriorConfig,
    pub search: SearchOptions,
}

impl BenchmarkConfig {
    /// The θ ∈ {0, 0.5, 0.99}, p ∈ {5, 10, 15}, n ∈ {10, 100, 1000} grid
    /// with all three estimators and 10 replicates.
    pub fn table_grid(seed: u64) -> Self {
        BenchmarkConfig {
            thetas: vec![0.0, 0.5, 0.99],
            ps: vec![5, 10, 15],
            ns: vec![10, 100, 1000],
            estimators: Estimator::ALL.to_vec(),
            replicates: 10,
            seed,
            prior: GPriorConfig::default(),
            search: SearchOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub misspec_prob: f64,
    pub theta: f64,
    pub p: usize,
    pub n: usize,
    pub estimator: Estimator,
    pub mean_shd: f64,
    pub stderr: Option<f64>,
    pub reps: usize,
    /// Per-replicate distances, in replicate order.
    pub shds: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkReport {
    pub fn row(&self, theta: f64, p: usize, n: usize, est: Estimator) -> Option<&BenchmarkRow> {
        self.rows
            .iter()
            .find(|r| r.theta == theta && r.p == p && r.n == n && r.estimator == est)
    }

    pub fn misspec_row(&self, prob: f64, est: Estimator) -> Option<&BenchmarkRow> {
        self.rows
            .iter()
            .find(|r| r.misspec_prob == prob && r.estimator == est)
    }
}

/// 64-bit mix used to derive independent per-replicate seeds.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one replicate. It depends on the regime but not on the
/// misspecification probability, so sweeps share their graphs and weights.
pub fn replicate_seed(seed: u64, theta: f64, p: usize, n: usize, rep: usize) -> u64 {
    [theta.to_bits(), p as u64, n as u64, rep as u64]
        .iter()
        .fold(splitmix(seed), |acc, &v| splitmix(acc ^ v))
}

struct Cell {
    misspec_prob: f64,
    theta: f64,
    p: usize,
    n: usize,
}

fn run_cells(cells: &[Cell], cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if cfg.replicates == 0 {
        return Err(Error::input("at least one replicate is required"));
    }
    if cfg.estimators.is_empty() {
        return Err(Error::input("no estimators selected"));
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replicates).map(move |r| (c, r)))
        .collect();
    let results: Vec<Result<Vec<usize>>> = jobs
        .par_iter()
        .map(|&(c, rep)| {
            let cell = &cells[c];
            let sim = SimConfig {
                misspec_prob: cell.misspec_prob,
                ..SimConfig::new(cell.p, cell.n, cell.theta, replicate_seed(cfg.seed, cell.theta, cell.p, cell.n, rep))
            };
            let context = |e: Error| {
                Error::numeric(format!(
                    "cell theta={} p={} n={} misspec={} replicate {rep}: {e}",
                    cell.theta, cell.p, cell.n, cell.misspec_prob
                ))
            };
            let (data, truth) = simulate::<f64>(&sim).map_err(context)?;
            cfg.estimators
                .iter()
                .map(|&est| {
                    let opts = SearchOptions {
                        seed: sim.seed,
                        ..cfg.search
                    };
                    let fit = estimate(&data, est, &cfg.prior, &opts).map_err(context)?;
                    Ok(shd(&fit.graph, &truth.g)?.shd)
                })
                .collect()
        })
        .collect();

    let mut per_job = results.into_iter();
    let mut rows = Vec::new();
    for cell in cells {
        let runs: Vec<Vec<usize>> = per_job.by_ref().take(cfg.replicates).collect::<Result<_>>()?;
        for (e, &estimator) in cfg.estimators.iter().enumerate() {
            let shds: Vec<usize> = runs.iter().map(|r| r[e]).collect();
            let values: Vec<f64> = shds.iter().map(|&s| s as f64).collect();
            let (mean_shd, stderr) = mean_stderr(&values);
            rows.push(BenchmarkRow {
                misspec_prob: cell.misspec_prob,
                theta: cell.theta,
                p: cell.p,
                n: cell.n,
                estimator,
                mean_shd,
                stderr,
                reps: cfg.replicates,
                shds,
            });
        }
    }
    Ok(BenchmarkReport { rows })
}

/// Simulates every (θ, p, n) cell `replicates` times and records the SHD of
/// each estimator against the true primary DAG.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    for &p in &cfg.ps {
        if cfg.estimators.iter().any(|e| *e != Estimator::Dag2) && p > crate::search::MAX_EXACT_NODES {
            return Err(Error::input(format!("p = {p} is beyond exact search")));
        }
    }
    let mut cells = Vec::new();
    for &theta in &cfg.thetas {
        for &p in &cfg.ps {
            for &n in &cfg.ns {
                cells.push(Cell {
                    misspec_prob: 0.0,
                    theta,
                    p,
                    n,
                });
            }
        }
    }
    run_cells(&cells, cfg)
}

/// Benchmark at a single regime across misspecification probabilities.
pub fn run_misspec_sweep(
    theta: f64,
    p: usize,
    n: usize,
    misspec_probs: &[f64],
    cfg: &BenchmarkConfig,
) -> Result<BenchmarkReport> {
    let cells: Vec<Cell> = misspec_probs
        .iter()
        .map(|&misspec_prob| Cell {
            misspec_prob,
            theta,
            p,
            n,
        })
        .collect();
    run_cells(&cells, cfg)
}
