//! Linear-Gaussian structural equation simulator for CDAG benchmarks.
//!
//! Secondary variables follow an SEM on their own DAG `G'`, with `theta`
//! interpolating from independence (`0`) to deterministic dependence on
//! their parents (`1`). Primary variables then follow an SEM on the DAG `G`
//! of interest, each driven by its own secondary variable and optionally by
//! "misspecified" secondary parents `x_i -> y_j` for edges `i -> j` of `G`.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::scalar::Scalar;
use crate::scoring::Dataset;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub p: usize,
    pub n: usize,
    pub theta: f64,
    /// Inclusion probability of each order-respecting edge; `None` uses
    /// `2 / (p - 1)`, an expected in-degree of about one.
    pub edge_prob: Option<f64>,
    pub coef_low: f64,
    pub coef_high: f64,
    pub noise_sd: f64,
    pub misspec_prob: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(p: usize, n: usize, theta: f64, seed: u64) -> Self {
        SimConfig {
            p,
            n,
            theta,
            edge_prob: None,
            coef_low: 0.5,
            coef_high: 1.5,
            noise_sd: 1.0,
            misspec_prob: 0.0,
            seed,
        }
    }

    pub fn effective_edge_prob(&self) -> f64 {
        self.edge_prob.unwrap_or(if self.p > 1 {
            (2.0 / (self.p as f64 - 1.0)).min(1.0)
        } else {
            0.0
        })
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.p == 0 || self.p > crate::graph::MAX_PRIMARY {
            return Err(Error::input(format!("p must be in 1..=64, got {}", self.p)));
        }
        if self.n == 0 {
            return Err(Error::input("n must be positive"));
        }
        if !unit(self.theta) {
            return Err(Error::input(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        if !unit(self.misspec_prob) {
            return Err(Error::input(format!(
                "misspec_prob must lie in [0, 1], got {}",
                self.misspec_prob
            )));
        }
        if !unit(self.effective_edge_prob()) {
            return Err(Error::input("edge_prob must lie in [0, 1]"));
        }
        if !(self.coef_low > 0.0 && self.coef_low <= self.coef_high && self.coef_high.is_finite()) {
            return Err(Error::input(format!(
                "coefficient range must satisfy 0 < low <= high, got [{}, {}]",
                self.coef_low, self.coef_high
            )));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::input("noise_sd must be positive"));
        }
        Ok(())
    }
}

/// The structures a simulated dataset was drawn from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Primary DAG.
    pub g: Dag,
    /// DAG among the secondary variables.
    pub g_prime: Dag,
    /// Pairs `(i, j)` meaning an extra edge `x_i -> y_j`; each has `i -> j` in `g`.
    pub misspec: Vec<(usize, usize)>,
}

/// Random DAG: a uniform topological order, then each order-respecting pair
/// joined independently with probability `edge_prob`.
pub fn sample_dag<R: Rng + ?Sized>(p: usize, edge_prob: f64, rng: &mut R) -> Result<Dag> {
    if p == 0 {
        return Err(Error::input("sample_dag needs p >= 1"));
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    let mut parents = vec![0u64; p];
    for (pos, &j) in order.iter().enumerate() {
        for &i in &order[..pos] {
            if rng.random::<f64>() < edge_prob {
                parents[j] |= 1 << i;
            }
        }
    }
    Dag::from_parent_masks(parents)
}

fn coefficient<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> f64 {
    let magnitude = rng.random_range(cfg.coef_low..=cfg.coef_high);
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

fn noise<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Draws `G`, `G'`, the misspecified edges and an `n`-row dataset.
///
/// Secondary roots are `N(0, noise_sd^2)`; every other secondary variable is
/// `theta * sum(c * parent) + sqrt(1 - theta^2) * noise`. Each primary
/// variable is `a_j x_j + sum(b * y parent) + sum(d * misspecified x parent) + noise`
/// with `a_j > 0`; other coefficients are uniform on `±[coef_low, coef_high]`.
pub fn simulate<T: Scalar>(cfg: &SimConfig) -> Result<(Dataset<T>, GroundTruth)> {
    cfg.validate()?;
    let (p, n) = (cfg.p, cfg.n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let prob = cfg.effective_edge_prob();
    let g = sample_dag(p, prob, &mut rng)?;
    let g_prime = sample_dag(p, prob, &mut rng)?;

    let mut misspec = Vec::new();
    for (i, j) in g.edges() {
        if rng.random::<f64>() < cfg.misspec_prob {
            misspec.push((i, j));
        }
    }

    let weights = |dag: &Dag, rng: &mut ChaCha8Rng| -> Vec<Vec<(usize, f64)>> {
        (0..p)
            .map(|j| dag.parent_list(j).into_iter().map(|k| (k, coefficient(cfg, rng))).collect())
            .collect()
    };
    let c = weights(&g_prime, &mut rng);
    let b = weights(&g, &mut rng);
    let a: Vec<f64> = (0..p)
        .map(|_| rng.random_range(cfg.coef_low..=cfg.coef_high))
        .collect();
    let mut d: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p];
    for &(i, j) in &misspec {
        d[j].push((i, coefficient(cfg, &mut rng)));
    }

    let sd = cfg.noise_sd;
    let residual_scale = (1.0 - cfg.theta * cfg.theta).max(0.0).sqrt();
    let mut x = Array2::<f64>::zeros((n, p));
    for j in g_prime.topological_order().expect("sampled DAG is acyclic") {
        let root = c[j].is_empty();
        for r in 0..n {
            let e = sd * noise(&mut rng);
            x[[r, j]] = if root {
                e
            } else {
                let signal: f64 = c[j].iter().map(|&(k, w)| w * x[[r, k]]).sum();
                cfg.theta * signal + residual_scale * e
            };
        }
    }

    let mut y = Array2::<f64>::zeros((n, p));
    for j in g.topological_order().expect("sampled DAG is acyclic") {
        for r in 0..n {
            let mut v = a[j] * x[[r, j]];
            v += b[j].iter().map(|&(k, w)| w * y[[r, k]]).sum::<f64>();
            v += d[j].iter().map(|&(i, w)| w * x[[r, i]]).sum::<f64>();
            y[[r, j]] = v + sd * noise(&mut rng);
        }
    }

    let dataset = Dataset::new(y.mapv(T::of), Some(x.mapv(T::of)))?;
    Ok((dataset, GroundTruth { g, g_prime, misspec }))
}
