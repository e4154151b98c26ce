//! MAP structure search over DAGs for a decomposable score.
//!
//! [`exact_map`] is the subset-lattice dynamic program: best parent sets
//! within every candidate subset, then the best sink ordering, then a
//! backtrack. [`greedy_map`] is restarted hill climbing for node counts where
//! the `2^m` tables do not fit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::scalar::Scalar;
use crate::scoring::{score_table, Dataset, Estimator, GPriorConfig, ScoreTable};

/// Largest node count [`exact_map`] accepts.
pub const MAX_EXACT_NODES: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMethod {
    ExactDp,
    Greedy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult<T> {
    pub graph: Dag,
    /// Table sum of the graph's parent sets, in node order.
    pub log_score: T,
    pub method: SearchMethod,
    pub optimal: bool,
}

/// Removes bit `j` from `mask`, shifting higher bits down.
#[inline]
fn compress(mask: u64, j: usize) -> usize {
    let low = mask & ((1u64 << j) - 1);
    (low | ((mask >> (j + 1)) << j)) as usize
}

/// Inverse of [`compress`].
#[inline]
fn expand(idx: usize, j: usize) -> u64 {
    let idx = idx as u64;
    let low = idx & ((1u64 << j) - 1);
    low | ((idx >> j) << (j + 1))
}

/// True if `(sa, a)` beats `(sb, b)`: higher score, then fewer parents, then
/// the lexicographically smaller sorted parent list.
#[inline]
fn better<T: Scalar>(sa: T, a: u64, sb: T, b: u64) -> bool {
    if sa > sb {
        return true;
    }
    if sa < sb || sa.is_nan() || sb.is_nan() {
        return false;
    }
    let (ca, cb) = (a.count_ones(), b.count_ones());
    if ca != cb {
        return ca < cb;
    }
    let diff = a ^ b;
    diff != 0 && a & (diff & diff.wrapping_neg()) != 0
}

/// Exact maximizer of the table's decomposable score over all DAGs.
pub fn exact_map<T: Scalar>(table: &ScoreTable<T>) -> Result<SearchResult<T>> {
    let m = table.node_count();
    if m > MAX_EXACT_NODES {
        return Err(Error::TooLarge(format!(
            "exact search over {m} nodes exceeds {MAX_EXACT_NODES}; use greedy_map"
        )));
    }
    if m == 0 {
        return Ok(SearchResult {
            graph: Dag::empty(0)?,
            log_score: T::zero(),
            method: SearchMethod::ExactDp,
            optimal: true,
        });
    }

    // best_parents[j][idx]: best tabulated parent set inside the subset of
    // the other nodes encoded by `idx` (node j's own bit squeezed out).
    let best_parents: Vec<(Vec<T>, Vec<u32>)> = (0..m)
        .into_par_iter()
        .map(|j| {
            let size = 1usize << (m - 1);
            let mut score = vec![T::neg_infinity(); size];
            let mut set = vec![u32::MAX; size];
            for (mask, s) in table.entries(j) {
                let idx = compress(mask, j);
                score[idx] = s;
                set[idx] = idx as u32;
            }
            for idx in 1..size {
                let mut rest = idx;
                while rest != 0 {
                    let bit = rest & rest.wrapping_neg();
                    rest ^= bit;
                    let sub = idx ^ bit;
                    if set[sub] == u32::MAX {
                        continue;
                    }
                    if set[idx] == u32::MAX
                        || better(score[sub], set[sub] as u64, score[idx], set[idx] as u64)
                    {
                        score[idx] = score[sub];
                        set[idx] = set[sub];
                    }
                }
            }
            (score, set)
        })
        .collect();

    let full = (1usize << m) - 1;
    let mut opt = vec![T::neg_infinity(); full + 1];
    let mut sink = vec![u8::MAX; full + 1];
    opt[0] = T::zero();
    for s in 1..=full {
        let mut rest = s;
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let prev = s & !(1 << j);
            let (bs, bset) = (&best_parents[j].0, &best_parents[j].1);
            let idx = compress(prev as u64, j);
            if bset[idx] == u32::MAX || sink[prev] == u8::MAX && prev != 0 {
                continue;
            }
            let cand = opt[prev] + bs[idx];
            if sink[s] == u8::MAX || cand > opt[s] {
                opt[s] = cand;
                sink[s] = j as u8;
            }
        }
    }
    if sink[full] == u8::MAX {
        return Err(Error::input("score table admits no DAG (missing empty parent sets?)"));
    }

    let mut parents = vec![0u64; m];
    let mut s = full;
    while s != 0 {
        let j = sink[s] as usize;
        let prev = s & !(1 << j);
        let idx = compress(prev as u64, j);
        parents[j] = expand(best_parents[j].1[idx] as usize, j);
        s = prev;
    }
    let graph = Dag::from_parent_masks(parents)?;
    let log_score = table
        .graph_score(&graph)
        .expect("backtracked parent sets come from the table");
    Ok(SearchResult {
        graph,
        log_score,
        method: SearchMethod::ExactDp,
        optimal: true,
    })
}

/// Descendant masks (each node included in its own) for parent masks `pa`.
fn reachability(pa: &[u64]) -> Vec<u64> {
    let m = pa.len();
    let dag = Dag::from_parent_masks(pa.to_vec()).expect("greedy search keeps the graph acyclic");
    let order = dag.topological_order().expect("acyclic");
    let mut desc = vec![0u64; m];
    for &v in order.iter().rev() {
        let mut d = 1u64 << v;
        for c in 0..m {
            if pa[c] & (1 << v) != 0 {
                d |= desc[c];
            }
        }
        desc[v] = d;
    }
    desc
}

#[derive(Clone, Copy, Debug)]
enum Move {
    Add(usize, usize),
    Delete(usize, usize),
    Reverse(usize, usize),
}

fn delta<T: Scalar>(t: &ScoreTable<T>, j: usize, from: u64, to: u64) -> Option<T> {
    let gain = t.get(j, to)? - t.get(j, from)?;
    if gain.is_nan() {
        None
    } else {
        Some(gain)
    }
}

/// Hill climbing from `start` until no single add/delete/reverse strictly
/// improves the score.
fn hill_climb<T: Scalar>(t: &ScoreTable<T>, mut pa: Vec<u64>) -> Vec<u64> {
    let m = pa.len();
    loop {
        let desc = reachability(&pa);
        let mut best: Option<(T, Move)> = None;
        let mut consider = |gain: Option<T>, mv: Move| {
            if let Some(g) = gain {
                if g > T::zero() && best.map_or(true, |(b, _)| g > b) {
                    best = Some((g, mv));
                }
            }
        };
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let bit_i = 1u64 << i;
                let bit_j = 1u64 << j;
                if pa[j] & bit_i != 0 {
                    consider(delta(t, j, pa[j], pa[j] & !bit_i), Move::Delete(i, j));
                    // Reversal is acyclic unless another path leads from i to j.
                    let other_path = (0..m).any(|c| c != j && pa[c] & bit_i != 0 && desc[c] & bit_j != 0);
                    if !other_path {
                        let g = delta(t, j, pa[j], pa[j] & !bit_i)
                            .zip(delta(t, i, pa[i], pa[i] | bit_j))
                            .map(|(a, b)| a + b);
                        consider(g, Move::Reverse(i, j));
                    }
                } else if pa[i] & bit_j == 0 && desc[j] & bit_i == 0 {
                    consider(delta(t, j, pa[j], pa[j] | bit_i), Move::Add(i, j));
                }
            }
        }
        match best {
            None => return pa,
            Some((_, Move::Add(i, j))) => pa[j] |= 1 << i,
            Some((_, Move::Delete(i, j))) => pa[j] &= !(1 << i),
            Some((_, Move::Reverse(i, j))) => {
                pa[j] &= !(1 << i);
                pa[i] |= 1 << j;
            }
        }
    }
}

/// Random acyclic start whose parent sets all have finite table scores.
fn random_start<T: Scalar>(t: &ScoreTable<T>, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let m = t.node_count();
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let prob = if m > 1 { (2.0 / (m as f64 - 1.0)).min(1.0) } else { 0.0 };
    let mut pa = vec![0u64; m];
    for (pos, &j) in order.iter().enumerate() {
        for &i in &order[..pos] {
            if rng.random::<f64>() < prob {
                let next = pa[j] | (1 << i);
                if t.get(j, next).is_some_and(|s| s.is_finite()) {
                    pa[j] = next;
                }
            }
        }
    }
    pa
}

/// Restarted hill climbing. Restart 0 starts from the empty graph, the others
/// from seeded random DAGs; the best local optimum wins, ties going to the
/// lowest restart index.
pub fn greedy_map<T: Scalar>(table: &ScoreTable<T>, restarts: usize, seed: u64) -> Result<SearchResult<T>> {
    let m = table.node_count();
    let empty = vec![0u64; m];
    if (0..m).any(|j| table.get(j, 0).is_none()) {
        return Err(Error::input("score table lacks empty parent sets"));
    }
    let runs: Vec<(T, Vec<u64>)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                empty.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                random_start(table, &mut rng)
            };
            let pa = hill_climb(table, start);
            let score = (0..m).map(|j| table.get(j, pa[j]).expect("tabulated")).fold(T::zero(), |a, b| a + b);
            (score, pa)
        })
        .collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate().skip(1) {
        if run.0 > runs[best].0 {
            best = r;
        }
    }
    let graph = Dag::from_parent_masks(runs[best].1.clone())?;
    let log_score = table.graph_score(&graph).expect("tabulated");
    Ok(SearchResult {
        graph,
        log_score,
        method: SearchMethod::Greedy,
        optimal: false,
    })
}

/// Search settings for [`estimate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Node counts up to this use [`exact_map`]; larger ones [`greedy_map`].
    pub exact_limit: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            exact_limit: 20,
            restarts: 10,
            seed: 0,
        }
    }
}

/// A primary-variable DAG estimate with the search that produced it.
#[derive(Clone, Debug)]
pub struct Estimate<T> {
    pub graph: Dag,
    pub search: SearchResult<T>,
}

/// Scores the data under `mode`, maximizes, and returns the DAG over the
/// primary variables. DAG2 searches all `2p` columns and keeps the subgraph
/// induced on the primary ones.
pub fn estimate<T: Scalar>(
    d: &Dataset<T>,
    mode: Estimator,
    cfg: &GPriorConfig,
    opts: &SearchOptions,
) -> Result<Estimate<T>> {
    let table = score_table(d, cfg, mode)?;
    let limit = opts.exact_limit.min(MAX_EXACT_NODES);
    let search = if table.node_count() <= limit {
        exact_map(&table)?
    } else {
        greedy_map(&table, opts.restarts, opts.seed)?
    };
    let graph = search.graph.induced_prefix(d.p());
    Ok(Estimate { graph, search })
}
