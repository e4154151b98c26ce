//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

use cdag::separation::IndependenceModel;
use cdag::{Cdag, Dag, NodeSet, Query};
use rand::Rng;

/// Random DAG over `p` nodes: random order, each forward pair with probability `prob`.
pub fn random_dag<R: Rng>(p: usize, prob: f64, rng: &mut R) -> Dag {
    let mut order: Vec<usize> = (0..p).collect();
    for i in (1..p).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut edges = Vec::new();
    for a in 0..p {
        for b in (a + 1)..p {
            if rng.random::<f64>() < prob {
                edges.push((order[a], order[b]));
            }
        }
    }
    Dag::from_edges(p, &edges).unwrap()
}

/// Depth-first cycle check on an explicit edge list.
pub fn has_cycle(p: usize, edges: &[(usize, usize)]) -> bool {
    fn visit(u: usize, adj: &[Vec<usize>], state: &mut [u8]) -> bool {
        state[u] = 1;
        for &v in &adj[u] {
            if state[v] == 1 || (state[v] == 0 && visit(v, adj, state)) {
                return true;
            }
        }
        state[u] = 2;
        false
    }
    let mut adj = vec![Vec::new(); p];
    for &(a, b) in edges {
        adj[a].push(b);
    }
    let mut state = vec![0u8; p];
    (0..p).any(|u| state[u] == 0 && visit(u, &adj, &mut state))
}

/// Every labelled DAG on `p` nodes, by filtering all subsets of ordered pairs.
pub fn all_dags(p: usize) -> Vec<Dag> {
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|a| (0..p).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u64..(1 << pairs.len()) {
        let edges: Vec<(usize, usize)> = (0..pairs.len())
            .filter(|&k| mask >> k & 1 == 1)
            .map(|k| pairs[k])
            .collect();
        if !has_cycle(p, &edges) {
            out.push(Dag::from_edges(p, &edges).unwrap());
        }
    }
    out
}

/// d-separation by active-trail reachability on a digraph given by parent
/// lists. Independent of moralization.
pub fn active_trail_separated(parents: &[Vec<usize>], a: &[usize], b: &[usize], c: &[usize]) -> bool {
    let n = parents.len();
    let mut children = vec![Vec::new(); n];
    for (v, ps) in parents.iter().enumerate() {
        for &u in ps {
            children[u].push(v);
        }
    }
    let in_c: Vec<bool> = (0..n).map(|v| c.contains(&v)).collect();
    let mut anc_c = in_c.clone();
    let mut stack: Vec<usize> = c.to_vec();
    while let Some(v) = stack.pop() {
        for &u in &parents[v] {
            if !anc_c[u] {
                anc_c[u] = true;
                stack.push(u);
            }
        }
    }
    // Direction: true = arrived from a child (moving up), false = from a parent.
    let mut seen = vec![[false; 2]; n];
    let mut reach = vec![false; n];
    let mut queue: Vec<(usize, bool)> = a.iter().map(|&v| (v, true)).collect();
    while let Some((v, up)) = queue.pop() {
        if std::mem::replace(&mut seen[v][up as usize], true) {
            continue;
        }
        if !in_c[v] {
            reach[v] = true;
        }
        if up {
            if !in_c[v] {
                queue.extend(parents[v].iter().map(|&u| (u, true)));
                queue.extend(children[v].iter().map(|&u| (u, false)));
            }
        } else {
            if !in_c[v] {
                queue.extend(children[v].iter().map(|&u| (u, false)));
            }
            if anc_c[v] {
                queue.extend(parents[v].iter().map(|&u| (u, true)));
            }
        }
    }
    !b.iter().any(|&v| reach[v])
}

/// Parent lists of the CDAG's extended graph built by hand: ids `0..p` are
/// primary, `p..2p` secondary, `2p` the common source of all secondaries.
pub fn extended_parents(g: &Dag) -> Vec<Vec<usize>> {
    let p = g.p();
    let mut parents = vec![Vec::new(); 2 * p + 1];
    for j in 0..p {
        parents[j] = g.parent_list(j);
        parents[j].push(p + j);
        parents[p + j].push(2 * p);
    }
    parents
}

pub fn ids(s: &NodeSet) -> Vec<usize> {
    s.iter().collect()
}

/// c-separation through the active-trail oracle on the hand-built extended graph.
pub fn oracle_c_separated(g: &Dag, q: &Query) -> bool {
    active_trail_separated(&extended_parents(g), &ids(&q.a), &ids(&q.b), &ids(&q.c))
}

fn subsets(s: &NodeSet) -> Vec<NodeSet> {
    let items = ids(s);
    (0..1u32 << items.len())
        .map(|m| (0..items.len()).filter(|&k| m >> k & 1 == 1).map(|k| items[k]).collect())
        .collect()
}

/// Counts violations of triviality, symmetry, decomposition, weak union and
/// contraction in `model`, whose scope must be every node of `g`.
pub fn semi_graphoid_violations(g: &Cdag, model: &IndependenceModel) -> usize {
    let scope = model.scope();
    let mut bad = 0;
    for q in model.relations() {
        if q.a.is_empty() || q.b.is_empty() {
            bad += 1;
        }
        for (a, b, c) in [(q.a, q.b, q.c), (q.b, q.a, q.c)] {
            if !model.holds(b, a, c) {
                bad += 1;
            }
            for d in subsets(&b) {
                let rest = b.difference(&d);
                if !model.holds(a, rest, c) {
                    bad += 1;
                }
                if !rest.is_empty() && !model.holds(a, rest, c.union(&d)) {
                    bad += 1;
                }
            }
            let free = scope.difference(&a.union(&b).union(&c));
            for d in subsets(&free) {
                if d.is_empty() {
                    continue;
                }
                if model.holds(a, d, b.union(&c)) && !model.holds(a, b.union(&d), c) {
                    bad += 1;
                }
            }
        }
    }
    let all = scope;
    for a in subsets(&all) {
        if a.is_empty() {
            continue;
        }
        let c = all.difference(&a);
        if !model.holds(a, NodeSet::empty(), c) {
            bad += 1;
        }
    }
    let _ = g;
    bad
}

/// Dense symmetric positive-definite solve and log-determinant via Cholesky.
pub fn cholesky(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                assert!(s > 0.0, "matrix not positive definite");
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    l
}

pub fn chol_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut z = vec![0.0; n];
    for i in 0..n {
        z[i] = (b[i] - (0..i).map(|k| l[i][k] * z[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (z[i] - ((i + 1)..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    x
}

pub fn chol_logdet(l: &[Vec<f64>]) -> f64 {
    2.0 * (0..l.len()).map(|i| l[i][i].ln()).sum::<f64>()
}

fn gram(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    cols.iter()
        .map(|u| cols.iter().map(|v| u.iter().zip(v).map(|(a, b)| a * b).sum()).collect())
        .collect()
}

fn xt_y(cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    cols.iter().map(|u| u.iter().zip(y).map(|(a, b)| a * b).sum()).collect()
}

/// A local regression problem in raw form: the response, the fixed columns
/// (intercept first) and the raw parent columns.
#[derive(Clone, Debug)]
pub struct Instance {
    pub y: Vec<f64>,
    pub fixed: Vec<Vec<f64>>,
    pub parents: Vec<Vec<f64>>,
    pub g: f64,
}

impl Instance {
    /// Parent columns with the fixed columns' span projected out, by normal equations.
    pub fn residualized_parents(&self) -> Vec<Vec<f64>> {
        let l = cholesky(&gram(&self.fixed));
        self.parents
            .iter()
            .map(|col| {
                let coef = chol_solve(&l, &xt_y(&self.fixed, col));
                col.iter()
                    .enumerate()
                    .map(|(r, v)| v - self.fixed.iter().zip(&coef).map(|(f, c)| f[r] * c).sum::<f64>())
                    .collect()
            })
            .collect()
    }

    /// `ln ∫ N(y; Z β, σ² I) N(β_π; 0, g σ² (M_π'M_π)^{-1}) dβ` at fixed σ, with
    /// the fixed coefficients under a flat prior, as a Gaussian integral over
    /// the whole coefficient vector.
    pub fn log_integrated_over_beta(&self, sigma: f64) -> f64 {
        let m_pi = self.residualized_parents();
        let q = self.fixed.len();
        let k = m_pi.len();
        let n = self.y.len() as f64;
        let z: Vec<Vec<f64>> = self.fixed.iter().chain(m_pi.iter()).cloned().collect();
        let s2 = sigma * sigma;
        let zz = gram(&z);
        let pp = gram(&m_pi);
        let d = q + k;
        let mut prec = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..d {
                prec[i][j] = zz[i][j] / s2;
                if i >= q && j >= q {
                    prec[i][j] += pp[i - q][j - q] / (self.g * s2);
                }
            }
        }
        let lin: Vec<f64> = xt_y(&z, &self.y).iter().map(|v| v / s2).collect();
        let yy: f64 = self.y.iter().map(|v| v * v).sum();
        let l = cholesky(&prec);
        let mean = chol_solve(&l, &lin);
        let quad: f64 = lin.iter().zip(&mean).map(|(a, b)| a * b).sum();
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        let log_prior_norm = if k > 0 {
            let lp = cholesky(&pp);
            -0.5 * k as f64 * ln2pi - 0.5 * (k as f64 * (self.g * s2).ln() - chol_logdet(&lp))
        } else {
            0.0
        };
        -0.5 * n * (ln2pi + s2.ln()) - yy / (2.0 * s2) + 0.5 * quad + 0.5 * d as f64 * ln2pi
            - 0.5 * chol_logdet(&l)
            + log_prior_norm
    }

    /// Log marginal likelihood by numerical integration over `ln σ` of the
    /// β-integrated likelihood times the `1/σ` prior.
    pub fn log_marginal_quadrature(&self) -> f64 {
        let f = |t: f64| self.log_integrated_over_beta(t.exp());
        let t0 = argmax_unimodal(&f, -20.0, 20.0);
        let peak = f(t0);
        let h = |t: f64| (f(t) - peak).exp();
        let width = 12.0;
        let integral = adaptive_simpson(&h, t0 - width, t0 + width, 1e-11, 20);
        peak + integral.ln()
    }

    /// Same as [`log_marginal_quadrature`] for a single parent, but with the
    /// parent coefficient integrated numerically too (σ outer, β_π inner).
    pub fn log_marginal_nested(&self) -> f64 {
        assert_eq!(self.parents.len(), 1);
        let m = &self.residualized_parents()[0];
        let mm: f64 = m.iter().map(|v| v * v).sum();
        let reduced = Instance {
            y: vec![],
            fixed: self.fixed.clone(),
            parents: vec![],
            g: self.g,
        };
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        // Integrating the fixed coefficients under a flat prior leaves the
        // profile in β_π of the residual after the fixed columns.
        let log_inner = |sigma: f64, beta: f64| -> f64 {
            let y_shift: Vec<f64> = self.y.iter().zip(m).map(|(a, b)| a - beta * b).collect();
            let inst = Instance {
                y: y_shift,
                ..reduced.clone()
            };
            let prior_var = self.g * sigma * sigma / mm;
            inst.log_integrated_over_beta(sigma) - 0.5 * (ln2pi + prior_var.ln()) - beta * beta / (2.0 * prior_var)
        };
        let my: f64 = m.iter().zip(&self.y).map(|(a, b)| a * b).sum();
        let beta_hat = self.g / (self.g + 1.0) * my / mm;
        let log_sigma_term = |t: f64| {
            let sigma = t.exp();
            let sd = sigma / mm.sqrt() * (self.g / (self.g + 1.0)).sqrt();
            let peak = log_inner(sigma, beta_hat);
            let inner = adaptive_simpson(
                &|b: f64| (log_inner(sigma, b) - peak).exp(),
                beta_hat - 12.0 * sd,
                beta_hat + 12.0 * sd,
                1e-10,
                20,
            );
            peak + inner.ln()
        };
        let t0 = argmax_unimodal(&log_sigma_term, -20.0, 20.0);
        let peak = log_sigma_term(t0);
        let outer = adaptive_simpson(&|t: f64| (log_sigma_term(t) - peak).exp(), t0 - 12.0, t0 + 12.0, 1e-10, 20);
        peak + outer.ln()
    }
}

/// Golden-section search for the maximizer of a unimodal function.
pub fn argmax_unimodal(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-9 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, depth)
}
