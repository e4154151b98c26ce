//! Closed-form Bayesian local scores for linear-Gaussian models.
//!
//! Each child column `y_j` is regressed on a block `M0` of always-included
//! columns (the intercept, plus the paired secondary column `x_j` in CDAG
//! mode) and a candidate parent block `Y_π`. The parent block is residualized
//! against `M0` so the two parameter blocks are orthogonal; `M0` and the noise
//! scale get the reference prior `p(β0, σ) ∝ 1/σ`, and the parent
//! coefficients get Zellner's g-prior `N(0, g σ² (M_πᵀ M_π)⁻¹)`. Integrating
//! everything out gives
//!
//! ```text
//! p(y | π) = ½ Γ((n−q)/2) π^{−(n−q)/2} |M0ᵀM0|^{−1/2} (1+g)^{−|π|/2} b^{−(n−q)/2}
//! b        = yᵀ (I − P0 − g/(g+1) Pπ) y
//! ```
//!
//! with `q` the column count of `M0`. Parent sets carry the multiplicity
//! prior `p(π) ∝ C(p, |π|)⁻¹`.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{mask_to_vec, Dag};
use crate::linalg::{CenteredGram, OrthoBasis};
use crate::scalar::{ln_gamma, Scalar};

/// `n` observations of `p` primary columns `y` and, optionally, `p` secondary
/// columns `x`; column `i` of `x` is the known cause of column `i` of `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    y: Array2<T>,
    x: Option<Array2<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(y: Array2<T>, x: Option<Array2<T>>) -> Result<Self> {
        if let Some(x) = &x {
            if x.dim() != y.dim() {
                return Err(Error::input(format!(
                    "secondary matrix is {:?} but primary is {:?}",
                    x.dim(),
                    y.dim()
                )));
            }
        }
        if y.ncols() > crate::graph::MAX_PRIMARY {
            return Err(Error::input(format!("{} primary columns exceed the supported 64", y.ncols())));
        }
        let finite = |m: &Array2<T>| m.iter().all(|v| v.is_finite());
        if !finite(&y) || !x.as_ref().map_or(true, finite) {
            return Err(Error::input("dataset contains missing or non-finite values"));
        }
        Ok(Dataset { y, x })
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn p(&self) -> usize {
        self.y.ncols()
    }

    pub fn y(&self) -> &Array2<T> {
        &self.y
    }

    pub fn x(&self) -> Option<&Array2<T>> {
        self.x.as_ref()
    }

    pub fn has_secondary(&self) -> bool {
        self.x.is_some()
    }

    /// Columns `[y_1..y_p, x_1..x_p]`, or just the `y` columns without `x`.
    pub fn full_columns(&self) -> Array2<T> {
        match &self.x {
            Some(x) => ndarray::concatenate(ndarray::Axis(1), &[self.y.view(), x.view()])
                .expect("shapes checked on construction"),
            None => self.y.clone(),
        }
    }

    /// Column `c` of the universe a mode scores over.
    fn universe_column(&self, mode: Estimator, c: usize) -> Result<ArrayView1<'_, T>> {
        let p = self.p();
        match mode {
            Estimator::Cdag | Estimator::Dag => {
                if c >= p {
                    return Err(Error::input(format!("column {c} out of range for p = {p}")));
                }
                Ok(self.y.column(c))
            }
            Estimator::Dag2 => {
                let x = self.require_x(mode)?;
                if c < p {
                    Ok(self.y.column(c))
                } else if c < 2 * p {
                    Ok(x.column(c - p))
                } else {
                    Err(Error::input(format!("column {c} out of range for 2p = {}", 2 * p)))
                }
            }
        }
    }

    fn require_x(&self, mode: Estimator) -> Result<&Array2<T>> {
        self.x
            .as_ref()
            .ok_or_else(|| Error::input(format!("{mode} mode needs secondary data")))
    }
}

/// Which estimator a local model or score table belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Primary DAG with each `y_j` always adjusted for its own `x_j`.
    Cdag,
    /// Primary DAG from the `y` columns alone.
    Dag,
    /// Unconstrained DAG over all `2p` columns, restricted afterwards.
    Dag2,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Dag, Estimator::Dag2, Estimator::Cdag];

    /// Number of columns in the always-included block `M0`.
    pub fn fixed_columns(self) -> usize {
        match self {
            Estimator::Cdag => 2,
            Estimator::Dag | Estimator::Dag2 => 1,
        }
    }

    /// Number of nodes the search runs over for `p` primary variables.
    pub fn universe(self, p: usize) -> usize {
        match self {
            Estimator::Dag2 => 2 * p,
            _ => p,
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Estimator::Cdag => "cdag",
            Estimator::Dag => "dag",
            Estimator::Dag2 => "dag2",
        })
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cdag" => Ok(Estimator::Cdag),
            "dag" => Ok(Estimator::Dag),
            "dag2" => Ok(Estimator::Dag2),
            other => Err(Error::input(format!("unknown estimator '{other}' (cdag|dag|dag2)"))),
        }
    }
}

/// A child column and a candidate parent set within a mode's column universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalModel {
    pub child: usize,
    pub parents: Vec<usize>,
    pub mode: Estimator,
}

impl LocalModel {
    pub fn new(child: usize, parents: &[usize], mode: Estimator) -> Result<Self> {
        let mut parents = parents.to_vec();
        parents.sort_unstable();
        parents.dedup();
        if parents.contains(&child) {
            return Err(Error::input(format!("child {child} listed among its own parents")));
        }
        Ok(LocalModel {
            child,
            parents,
            mode,
        })
    }
}

/// The g-prior scale: the sample size (unit-information prior) or a constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GChoice {
    SampleSize,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GPriorConfig {
    pub g: GChoice,
    pub max_parents: usize,
}

impl Default for GPriorConfig {
    fn default() -> Self {
        GPriorConfig {
            g: GChoice::SampleSize,
            max_parents: 5,
        }
    }
}

impl GPriorConfig {
    pub fn with_max_parents(max_parents: usize) -> Self {
        GPriorConfig {
            max_parents,
            ..Self::default()
        }
    }

    pub fn g_for<T: Scalar>(&self, n: usize) -> Result<T> {
        let g = match self.g {
            GChoice::SampleSize => n as f64,
            GChoice::Fixed(g) => g,
        };
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::input(format!("g must be a positive finite constant, got {g}")));
        }
        Ok(T::of(g))
    }
}

/// Builds `M0` and the parent block residualized against `M0`.
pub fn design_matrices<T: Scalar>(d: &Dataset<T>, m: &LocalModel) -> Result<(Array2<T>, Array2<T>)> {
    let (m0, basis) = fixed_block(d, m)?;
    let n = d.n();
    let mut m_pi = Array2::zeros((n, m.parents.len()));
    for (k, &c) in m.parents.iter().enumerate() {
        let col: Vec<T> = d.universe_column(m.mode, c)?.to_vec();
        let r = basis.residual(&col);
        m_pi.column_mut(k).assign(&ArrayView1::from(&r));
    }
    Ok((m0, m_pi))
}

fn fixed_block<T: Scalar>(d: &Dataset<T>, m: &LocalModel) -> Result<(Array2<T>, OrthoBasis<T>)> {
    let n = d.n();
    let universe = m.mode.universe(d.p());
    if m.child >= universe {
        return Err(Error::input(format!("child {} out of range", m.child)));
    }
    if let Some(&bad) = m.parents.iter().find(|&&c| c >= universe) {
        return Err(Error::input(format!("parent {bad} out of range")));
    }
    let q = m.mode.fixed_columns();
    let mut m0 = Array2::ones((n, q));
    if m.mode == Estimator::Cdag {
        let x = d.require_x(m.mode)?;
        m0.column_mut(1).assign(&x.column(m.child));
    }
    let basis = OrthoBasis::build(m0.view()).map_err(|_| {
        Error::numeric(format!(
            "fixed design for child {} is rank deficient (is its secondary column constant?)",
            m.child
        ))
    })?;
    Ok((m0, basis))
}

/// `ln p(y_j | π)` under the orthogonalized g-prior model, by direct
/// projection of the design matrices.
pub fn log_marginal_likelihood<T: Scalar>(
    d: &Dataset<T>,
    m: &LocalModel,
    cfg: &GPriorConfig,
) -> Result<T> {
    let n = d.n();
    let q = m.mode.fixed_columns();
    if n <= q + m.parents.len() {
        return Err(Error::input(format!(
            "n = {n} leaves no residual degrees of freedom for {} fixed and {} parent columns",
            q,
            m.parents.len()
        )));
    }
    let g: T = cfg.g_for(n)?;
    let (m0, m_pi) = design_matrices(d, m)?;
    let basis0 = OrthoBasis::build(m0.view()).map_err(|_| Error::numeric("rank deficient fixed design"))?;
    let basis_pi = OrthoBasis::build(m_pi.view()).map_err(|_| Error::Collinear {
        child: m.child,
        parents: m.parents.clone(),
    })?;
    let y: Vec<T> = d.universe_column(m.mode, m.child)?.to_vec();
    let r0 = basis0.residual(&y);
    let rss0 = crate::linalg::dot(&r0, &r0);
    let explained = basis_pi.projected_norm_sq(&r0);
    let b = rss0 - g / (g + T::one()) * explained;
    closed_form(n, q, m.parents.len(), basis0.log_det_gram(), g, b)
        .map_err(|e| annotate(e, m.child, &m.parents))
}

fn annotate(e: Error, child: usize, parents: &[usize]) -> Error {
    match e {
        Error::Numeric(msg) => Error::numeric(format!("child {child}, parents {parents:?}: {msg}")),
        other => other,
    }
}

/// Log of the closed-form marginal likelihood given its sufficient quantities.
fn closed_form<T: Scalar>(n: usize, q: usize, k: usize, log_det_m0: T, g: T, b: T) -> Result<T> {
    if !(b > T::zero()) || !b.is_finite() {
        return Err(Error::numeric(format!("non-positive residual quadratic form b = {b}")));
    }
    let dof = T::of_usize(n - q) * T::half();
    let value = -T::LN_2() + ln_gamma(dof) - dof * T::PI().ln() - T::half() * log_det_m0
        - T::half() * T::of_usize(k) * (T::one() + g).ln()
        - dof * b.ln();
    Ok(value)
}

/// `−ln C(p, k)`: the unnormalized log multiplicity prior of a parent set of size `k`.
pub fn log_parent_prior<T: Scalar>(p: usize, pi_size: usize) -> T {
    assert!(pi_size <= p, "parent set larger than the variable count");
    let k = pi_size.min(p - pi_size);
    let mut acc = 0.0f64;
    for i in 0..k {
        acc += ((p - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    T::of(-acc)
}

/// `ln p(y_j | π_h) − ln p(y_j | π_g)`.
pub fn log_bayes_factor<T: Scalar>(
    d: &Dataset<T>,
    mode: Estimator,
    child: usize,
    pi_h: &[usize],
    pi_g: &[usize],
    cfg: &GPriorConfig,
) -> Result<T> {
    let h = log_marginal_likelihood(d, &LocalModel::new(child, pi_h, mode)?, cfg)?;
    let g = log_marginal_likelihood(d, &LocalModel::new(child, pi_g, mode)?, cfg)?;
    Ok(h - g)
}

/// Log local scores `ln p(y_j | π) + ln p(π)` for every child and every
/// candidate parent set up to the size cap. Parent sets are `u64` masks over
/// the mode's column universe.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable<T> {
    nodes: usize,
    max_parents: usize,
    scores: Vec<HashMap<u64, T>>,
}

impl<T: Scalar> ScoreTable<T> {
    /// An empty table; callers fill it with [`ScoreTable::insert`].
    pub fn new(nodes: usize, max_parents: usize) -> Result<Self> {
        if nodes > 64 {
            return Err(Error::input(format!("{nodes} nodes exceed the 64-node table limit")));
        }
        Ok(ScoreTable {
            nodes,
            max_parents,
            scores: vec![HashMap::new(); nodes],
        })
    }

    /// Fills every parent set of size `<= max_parents` from `f(child, mask)`.
    pub fn from_fn(nodes: usize, max_parents: usize, mut f: impl FnMut(usize, u64) -> T) -> Result<Self> {
        let mut t = Self::new(nodes, max_parents)?;
        for j in 0..nodes {
            let cands: Vec<usize> = (0..nodes).filter(|&c| c != j).collect();
            for mask in subsets_up_to(&cands, max_parents) {
                t.scores[j].insert(mask, f(j, mask));
            }
        }
        Ok(t)
    }

    pub fn insert(&mut self, child: usize, parents: u64, score: T) {
        assert!(parents & (1 << child) == 0, "child among its own parents");
        self.scores[child].insert(parents, score);
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn max_parents(&self) -> usize {
        self.max_parents
    }

    pub fn get(&self, child: usize, parents: u64) -> Option<T> {
        self.scores.get(child)?.get(&parents).copied()
    }

    pub fn len(&self, child: usize) -> usize {
        self.scores[child].len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.iter().all(|m| m.is_empty())
    }

    /// `(mask, score)` pairs of one child in ascending mask order.
    pub fn entries(&self, child: usize) -> Vec<(u64, T)> {
        let mut v: Vec<_> = self.scores[child].iter().map(|(&m, &s)| (m, s)).collect();
        v.sort_unstable_by_key(|e| e.0);
        v
    }

    /// Sum of the local scores of `dag`'s parent sets, summed in node order;
    /// `None` if some parent set is not tabulated.
    pub fn graph_score(&self, dag: &Dag) -> Option<T> {
        if dag.p() != self.nodes {
            return None;
        }
        let mut total = T::zero();
        for j in 0..self.nodes {
            total = total + self.get(j, dag.parents(j))?;
        }
        Some(total)
    }

    /// Debug dump `{"child": {"[parents]": score}}`; `-inf` entries become `null`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut outer = serde_json::Map::new();
        for j in 0..self.nodes {
            let mut inner = serde_json::Map::new();
            for (mask, s) in self.entries(j) {
                let key = serde_json::to_string(&mask_to_vec(mask)).expect("list of ints");
                let v = s.to_f64().filter(|v| v.is_finite());
                inner.insert(key, v.map_or(serde_json::Value::Null, serde_json::Value::from));
            }
            outer.insert(j.to_string(), serde_json::Value::Object(inner));
        }
        serde_json::Value::Object(outer)
    }
}

/// Masks of all subsets of `cands` with at most `cap` elements, ordered by
/// size and then lexicographically.
pub fn subsets_up_to(cands: &[usize], cap: usize) -> Vec<u64> {
    let mut out = vec![0u64];
    let mut idx: Vec<usize> = Vec::new();
    for k in 1..=cap.min(cands.len()) {
        idx.clear();
        idx.extend(0..k);
        loop {
            out.push(idx.iter().fold(0u64, |m, &i| m | (1 << cands[i])));
            // advance to the next k-combination
            let mut pos = k;
            while pos > 0 && idx[pos - 1] == cands.len() - k + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            for t in pos..k {
                idx[t] = idx[t - 1] + 1;
            }
        }
    }
    out
}

/// Tabulates local scores for every child of the mode's column universe.
///
/// Entries use the centered cross-product matrix of the data: `b` follows
/// from the residual sums of squares of `y_j` on `M0` and on `M0 ∪ Y_π`,
/// each obtained from a Cholesky factorization of the relevant block. Parent
/// sets whose block is numerically singular get `-inf`.
pub fn score_table<T: Scalar>(d: &Dataset<T>, cfg: &GPriorConfig, mode: Estimator) -> Result<ScoreTable<T>> {
    let n = d.n();
    let p = d.p();
    let q = mode.fixed_columns();
    if mode != Estimator::Dag {
        d.require_x(mode)?;
    }
    if n < q + cfg.max_parents + 1 {
        return Err(Error::input(format!(
            "n = {n} is too small for {q} fixed columns and up to {} parents",
            cfg.max_parents
        )));
    }
    let g: T = cfg.g_for(n)?;
    let nodes = mode.universe(p);
    let columns = match mode {
        Estimator::Dag => d.y().clone(),
        _ => d.full_columns(),
    };
    let gram = CenteredGram::new(&columns);
    let shrink = g / (g + T::one());
    let ln_n = T::of_usize(n).ln();
    let prior_p = nodes;

    let per_child: Vec<Result<HashMap<u64, T>>> = (0..nodes)
        .into_par_iter()
        .map(|j| {
            let fixed: Vec<usize> = if mode == Estimator::Cdag { vec![p + j] } else { vec![] };
            let log_det_m0 = match mode {
                Estimator::Cdag => {
                    let sxx = gram.get(p + j, p + j);
                    if !(sxx > T::zero()) {
                        return Err(Error::numeric(format!(
                            "secondary column {j} is constant; the fixed design is rank deficient"
                        )));
                    }
                    ln_n + sxx.ln()
                }
                _ => ln_n,
            };
            let rss0 = gram
                .residual_ss(&fixed, j)
                .map_err(|_| Error::numeric(format!("fixed design for child {j} is singular")))?;
            let cands: Vec<usize> = (0..nodes).filter(|&c| c != j).collect();
            let masks = subsets_up_to(&cands, cfg.max_parents);
            masks
                .par_iter()
                .map(|&mask| {
                    let parents = mask_to_vec(mask);
                    let mut regs = fixed.clone();
                    regs.extend(&parents);
                    let score = match gram.residual_ss(&regs, j) {
                        Ok(rss) => {
                            let b = rss0 - shrink * (rss0 - rss);
                            closed_form(n, q, parents.len(), log_det_m0, g, b)
                                .map_err(|e| annotate(e, j, &parents))?
                                + log_parent_prior::<T>(prior_p, parents.len())
                        }
                        Err(_) => T::neg_infinity(),
                    };
                    Ok((mask, score))
                })
                .collect::<Result<HashMap<u64, T>>>()
        })
        .collect();

    let mut table = ScoreTable::new(nodes, cfg.max_parents)?;
    for (j, scores) in per_child.into_iter().enumerate() {
        table.scores[j] = scores?;
    }
    Ok(table)
}

/// Local score computed through the direct design-matrix route, for spot checks.
pub fn local_score<T: Scalar>(d: &Dataset<T>, m: &LocalModel, cfg: &GPriorConfig) -> Result<T> {
    let nodes = m.mode.universe(d.p());
    Ok(log_marginal_likelihood(d, m, cfg)? + log_parent_prior::<T>(nodes, m.parents.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> Dataset<f64> {
        let y = array![
            [0.3, 1.2, -0.4],
            [1.1, 2.9, 0.7],
            [-0.6, -0.8, 0.1],
            [2.0, 4.4, 1.9],
            [0.4, 0.2, -1.2],
            [-1.3, -2.1, 0.5],
            [0.9, 1.5, 0.0],
            [1.6, 3.7, 0.8],
            [-0.2, 0.9, -0.3],
            [0.0, -0.5, 1.4]
        ];
        let x = array![
            [0.1, 0.5, -0.2],
            [0.9, 1.0, 0.3],
            [-0.4, -0.3, 0.2],
            [1.2, 1.1, 1.0],
            [0.2, -0.6, -0.9],
            [-1.0, -0.2, 0.4],
            [0.5, 0.1, 0.1],
            [1.1, 0.9, 0.2],
            [-0.3, 0.7, -0.6],
            [0.2, -0.4, 0.8]
        ];
        Dataset::new(y, Some(x)).unwrap()
    }

    #[test]
    fn prior_examples() {
        assert_eq!(log_parent_prior::<f64>(5, 0), 0.0);
        assert!((log_parent_prior::<f64>(5, 2) + 10f64.ln()).abs() < 1e-12);
        assert!((log_parent_prior::<f64>(15, 5) + 3003f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_parent_block_has_no_columns() {
        let d = toy();
        let (m0, m_pi) = design_matrices(&d, &LocalModel::new(0, &[], Estimator::Cdag).unwrap()).unwrap();
        assert_eq!(m0.ncols(), 2);
        assert_eq!(m_pi.ncols(), 0);
    }

    #[test]
    fn orthogonalized_block_is_orthogonal_to_fixed() {
        let d = toy();
        let (m0, m_pi) = design_matrices(&d, &LocalModel::new(2, &[0, 1], Estimator::Cdag).unwrap()).unwrap();
        let cross = m0.t().dot(&m_pi);
        let scale = m_pi.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(cross.iter().all(|v| v.abs() < 1e-10 * scale.max(1.0)));
    }

    #[test]
    fn projection_leaves_orthogonal_columns_untouched() {
        // Parent column already orthogonal to [1, x_0].
        let y: Array2<f64> = array![[0.0, 1.0], [0.0, -1.0], [0.0, 1.0], [0.0, -1.0]];
        let x = array![[1.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [-1.0, 0.0]];
        let d = Dataset::new(y.clone(), Some(x)).unwrap();
        let (_, m_pi) = design_matrices(&d, &LocalModel::new(0, &[1], Estimator::Cdag).unwrap()).unwrap();
        for (a, b) in m_pi.column(0).iter().zip(y.column(1)) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_parent_score_matches_reduced_formula() {
        let d = toy();
        let n = d.n() as f64;
        let lm = log_marginal_likelihood(&d, &LocalModel::new(1, &[], Estimator::Cdag).unwrap(), &GPriorConfig::default()).unwrap();
        // RSS of y_1 on [1, x_1] by explicit normal equations.
        let (xs, ys): (Vec<f64>, Vec<f64>) = (d.x().unwrap().column(1).to_vec(), d.y().column(1).to_vec());
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let rss = syy - sxy * sxy / sxx;
        let det = n * sxx;
        let h = (n - 2.0) / 2.0;
        let want = 0.5f64.ln() + statrs::function::gamma::ln_gamma(h) - h * std::f64::consts::PI.ln()
            - 0.5 * det.ln()
            - h * rss.ln();
        assert!((lm - want).abs() < 1e-10, "{lm} vs {want}");
    }

    #[test]
    fn table_matches_direct_route() {
        let d = toy();
        let cfg = GPriorConfig::with_max_parents(2);
        for mode in Estimator::ALL {
            let t = score_table(&d, &cfg, mode).unwrap();
            for j in 0..t.node_count() {
                for (mask, s) in t.entries(j) {
                    let m = LocalModel::new(j, &mask_to_vec(mask), mode).unwrap();
                    let direct = local_score(&d, &m, &cfg).unwrap();
                    assert!((s - direct).abs() < 1e-8 * direct.abs().max(1.0), "{mode} {j} {mask:b}");
                }
            }
        }
    }

    #[test]
    fn table_sizes() {
        let cands: Vec<usize> = (0..4).collect();
        assert_eq!(subsets_up_to(&cands, 5).len(), 16);
        let cands: Vec<usize> = (0..14).collect();
        assert_eq!(subsets_up_to(&cands, 5).len(), 3473);
        assert_eq!(subsets_up_to(&[2, 7], 1), vec![0, 1 << 2, 1 << 7]);
    }

    #[test]
    fn bayes_factor_identities() {
        let d = toy();
        let cfg = GPriorConfig::default();
        let same = log_bayes_factor(&d, Estimator::Cdag, 2, &[0], &[0], &cfg).unwrap();
        assert_eq!(same, 0.0);
        let hg = log_bayes_factor(&d, Estimator::Cdag, 2, &[0, 1], &[1], &cfg).unwrap();
        let gh = log_bayes_factor(&d, Estimator::Cdag, 2, &[1], &[0, 1], &cfg).unwrap();
        assert_eq!(hg, -gh);
    }

    #[test]
    fn collinear_parents() {
        let mut y = toy().y().clone();
        let c0 = y.column(0).to_owned();
        y.column_mut(2).assign(&(&c0 * 2.0));
        let d = Dataset::new(y, toy().x().cloned()).unwrap();
        let err = log_marginal_likelihood(&d, &LocalModel::new(1, &[0, 2], Estimator::Cdag).unwrap(), &GPriorConfig::default());
        assert!(matches!(err, Err(Error::Collinear { child: 1, .. })));
        let t = score_table(&d, &GPriorConfig::with_max_parents(2), Estimator::Cdag).unwrap();
        assert_eq!(t.get(1, 0b101), Some(f64::NEG_INFINITY));
        assert!(t.get(1, 0b001).unwrap().is_finite());
    }

    #[test]
    fn constant_secondary_is_numeric_error() {
        let mut x = toy().x().unwrap().clone();
        x.column_mut(0).fill(3.0);
        let d = Dataset::new(toy().y().clone(), Some(x)).unwrap();
        let e = log_marginal_likelihood(&d, &LocalModel::new(0, &[], Estimator::Cdag).unwrap(), &GPriorConfig::default()).unwrap_err();
        assert!(e.is_numeric());
        assert!(score_table(&d, &GPriorConfig::with_max_parents(1), Estimator::Cdag).unwrap_err().is_numeric());
    }

    #[test]
    fn modes_needing_secondary_data() {
        let d = Dataset::new(toy().y().clone(), None).unwrap();
        assert!(matches!(score_table(&d, &GPriorConfig::default(), Estimator::Cdag), Err(Error::Input(_))));
        assert!(matches!(score_table(&d, &GPriorConfig::default(), Estimator::Dag2), Err(Error::Input(_))));
        assert!(score_table(&d, &GPriorConfig::with_max_parents(2), Estimator::Dag).is_ok());
    }

    #[test]
    fn rescaling_child_shifts_score() {
        let d = toy();
        let cfg = GPriorConfig::default();
        let mut y2 = d.y().clone();
        y2.column_mut(2).mapv_inplace(|v| 2.0 * v);
        let d2 = Dataset::new(y2, d.x().cloned()).unwrap();
        let n = d.n() as f64;
        for parents in [vec![], vec![0], vec![0, 1]] {
            let m = LocalModel::new(2, &parents, Estimator::Cdag).unwrap();
            let a = log_marginal_likelihood(&d, &m, &cfg).unwrap();
            let b = log_marginal_likelihood(&d2, &m, &cfg).unwrap();
            assert!((b - a + (n - 2.0) * 2f64.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn f32_table_tracks_f64() {
        let d = toy();
        let y32 = d.y().mapv(|v| v as f32);
        let x32 = d.x().unwrap().mapv(|v| v as f32);
        let d32 = Dataset::new(y32, Some(x32)).unwrap();
        let cfg = GPriorConfig::with_max_parents(1);
        let t64 = score_table(&d, &cfg, Estimator::Cdag).unwrap();
        let t32 = score_table(&d32, &cfg, Estimator::Cdag).unwrap();
        for j in 0..3 {
            for (mask, s) in t64.entries(j) {
                let s32 = t32.get(j, mask).unwrap() as f64;
                assert!((s - s32).abs() < 1e-3 * s.abs().max(1.0));
            }
        }
    }

    #[test]
    fn too_few_samples_rejected() {
        let d = toy();
        assert!(score_table(&d, &GPriorConfig::with_max_parents(8), Estimator::Cdag).is_err());
    }
}
