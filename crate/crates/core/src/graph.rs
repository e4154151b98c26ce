//! Directed and undirected graph primitives: primary DAGs, conditional DAGs,
//! ancestral closure, moralization and undirected separation.
//!
//! Node identity follows a fixed layout. In a graph over `p` primary nodes,
//! primary node `v_i` has id `i` and its secondary partner `w_i` has id `p + i`.
//! The pairing between `w_i` and `v_i` is the identity map.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest primary node count a [`Dag`] supports (parent sets are `u64` masks).
pub const MAX_PRIMARY: usize = 64;

const WORDS: usize = 3;

/// Upper bound on node ids a [`NodeSet`] can hold: room for `2 * 64` CDAG
/// nodes plus the auxiliary node of the extended graph.
pub const MAX_NODES: usize = 64 * WORDS;

/// Fixed-capacity bitset over node ids.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct NodeSet([u64; WORDS]);

impl NodeSet {
    pub const fn empty() -> Self {
        NodeSet([0; WORDS])
    }

    pub fn singleton(id: usize) -> Self {
        let mut s = Self::empty();
        s.insert(id);
        s
    }

    /// The set `{0, .., n-1}`.
    pub fn range(n: usize) -> Self {
        assert!(n <= MAX_NODES);
        let mut s = Self::empty();
        for (w, word) in s.0.iter_mut().enumerate() {
            let lo = w * 64;
            if n >= lo + 64 {
                *word = u64::MAX;
            } else if n > lo {
                *word = (1u64 << (n - lo)) - 1;
            }
        }
        s
    }

    pub fn from_ids(ids: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty();
        for id in ids {
            s.insert(id);
        }
        s
    }

    /// Lifts a primary parent mask into the node-id space.
    pub fn from_mask(mask: u64) -> Self {
        NodeSet([mask, 0, 0])
    }

    #[inline]
    pub fn insert(&mut self, id: usize) {
        assert!(id < MAX_NODES, "node id {id} exceeds capacity");
        self.0[id / 64] |= 1u64 << (id % 64);
    }

    #[inline]
    pub fn remove(&mut self, id: usize) {
        if id < MAX_NODES {
            self.0[id / 64] &= !(1u64 << (id % 64));
        }
    }

    #[inline]
    pub fn contains(&self, id: usize) -> bool {
        id < MAX_NODES && self.0[id / 64] & (1u64 << (id % 64)) != 0
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn union(&self, other: &NodeSet) -> NodeSet {
        NodeSet(std::array::from_fn(|i| self.0[i] | other.0[i]))
    }

    #[inline]
    pub fn intersection(&self, other: &NodeSet) -> NodeSet {
        NodeSet(std::array::from_fn(|i| self.0[i] & other.0[i]))
    }

    #[inline]
    pub fn difference(&self, other: &NodeSet) -> NodeSet {
        NodeSet(std::array::from_fn(|i| self.0[i] & !other.0[i]))
    }

    #[inline]
    pub fn is_disjoint(&self, other: &NodeSet) -> bool {
        self.intersection(other).is_empty()
    }

    #[inline]
    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.difference(other).is_empty()
    }

    /// Largest id plus one, or 0 for the empty set.
    pub fn bound(&self) -> usize {
        for w in (0..WORDS).rev() {
            if self.0[w] != 0 {
                return w * 64 + 64 - self.0[w].leading_zeros() as usize;
            }
        }
        0
    }

    /// Ids in increasing order.
    pub fn iter(&self) -> NodeSetIter {
        NodeSetIter {
            words: self.0,
            word: 0,
        }
    }
}

pub struct NodeSetIter {
    words: [u64; WORDS],
    word: usize,
}

impl Iterator for NodeSetIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.word < WORDS {
            let w = self.words[self.word];
            if w != 0 {
                let bit = w.trailing_zeros() as usize;
                self.words[self.word] = w & (w - 1);
                return Some(self.word * 64 + bit);
            }
            self.word += 1;
        }
        None
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        NodeSet::from_ids(iter)
    }
}

/// Lexicographic order on the sorted element lists.
impl Ord for NodeSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for NodeSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Primary,
    Secondary,
}

/// A node of a conditional DAG: `v_i` (primary) or `w_i` (secondary).
/// `index` is 0-based; the textual form is 1-based (`v1` is index 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef {
    pub kind: NodeKind,
    pub index: usize,
}

impl NodeRef {
    pub const fn v(index: usize) -> Self {
        NodeRef {
            kind: NodeKind::Primary,
            index,
        }
    }

    pub const fn w(index: usize) -> Self {
        NodeRef {
            kind: NodeKind::Secondary,
            index,
        }
    }

    /// Node id in a CDAG with `p` primary nodes.
    pub fn id(&self, p: usize) -> Result<usize> {
        if self.index >= p {
            return Err(Error::input(format!(
                "node {self} out of range for p = {p}"
            )));
        }
        Ok(match self.kind {
            NodeKind::Primary => self.index,
            NodeKind::Secondary => p + self.index,
        })
    }

    /// Inverse of [`NodeRef::id`]; `None` for ids outside `0..2p`.
    pub fn from_id(id: usize, p: usize) -> Option<Self> {
        if id < p {
            Some(NodeRef::v(id))
        } else if id < 2 * p {
            Some(NodeRef::w(id - p))
        } else {
            None
        }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.kind {
            NodeKind::Primary => 'v',
            NodeKind::Secondary => 'w',
        };
        write!(f, "{c}{}", self.index + 1)
    }
}

impl FromStr for NodeRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::input(format!("bad node '{s}', expected v<i> or w<i> with i >= 1"));
        let mut chars = s.chars();
        let kind = match chars.next() {
            Some('v') | Some('V') => NodeKind::Primary,
            Some('w') | Some('W') => NodeKind::Secondary,
            _ => return Err(bad()),
        };
        let k: usize = chars.as_str().parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        Ok(NodeRef { kind, index: k - 1 })
    }
}

/// Returns true iff the directed graph on `p` nodes with the given edges has
/// no directed cycle (self-loops count as cycles).
pub fn is_acyclic(edges: &[(usize, usize)], p: usize) -> Result<bool> {
    let mut children = vec![Vec::new(); p];
    let mut indegree = vec![0usize; p];
    for &(i, j) in edges {
        if i >= p || j >= p {
            return Err(Error::input(format!("edge ({i}, {j}) out of range for p = {p}")));
        }
        children[i].push(j);
        indegree[j] += 1;
    }
    let mut queue: VecDeque<usize> = (0..p).filter(|&v| indegree[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = queue.pop_front() {
        seen += 1;
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    Ok(seen == p)
}

/// DAG over `p <= 64` primary nodes; parent sets are bitmasks.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    p: usize,
    parents: Vec<u64>,
}

impl Dag {
    pub fn empty(p: usize) -> Result<Self> {
        if p > MAX_PRIMARY {
            return Err(Error::input(format!("p = {p} exceeds the supported {MAX_PRIMARY} nodes")));
        }
        Ok(Dag {
            p,
            parents: vec![0; p],
        })
    }

    pub fn from_edges(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut dag = Dag::empty(p)?;
        for &(i, j) in edges {
            if i >= p || j >= p {
                return Err(Error::input(format!("edge ({i}, {j}) out of range for p = {p}")));
            }
            if i == j {
                return Err(Error::input(format!("self-loop on node {i}")));
            }
            dag.parents[j] |= 1 << i;
        }
        if !dag.is_acyclic() {
            return Err(Error::input("edge set contains a directed cycle"));
        }
        Ok(dag)
    }

    /// Builds a DAG from per-node parent masks, validating acyclicity.
    pub fn from_parent_masks(parents: Vec<u64>) -> Result<Self> {
        let p = parents.len();
        let mut dag = Dag::empty(p)?;
        for (j, &mask) in parents.iter().enumerate() {
            if p < 64 && mask >> p != 0 {
                return Err(Error::input(format!("parent mask of node {j} out of range")));
            }
            if mask & (1 << j) != 0 {
                return Err(Error::input(format!("self-loop on node {j}")));
            }
        }
        dag.parents = parents;
        if !dag.is_acyclic() {
            return Err(Error::input("parent sets contain a directed cycle"));
        }
        Ok(dag)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn parents(&self, j: usize) -> u64 {
        self.parents[j]
    }

    pub fn parent_masks(&self) -> &[u64] {
        &self.parents
    }

    pub fn parent_list(&self, j: usize) -> Vec<usize> {
        mask_to_vec(self.parents[j])
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.p && j < self.p && self.parents[j] & (1 << i) != 0
    }

    /// Edges `(i, j)` meaning `i -> j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.p {
            for j in 0..self.p {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(|m| m.count_ones() as usize).sum()
    }

    /// New DAG with `i -> j` added; fails if the edge would close a cycle.
    pub fn with_edge(&self, i: usize, j: usize) -> Result<Dag> {
        if i >= self.p || j >= self.p || i == j {
            return Err(Error::input(format!("invalid edge ({i}, {j}) for p = {}", self.p)));
        }
        let mut next = self.clone();
        next.parents[j] |= 1 << i;
        if !next.is_acyclic() {
            return Err(Error::input(format!("adding {i} -> {j} creates a cycle")));
        }
        Ok(next)
    }

    pub fn without_edge(&self, i: usize, j: usize) -> Dag {
        let mut next = self.clone();
        if j < self.p && i < 64 {
            next.parents[j] &= !(1 << i);
        }
        next
    }

    fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// A topological order, smallest available index first.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut remaining = self.parents.clone();
        let mut placed = 0u64;
        let mut order = Vec::with_capacity(self.p);
        while order.len() < self.p {
            let next = (0..self.p).find(|&v| placed & (1 << v) == 0 && remaining[v] == 0)?;
            placed |= 1 << next;
            order.push(next);
            for r in remaining.iter_mut() {
                *r &= !(1 << next);
            }
        }
        Some(order)
    }

    /// Subgraph induced on nodes `0..k`.
    pub fn induced_prefix(&self, k: usize) -> Dag {
        let k = k.min(self.p);
        let keep = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
        Dag {
            p: k,
            parents: self.parents[..k].iter().map(|m| m & keep).collect(),
        }
    }

    /// The DAG as a [`Digraph`] over ids `0..p`.
    pub fn digraph(&self) -> Digraph {
        Digraph {
            n: self.p,
            nodes: NodeSet::range(self.p),
            parents: self.parents.iter().map(|&m| NodeSet::from_mask(m)).collect(),
        }
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dag(p={}, {:?})", self.p, self.edges())
    }
}

pub(crate) fn mask_to_vec(mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut m = mask;
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

/// JSON wire form: `{"p": 3, "edges": [[0, 1], [1, 2]]}` with 0-based indices.
#[derive(Serialize, Deserialize)]
struct DagJson {
    p: usize,
    edges: Vec<[usize; 2]>,
}

impl Serialize for Dag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DagJson {
            p: self.p,
            edges: self.edges().into_iter().map(|(i, j)| [i, j]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = DagJson::deserialize(d)?;
        let edges: Vec<(usize, usize)> = raw.edges.iter().map(|e| (e[0], e[1])).collect();
        Dag::from_edges(raw.p, &edges).map_err(serde::de::Error::custom)
    }
}

/// Conditional DAG: a primary DAG plus the implied edges `w_i -> v_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cdag {
    primary: Dag,
}

impl Cdag {
    pub fn new(primary: Dag) -> Self {
        Cdag { primary }
    }

    pub fn p(&self) -> usize {
        self.primary.p
    }

    pub fn primary(&self) -> &Dag {
        &self.primary
    }

    /// Every edge, bijection edges first.
    pub fn edges(&self) -> Vec<(NodeRef, NodeRef)> {
        let p = self.p();
        let mut out: Vec<_> = (0..p).map(|i| (NodeRef::w(i), NodeRef::v(i))).collect();
        out.extend(
            self.primary
                .edges()
                .into_iter()
                .map(|(i, j)| (NodeRef::v(i), NodeRef::v(j))),
        );
        out
    }

    /// The CDAG as a [`Digraph`] over ids `0..2p`.
    pub fn digraph(&self) -> Digraph {
        let p = self.p();
        let mut parents = vec![NodeSet::empty(); 2 * p];
        for (j, slot) in parents.iter_mut().take(p).enumerate() {
            *slot = NodeSet::from_mask(self.primary.parents[j]);
            slot.insert(p + j);
        }
        Digraph {
            n: 2 * p,
            nodes: NodeSet::range(2 * p),
            parents,
        }
    }

    /// Ancestors of `s`, including `s` itself.
    pub fn ancestors(&self, s: &[NodeRef]) -> Result<Vec<NodeRef>> {
        let p = self.p();
        let ids = s.iter().map(|r| r.id(p)).collect::<Result<NodeSet>>()?;
        let an = self.digraph().ancestors(&ids);
        Ok(an.iter().filter_map(|id| NodeRef::from_id(id, p)).collect())
    }
}

/// Directed graph over ids `0..n`, of which `nodes` are present. Used for
/// CDAGs, extended graphs and their induced subgraphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    nodes: NodeSet,
    parents: Vec<NodeSet>,
}

impl Digraph {
    /// Builds a directed graph from edges `(from, to)`; rejects cycles.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > MAX_NODES {
            return Err(Error::input(format!("{n} nodes exceeds capacity {MAX_NODES}")));
        }
        if !is_acyclic(edges, n)? {
            return Err(Error::input("edge set contains a directed cycle"));
        }
        let mut parents = vec![NodeSet::empty(); n];
        for &(i, j) in edges {
            parents[j].insert(i);
        }
        Ok(Digraph {
            n,
            nodes: NodeSet::range(n),
            parents,
        })
    }

    pub(crate) fn from_parts(n: usize, parents: Vec<NodeSet>) -> Self {
        debug_assert_eq!(parents.len(), n);
        Digraph {
            n,
            nodes: NodeSet::range(n),
            parents,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Size of the id space.
    pub fn capacity(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> NodeSet {
        self.nodes
    }

    pub fn parents(&self, v: usize) -> NodeSet {
        self.parents[v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in self.nodes.iter() {
            for i in self.parents[j].iter() {
                out.push((i, j));
            }
        }
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|j| self.parents[j].len()).sum()
    }

    /// Least superset of `s` closed under taking parents.
    pub fn ancestors(&self, s: &NodeSet) -> NodeSet {
        let mut result = s.intersection(&self.nodes);
        let mut frontier = result;
        while !frontier.is_empty() {
            let mut next = NodeSet::empty();
            for v in frontier.iter() {
                next = next.union(&self.parents[v]);
            }
            frontier = next.difference(&result);
            result = result.union(&frontier);
        }
        result
    }

    /// Subgraph induced on `keep`.
    pub fn induced(&self, keep: &NodeSet) -> Digraph {
        let nodes = self.nodes.intersection(keep);
        let parents = (0..self.n)
            .map(|v| {
                if nodes.contains(v) {
                    self.parents[v].intersection(&nodes)
                } else {
                    NodeSet::empty()
                }
            })
            .collect();
        Digraph {
            n: self.n,
            nodes,
            parents,
        }
    }
}

/// Undirected simple graph over ids `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: usize,
    nodes: NodeSet,
    adj: Vec<NodeSet>,
}

impl UndirectedGraph {
    pub fn new(n: usize) -> Self {
        assert!(n <= MAX_NODES);
        UndirectedGraph {
            n,
            nodes: NodeSet::range(n),
            adj: vec![NodeSet::empty(); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > MAX_NODES {
            return Err(Error::input(format!("{n} nodes exceeds capacity {MAX_NODES}")));
        }
        let mut g = UndirectedGraph::new(n);
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::input(format!("edge ({a}, {b}) out of range")));
            }
            g.add_edge(a, b);
        }
        Ok(g)
    }

    pub fn nodes(&self) -> NodeSet {
        self.nodes
    }

    pub fn neighbours(&self, v: usize) -> NodeSet {
        self.adj[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.n && self.adj[a].contains(b)
    }

    /// Adds `a - b`; self-loops are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        self.adj[a].insert(b);
        self.adj[b].insert(a);
    }

    /// Fully connects the present nodes of `clique`.
    pub fn connect_all(&mut self, clique: &NodeSet) {
        let members = clique.intersection(&self.nodes);
        for v in members.iter() {
            let mut others = members;
            others.remove(v);
            self.adj[v] = self.adj[v].union(&others);
        }
    }

    /// Unordered edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in self.nodes.iter() {
            for b in self.adj[a].iter() {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// Moral graph: the skeleton of `g` plus an edge between every pair of
/// parents sharing a child.
pub fn moralize(g: &Digraph) -> UndirectedGraph {
    let mut u = UndirectedGraph {
        n: g.n,
        nodes: g.nodes,
        adj: vec![NodeSet::empty(); g.n],
    };
    for child in g.nodes.iter() {
        let pa = g.parents[child];
        for a in pa.iter() {
            u.add_edge(a, child);
        }
        u.connect_all(&pa);
    }
    u
}

/// True iff every path in `u` between `a` and `b` passes through `c`.
pub fn separated(u: &UndirectedGraph, a: &NodeSet, b: &NodeSet, c: &NodeSet) -> Result<bool> {
    if !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
        return Err(Error::input("separation query sets must be pairwise disjoint"));
    }
    Ok(separated_unchecked(u, a, b, c))
}

pub(crate) fn separated_unchecked(
    u: &UndirectedGraph,
    a: &NodeSet,
    b: &NodeSet,
    c: &NodeSet,
) -> bool {
    let allowed = u.nodes.difference(c);
    let mut reached = a.intersection(&allowed);
    let mut frontier = reached;
    while !frontier.is_empty() {
        if !reached.is_disjoint(b) {
            return false;
        }
        let mut next = NodeSet::empty();
        for v in frontier.iter() {
            next = next.union(&u.adj[v]);
        }
        frontier = next.intersection(&allowed).difference(&reached);
        reached = reached.union(&frontier);
    }
    reached.is_disjoint(b)
}
