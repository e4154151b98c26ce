//! c-separation for conditional DAGs, d-separation for ordinary DAGs, the
//! extended-graph construction relating the two, and enumeration of the
//! independence model a CDAG induces.

use crate::error::{Error, Result};
use crate::graph::{moralize, separated_unchecked, Cdag, Digraph, NodeRef, NodeSet};

/// Upper bound on the enumeration scope of [`independence_model`].
pub const MAX_MODEL_SCOPE: usize = 8;

/// Conditional-independence triple `<A, B | C>` over node ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Query {
    pub a: NodeSet,
    pub b: NodeSet,
    pub c: NodeSet,
}

impl Query {
    /// Validates that the sets are pairwise disjoint and `a`, `b` nonempty.
    pub fn new(a: NodeSet, b: NodeSet, c: NodeSet) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::input("query sets A and B must be nonempty"));
        }
        if !a.is_disjoint(&b) || !a.is_disjoint(&c) || !b.is_disjoint(&c) {
            return Err(Error::input("query sets must be pairwise disjoint"));
        }
        Ok(Query { a, b, c })
    }

    /// Builds a query from CDAG nodes of a graph with `p` primary nodes.
    pub fn from_refs(p: usize, a: &[NodeRef], b: &[NodeRef], c: &[NodeRef]) -> Result<Self> {
        let ids = |s: &[NodeRef]| s.iter().map(|r| r.id(p)).collect::<Result<NodeSet>>();
        Query::new(ids(a)?, ids(b)?, ids(c)?)
    }

    /// Orders `(a, b)` so that symmetric triples compare equal.
    pub fn canonical(self) -> Self {
        if self.b < self.a {
            Query {
                a: self.b,
                b: self.a,
                c: self.c,
            }
        } else {
            self
        }
    }

    pub fn swapped(self) -> Self {
        Query {
            a: self.b,
            b: self.a,
            c: self.c,
        }
    }

    fn all(&self) -> NodeSet {
        self.a.union(&self.b).union(&self.c)
    }

    fn check_bound(&self, n: usize) -> Result<()> {
        if self.all().bound() > n {
            return Err(Error::input(format!(
                "query references node ids outside 0..{n}"
            )));
        }
        Ok(())
    }
}

/// Moral graph of the ancestral subgraph of the query nodes.
fn ancestral_moral(g: &Digraph, q: &Query) -> (crate::graph::UndirectedGraph, NodeSet) {
    let an = g.ancestors(&q.all());
    (moralize(&g.induced(&an)), an)
}

/// c-separation of `q.a` and `q.b` by `q.c` in the CDAG `g`: separation in
/// the moralized ancestral subgraph after fully connecting its secondary nodes.
pub fn c_separated(g: &Cdag, q: &Query) -> Result<bool> {
    let p = g.p();
    check_query(q)?;
    q.check_bound(2 * p)?;
    let (mut u, an) = ancestral_moral(&g.digraph(), q);
    let secondary = an.difference(&NodeSet::range(p));
    u.connect_all(&secondary);
    Ok(separated_unchecked(&u, &q.a, &q.b, &q.c))
}

/// Classical d-separation via the moralized ancestral subgraph.
pub fn d_separated(g: &Digraph, q: &Query) -> Result<bool> {
    check_query(q)?;
    q.check_bound(g.capacity())?;
    let (u, _) = ancestral_moral(g, q);
    Ok(separated_unchecked(&u, &q.a, &q.b, &q.c))
}

fn check_query(q: &Query) -> Result<()> {
    Query::new(q.a, q.b, q.c).map(|_| ())
}

/// The CDAG plus an auxiliary node `z` (id `2p`) with edges `z -> w_i` for
/// every secondary node. d-separation there coincides with c-separation in `g`.
pub fn extended_graph(g: &Cdag) -> Digraph {
    let p = g.p();
    let base = g.digraph();
    let z = 2 * p;
    let parents = (0..=z)
        .map(|v| {
            if v < p {
                base.parents(v)
            } else if v < z {
                NodeSet::singleton(z)
            } else {
                NodeSet::empty()
            }
        })
        .collect();
    Digraph::from_parts(z + 1, parents)
}

/// The set of triples over a node scope that hold under c-separation, stored
/// canonically (sorted, with `a <= b`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndependenceModel {
    p: usize,
    scope: NodeSet,
    relations: Vec<Query>,
}

impl IndependenceModel {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn scope(&self) -> NodeSet {
        self.scope
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    /// Canonical relations in sorted order.
    pub fn relations(&self) -> &[Query] {
        &self.relations
    }

    /// Membership test, symmetric in `(a, b)`.
    pub fn contains(&self, q: &Query) -> bool {
        self.relations.binary_search(&q.canonical()).is_ok()
    }

    /// `A ⊥ B | C` in the model, with the trivial statements (empty `A` or
    /// `B`) always holding.
    pub fn holds(&self, a: NodeSet, b: NodeSet, c: NodeSet) -> bool {
        if a.is_empty() || b.is_empty() {
            return true;
        }
        self.contains(&Query { a, b, c })
    }
}

/// Enumerates every triple of disjoint node sets over `scope` (with `A` and
/// `B` nonempty) and keeps those that are c-separated in `g`.
pub fn independence_model(g: &Cdag, scope: &[NodeRef]) -> Result<IndependenceModel> {
    let p = g.p();
    let ids: NodeSet = scope.iter().map(|r| r.id(p)).collect::<Result<NodeSet>>()?;
    let members: Vec<usize> = ids.iter().collect();
    let k = members.len();
    if k > MAX_MODEL_SCOPE {
        return Err(Error::TooLarge(format!(
            "independence model scope of {k} nodes exceeds the enumeration limit of {MAX_MODEL_SCOPE}"
        )));
    }
    let mut relations = Vec::new();
    for code in 0..4usize.pow(k as u32) {
        let mut sets = [NodeSet::empty(); 4];
        let mut rest = code;
        for &id in &members {
            sets[rest % 4].insert(id);
            rest /= 4;
        }
        let [_, a, b, c] = sets;
        if a.is_empty() || b.is_empty() || b < a {
            continue;
        }
        let q = Query { a, b, c };
        if c_separated(g, &q)? {
            relations.push(q);
        }
    }
    relations.sort_unstable();
    Ok(IndependenceModel {
        p,
        scope: ids,
        relations,
    })
}

/// Every node `v_1..v_p, w_1..w_p` of a CDAG with `p` primary nodes.
pub fn all_nodes(p: usize) -> Vec<NodeRef> {
    (0..p).map(NodeRef::v).chain((0..p).map(NodeRef::w)).collect()
}
