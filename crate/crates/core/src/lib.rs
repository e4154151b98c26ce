//! Structure learning for conditional DAGs (CDAGs): DAGs over primary
//! variables whose every node `v_i` has a known exogenous cause `w_i`.
//!
//! The crate covers c-separation and the independence models it induces,
//! closed-form g-prior scores for linear-Gaussian local models, exact and
//! greedy MAP structure search, a structural-equation simulator and the
//! structural Hamming distance benchmark harness.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below fix the precision.

pub mod error;
pub mod eval;
pub(crate) mod linalg;
pub mod graph;
pub mod io;
pub mod scalar;
pub mod scoring;
pub mod search;
pub mod separation;
pub mod sim;

pub use error::{Error, Result};
pub use graph::{Cdag, Dag, Digraph, NodeKind, NodeRef, NodeSet, UndirectedGraph};
pub use scalar::Scalar;
pub use separation::{c_separated, d_separated, extended_graph, independence_model, Query};
pub use eval::{shd, BenchmarkConfig, BenchmarkReport, ShdReport};
pub use scoring::{Estimator, GChoice, GPriorConfig};
pub use search::{SearchMethod, SearchOptions};
pub use sim::{GroundTruth, SimConfig};

pub type Dataset64 = scoring::Dataset<f64>;
pub type Dataset32 = scoring::Dataset<f32>;
pub type ScoreTable64 = scoring::ScoreTable<f64>;
pub type ScoreTable32 = scoring::ScoreTable<f32>;
pub type SearchResult64 = search::SearchResult<f64>;
pub type SearchResult32 = search::SearchResult<f32>;
pub type Estimate64 = search::Estimate<f64>;
pub type Estimate32 = search::Estimate<f32>;
