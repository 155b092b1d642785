//! coexnet learns high-dimensional co-expression networks as decomposable
//! Gaussian graphical models by stepwise BIC minimization, collapses them
//! into cluster graphs of differential-expression-dense regions, and assigns
//! differentially expressed variables an entropy-like uncertainty index.
//!
//! The pipeline: ingest an observations-by-variables matrix with binary
//! differential-expression labels ([`data`]), fit a minimum-BIC spanning
//! forest and extend it by chordality-preserving edge additions ([`search`],
//! [`stats`]), reduce the fitted network to a cluster graph with per-cluster
//! and per-gene uncertainty indices ([`cluster`]), and optionally run Monte
//! Carlo recovery studies against a reference model ([`simulate`]).

pub mod cluster;
pub mod data;
pub mod graph;
pub mod linalg;
pub mod manifest;
pub mod model;
pub mod search;
pub mod simulate;
pub mod stats;

pub use cluster::{build_clusters, classify_cliques, uncertainty, ClusterGraph, LabeledNetwork};
pub use data::DataMatrix;
pub use graph::{
    clique_graph, find_cliques, mcs_order, perfect_sequence, GraphBuilder, PerfectSequence,
    UndirectedGraph,
};
pub use model::DecomposableModel;
pub use search::{decomposable_search, eligible_edges, min_bic_forest, SearchConfig, SearchTrace};
pub use simulate::{run_study, sample_mvn, MseReport, SimulationPlan};
