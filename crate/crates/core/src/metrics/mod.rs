//! Centrality, rank correlation, partition modularity and group density on
//! the subgraph induced by a chosen node set.

mod centrality;
mod graph;
mod modularity;
mod spearman;

pub use centrality::{
    betweenness, centrality_suite, rank_centrality_vs_league, rank_descending, CentralityOptions, CentralityTable,
    EdgeLength, HitsConfig, LeagueCorrelation, Measure, PageRankConfig, RankingTable,
};
pub use graph::InducedGraph;
pub use modularity::{group_internal_density, modularity, GroupModularity, ModularityResult, Partition, UNAFFILIATED};
pub use spearman::{average_ranks, pearson, spearman_rank_correlation};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("node filter is empty")]
    EmptyFilter,
    #[error("{measure} did not converge within {iterations} iterations")]
    ConvergenceFailure { measure: &'static str, iterations: usize },
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two observations, got {0}")]
    TooShort(usize),
    #[error("input is constant, correlation undefined")]
    DegenerateInput,
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("only {0} nodes appear in both the centrality table and the ranking")]
    InsufficientOverlap(usize),
    #[error("induced subgraph has no edge weight")]
    EmptyGraph,
    #[error("group density needs at least two members, got {0}")]
    TooFewMembers(usize),
}
