//! Clustering algorithms. Every algorithm observes the truth only through an
//! [`OracleSession`](crate::oracle::OracleSession).

pub mod faulty;
pub mod membership;
pub mod perfect;
pub mod subgraph;

pub(crate) mod select;

use crate::types::Clustering;

/// Result of one algorithm run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub clustering: Clustering,
    /// Scheme rounds for batched algorithms.
    pub rounds: Option<usize>,
    pub stats: RunStats,
}

/// Per-run counters beyond the oracle ledger.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    /// Queries issued during estimation phases (the `alg1a` and `alg-div` paths).
    pub estimation_queries: usize,
    /// Side-information entries read.
    pub side_info_reads: u64,
    /// Cluster-size threshold `M` or majority panel size in effect.
    pub threshold: Option<usize>,
    /// Majority panels run.
    pub panel_votes: usize,
    /// Panels repeated for a `(vertex, cluster)` pair; always 0 for a sound run.
    pub repeated_votes: usize,
    /// A heuristic solver stood in for an exact one somewhere in the run.
    pub heuristic_used: bool,
    /// Vertices the algorithm could not place in a certified cluster.
    pub unresolved: Vec<usize>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub(crate) fn new(clustering: Clustering, stats: RunStats) -> Self {
        Outcome { clustering, rounds: None, stats }
    }
}
