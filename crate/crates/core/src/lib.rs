//! Interactive clustering with a same-cluster oracle and optional similarity
//! side information.
//!
//! The crate covers instance synthesis, the oracle, perfect- and
//! faulty-oracle algorithms, batched round-limited schemes and an
//! experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algo;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod rounds;
pub mod stats;
pub mod synth;
pub mod types;

pub use algo::faulty::{alg2, alg2_poly, alg3, FaultyConfig};
pub use algo::membership::MembershipScorer;
pub use algo::perfect::{alg1_lasvegas, alg1a_lasvegas, alg1a_montecarlo, alg_div_montecarlo, baseline_nk};
pub use algo::subgraph::{max_weight_subgraph, ml_estimate, SolverLimits};
pub use algo::{Outcome, RunStats};
pub use error::{Error, Result};
pub use oracle::{OracleMode, OracleSession, OracleSpec};
pub use stats::{Extended, Pmf};
pub use synth::{gen_instance, gen_sideinfo, SideInfoMatrix, SizeProfile};
pub use types::{Answer, Clustering, Instance, Pair, RunReport, SignedGraph};
