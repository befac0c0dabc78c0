//! Truncated hitting times on large directed graphs.
//!
//! The core engine propagates `(h, p, f)` per vertex for `T` steps and returns
//! approximate mean `T`-truncated hitting times from a start vertex (or start
//! distribution) to every vertex, either from an in-memory CSR matrix or by
//! streaming checksummed edge shards from disk. Exact oracles, a Monte-Carlo
//! return-probability estimator, random graph generators and an accuracy
//! benchmark are provided alongside.

pub mod cli;
pub mod dense;
pub mod engine;
pub mod error;
pub mod eval;
pub mod exact;
pub mod format;
pub mod generate;
pub mod graph;
pub mod sampling;
pub mod shard;
pub mod transition;

pub use engine::{
    approx_all_starts, approx_hitting, approx_hitting_order0, approx_hitting_order1,
    start_distribution, HittingProfile, Order, StartKind,
};
pub use error::{Error, Result};
pub use eval::{run_benchmark, BenchmarkConfig, EvalReport};
pub use exact::{brute_force_paths, exact_first_passage, exact_recursive, HittingMatrix};
pub use generate::{generate, GenSpec, Model};
pub use graph::{Edge, Graph};
pub use sampling::{
    hitting_via_sampled_diagonal, hoeffding_walk_count, sample_return_probabilities,
};
pub use shard::{write_shards, ShardedTransition};
pub use transition::{
    Backend, DanglingPolicy, ProbabilityVector, TransitionMatrix, TransitionOperator,
};
