//! Score-based causal discovery for multivariate time series.
//!
//! The search runs over admissible permutations of a lag-unrolled window of
//! the series: lagged variables always precede the contemporaneous slice,
//! and only the contemporaneous block is permuted. Each contemporaneous
//! target keeps a grow–shrink tree that caches parent sets and BIC scores
//! across the many permutation prefixes the search visits. An optional
//! backward equivalence pass prunes the result, and the output is a
//! stationary window graph (DAG) or its time-series CPDAG.
//!
//! Module map:
//!
//! - [`graph`]: window graphs, d-separation, Markov / minimality predicates
//! - [`dataset`]: CSV loading, window unrolling, i.i.d. window extraction
//! - [`scoring`]: covariance statistics and the Gaussian BIC local score
//! - [`gst`]: grow–shrink trees
//! - [`search`]: phase-1 permutation search and the backward pass
//! - [`cpdag`]: DAG to CPDAG conversion and a brute-force MEC oracle
//! - [`simgen`]: random linear time-series SCMs and simulation
//! - [`eval`]: adjacency / orientation precision and recall
//! - [`harness`]: experiment sweeps and CSV output

pub mod cpdag;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod graph;
pub mod gst;
pub mod harness;
pub mod scoring;
pub mod search;
pub mod simgen;

pub use error::{Error, Result};
pub use graph::{GraphKind, Mark, NodeId, WindowGraph};
