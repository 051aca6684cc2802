//! Embedding of virtual cloud networks onto a substrate network through a
//! linear mixed-integer program.
//!
//! The crate is organized along the lifecycle of a request:
//!
//! - [`network`]: substrate/virtual network model, graph expansion and
//!   problem validation.
//! - [`mip`]: builds the embedding program from a problem.
//! - [`solver`]: built-in LP/branch-and-bound solver plus LP/MPS export and
//!   solution import for external solvers.
//! - [`engine`]: embeds requests against residual substrate state, verifies
//!   embeddings independently, re-optimizes with migration and answers
//!   what-if queries.
//! - [`scenario`]: topology loading, request generation and iterative
//!   experiments with metrics output.
//! - [`cli`]: the `cloudnet` command line.

#[cfg(feature = "cli")]
pub mod cli;
pub mod engine;
pub mod error;
pub mod mip;
pub mod network;
pub mod scenario;
pub mod solver;
