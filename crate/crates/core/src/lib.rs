//! Exact influence spread under the independent cascade model.
//!
//! `icbdd` compiles, for a directed graph with per-edge activation
//! probabilities, the family of all edge subsets that connect a seed set `S`
//! to a target vertex `t` into reduced ordered binary decision diagrams
//! (BDDs). The diagrams for every pair share one node store and one global
//! edge ordering, so Boolean algebra between them stays valid and isomorphic
//! subdiagrams are stored once. Probability queries are then dynamic
//! programming passes over the diagrams:
//!
//! * exact influence spread and per-target influence probabilities,
//! * derivatives of the spread with respect to every edge probability,
//! * conditional spread given observed influenced / uninfluenced vertices,
//! * cheap recomputation after probability updates (no reconstruction),
//! * rejection-free sampling of connecting realizations,
//! * exact model counting of the represented families.
//!
//! Construction is a frontier-based search: edges are processed in a fixed
//! order chosen to keep the search frontier small, and search states are
//! merged by a canonical reachability signature over the frontier. An
//! independent oracle (exhaustive enumeration plus Monte-Carlo simulation)
//! backs the test suite and the accuracy comparisons.
//!
//! The `cli` module exposes everything as the `icbdd` command-line tool; see
//! the crate README for the file formats and subcommands.

pub mod bdd;
pub mod cli;
pub mod error;
pub mod frontier;
pub mod graph;
pub mod maximize;
pub mod oracle;
pub mod ordering;
mod simpath;
pub mod spread;

pub use error::{Error, Result};

#[cfg(test)]
pub(crate) mod testutil;
