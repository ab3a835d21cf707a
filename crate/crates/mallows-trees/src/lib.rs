//! Mallows permutations, their binary search trees, and the record processes
//! that describe them.
//!
//! The crate has three layers:
//!
//! * exact machinery: [`perm`], [`bst`], [`analytics`] and the brute-force
//!   [`oracle`] for small `n`;
//! * samplers: [`size_process`] (linear-time tree generation by subtree-size
//!   splitting) and [`record_chain`] (the infinite-stream model, its
//!   record/maximum Markov chain and the threshold process);
//! * the seeded Monte Carlo harness in [`experiments`], exposed through the
//!   `mallows` binary.
//!
//! Everything stochastic is driven by explicit 64-bit seeds. Per-trial streams
//! are derived with [`rng::derive_rng`], so results are reproducible and
//! independent of how trials are scheduled across threads (see [`par`]).

pub mod analytics;
pub mod bst;
pub mod experiments;
pub mod oracle;
pub mod order_stats;
pub mod par;
pub mod perm;
pub mod record_chain;
pub mod rng;
pub mod size_process;
pub mod stats;

pub use bst::{Dir, LabeledTree, NodeAddress};
pub use perm::Permutation;
