//! Competitive bidding for influence-maximization seeds.
//!
//! A platform owns `l` influential seed nodes of a social graph and sells
//! them, round after round, to `k` competitors in sealed-bid second-price
//! auctions. Each competitor's reward is the influence spread of the seeds it
//! won under a competitive linear-threshold cascade. The platform adjusts its
//! starting prices between rounds and tracks how fairly spread per unit of
//! money is shared. Competitors learn to bid with multi-agent actor-critic
//! training.
//!
//! Modules, bottom up:
//!
//! - [`graph`]: weighted graphs, edge-list loading, thresholds, seed choice.
//! - [`diffusion`]: competitive linear-threshold propagation.
//! - [`auction`]: the auction, price updates and the fairness index.
//! - [`marl`]: networks, replay, actor and critic updates, checkpoints.
//! - [`harness`]: configuration, environment, training loop and metrics.
//! - [`oracle`]: brute-force references used by the test suites.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auction;
pub mod diffusion;
pub mod error;
pub mod graph;
pub mod harness;
pub mod marl;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
