//! Payment-free task allocation among selfish players.
//!
//! Every round each player publishes the probability-integral transform of its
//! private cost for the task. Published sequences are policed with a
//! Kolmogorov-Smirnov test against U(0,1); rejected values are replaced by a
//! value every node can recompute, and the task goes to the player with the
//! smallest effective value. Because the whole round is a deterministic
//! function of the published values, every node can run it locally and all
//! nodes agree on the assignment without a coordinator.
//!
//! Layout:
//!
//! - [`stats`]: distributions, empirical CDFs, normalizations and the KS test.
//! - [`mechanism`]: the round engine and its replicated state.
//! - [`players`]: honest, random and distorting strategy profiles.
//! - [`protocol`]: lockstep multi-replica execution with agreement checks.
//! - [`analytics`]: closed-form expectations and trace summaries.
//! - [`experiment`]: configuration files, artifact writers and the payoff table.

pub mod analytics;
pub mod error;
pub mod experiment;
pub mod mechanism;
pub mod players;
pub mod protocol;
pub mod stats;

pub use error::{Error, Result};
