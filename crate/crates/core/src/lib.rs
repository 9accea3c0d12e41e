//! Cooperative multi-agent reinforcement learning with relational
//! reward/value mixing.
//!
//! The crate couples value-decomposition learners (discrete Q-networks and
//! continuous basis-coefficient Q-functionals) with a directed weighted
//! graph over agents that re-weights either the team reward or the team
//! action-value. Switching that graph when an agent malfunctions steers the
//! surviving agents toward strategies that compensate for the failure.
//!
//! Modules:
//! - [`neural`]: MLPs, backprop, Adam, target-network sync.
//! - [`relnet`]: relational networks and the two aggregation rules.
//! - [`envs`]: the grid world, the crawler, malfunction injection, and the
//!   exact optimal-return search.
//! - [`learners`]: replay memory, exploration schedules, and the discrete /
//!   continuous team learners.
//! - [`harness`]: experiment orchestration, metrics, checkpoints, and
//!   summary statistics.

pub mod envs;
pub mod error;
pub mod harness;
pub mod learners;
pub mod neural;
pub mod relnet;

pub use error::{Error, Result};
