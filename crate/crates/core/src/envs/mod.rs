//! Experiment environments: the multi-agent grid world, the deterministic
//! crawler, malfunction injection, and the exact optimal-return search.

mod crawler;
mod grid;
mod oracle;

pub use crawler::{Crawler, CrawlerState, CrawlerStepOutcome, CRAWLER_ACTION_DIM, CRAWLER_AGENTS};
pub use grid::{Cell, GridAction, GridConfig, GridStepOutcome, GridWorld, GridWorldState, GRID_ACTIONS};
pub use oracle::{optimal_grid_return, optimal_grid_return_with_budget, OptimalReturn};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// A scheduled fault: which agent breaks and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalfunctionSpec {
    pub agent_index: usize,
    pub kind: MalfunctionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MalfunctionKind {
    /// Grid agent: own actions become idle, remains pushable.
    ImmobilizeDiscrete,
    /// Crawler leg: torques forced to zero every step.
    ZeroTorqueContinuous,
}

/// Applies a malfunction to whichever environment it targets.
pub fn apply_malfunction_grid(env: &mut GridWorld, spec: MalfunctionSpec) -> Result<()> {
    debug_assert_eq!(spec.kind, MalfunctionKind::ImmobilizeDiscrete);
    env.immobilize(spec.agent_index)
}

pub fn apply_malfunction_crawler(env: &mut Crawler, spec: MalfunctionSpec) -> Result<()> {
    debug_assert_eq!(spec.kind, MalfunctionKind::ZeroTorqueContinuous);
    env.zero_torque(spec.agent_index)
}
