//! Value learners: replay memory, exploration schedule, per-agent Q-networks
//! for the discrete domain, and Q-functionals for the continuous domain.

mod continuous;
mod discrete;
mod functional;
mod replay;
mod schedule;

pub use continuous::{ContinuousTeamLearner, CONTINUOUS_ACTION_DIM};
pub use discrete::DiscreteTeamLearner;
pub use functional::{FunctionalHead, PolynomialBasis};
pub use replay::{ContinuousTransition, DiscreteTransition, ReplayMemory, Transition};
pub use schedule::EpsilonSchedule;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::Activation;
use crate::relnet::MixingMode;

/// The six learner variants. The `ca_` variants follow the configured
/// relational-network schedule; the plain variants keep their fixed mixing
/// graph for the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Idqn,
    Vdn,
    CaVdn,
    Iqf,
    Mqf,
    CaMqf,
}

impl LearnerKind {
    pub fn is_continuous(self) -> bool {
        matches!(self, LearnerKind::Iqf | LearnerKind::Mqf | LearnerKind::CaMqf)
    }

    pub fn mixing_mode(self) -> MixingMode {
        match self {
            LearnerKind::Idqn | LearnerKind::Iqf => MixingMode::Independent,
            LearnerKind::Vdn | LearnerKind::CaVdn => MixingMode::RewardRelational,
            LearnerKind::Mqf | LearnerKind::CaMqf => MixingMode::ValueRelational,
        }
    }

    /// Whether the learner swaps relational networks per the run schedule.
    /// Non-collaborative variants keep the identity graph throughout.
    pub fn follows_graph_schedule(self) -> bool {
        matches!(self, LearnerKind::CaVdn | LearnerKind::CaMqf)
    }
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            LearnerKind::Idqn => "idqn",
            LearnerKind::Vdn => "vdn",
            LearnerKind::CaVdn => "ca_vdn",
            LearnerKind::Iqf => "iqf",
            LearnerKind::Mqf => "mqf",
            LearnerKind::CaMqf => "ca_mqf",
        };
        f.write_str(name)
    }
}

/// Hyperparameters shared by both learner families. Fields that only apply
/// to one family (target sync cadence vs. soft tau, action samples) are
/// ignored by the other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub gamma: f64,
    pub batch_size: usize,
    /// Update iterations per training event (per episode, discrete).
    pub update_iterations: usize,
    /// Hard target sync cadence in episodes (discrete).
    pub target_sync_period: usize,
    /// Soft target factor per training step (continuous).
    pub soft_tau: f64,
    pub epsilon: EpsilonSchedule,
    pub learning_rate: f64,
    pub hidden_layers: Vec<usize>,
    pub hidden_activation: Activation,
    pub replay_capacity: usize,
    /// Candidate actions per sampled maximization (continuous).
    pub action_samples: usize,
    /// Polynomial basis degree (continuous).
    pub basis_degree: usize,
    /// Environment steps between training events (continuous).
    pub update_period_steps: usize,
}

impl LearnerConfig {
    pub fn default_discrete() -> Self {
        LearnerConfig {
            gamma: 0.99,
            batch_size: 32,
            update_iterations: 10,
            target_sync_period: 200,
            soft_tau: 0.01,
            epsilon: EpsilonSchedule {
                start: 1.0,
                end: 0.05,
                decay_horizon: 2000,
            },
            learning_rate: 1e-3,
            hidden_layers: vec![128, 128],
            hidden_activation: Activation::Relu,
            replay_capacity: 50_000,
            action_samples: 64,
            basis_degree: 2,
            update_period_steps: 10,
        }
    }

    pub fn default_continuous() -> Self {
        LearnerConfig {
            gamma: 0.99,
            batch_size: 512,
            update_iterations: 1,
            target_sync_period: 200,
            soft_tau: 0.01,
            epsilon: EpsilonSchedule {
                start: 1.0,
                end: 0.05,
                decay_horizon: 10_000,
            },
            learning_rate: 1e-4,
            hidden_layers: vec![256, 256, 256],
            hidden_activation: Activation::Tanh,
            replay_capacity: 500_000,
            action_samples: 64,
            basis_degree: 2,
            update_period_steps: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!(
                "gamma must lie in [0, 1), got {}",
                self.gamma
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.update_iterations == 0 {
            return Err(Error::Config("update_iterations must be positive".into()));
        }
        if self.target_sync_period == 0 {
            return Err(Error::Config("target_sync_period must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.soft_tau) {
            return Err(Error::Config(format!(
                "soft_tau must lie in [0, 1], got {}",
                self.soft_tau
            )));
        }
        self.epsilon.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.replay_capacity == 0 {
            return Err(Error::Config("replay_capacity must be positive".into()));
        }
        if self.action_samples == 0 {
            return Err(Error::Config("action_samples must be positive".into()));
        }
        if self.basis_degree == 0 {
            return Err(Error::Config("basis_degree must be positive".into()));
        }
        if self.update_period_steps == 0 {
            return Err(Error::Config("update_period_steps must be positive".into()));
        }
        Ok(())
    }
}
