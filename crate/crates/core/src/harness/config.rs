//! Run configuration: one JSON file fully determines an experiment.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envs::{GridConfig, MalfunctionKind, CRAWLER_AGENTS};
use crate::error::{Error, Result};
use crate::learners::{LearnerConfig, LearnerKind};
use crate::relnet::{GraphSpec, RelationalNetwork};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentConfig {
    Gridworld {
        #[serde(flatten)]
        grid: GridConfig,
    },
    Crawler {
        n_agents: usize,
    },
}

impl EnvironmentConfig {
    pub fn n_agents(&self) -> usize {
        match self {
            EnvironmentConfig::Gridworld { grid } => grid.n_agents(),
            EnvironmentConfig::Crawler { n_agents } => *n_agents,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, EnvironmentConfig::Crawler { .. })
    }
}

/// The scheduled fault plus its protocol flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MalfunctionEvent {
    pub episode: usize,
    pub agent_index: usize,
    pub kind: MalfunctionKind,
    pub reset_epsilon: bool,
}

/// Activates the named graph from `start_episode` onward (for learners that
/// follow the schedule).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub start_episode: usize,
    pub graph: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    /// Greedy evaluation pause every this many training episodes.
    pub cadence_episodes: usize,
    /// Greedy episodes per pause.
    pub episodes: usize,
    /// Greedy episodes for the single evaluation after training completes.
    pub final_episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub environment: EnvironmentConfig,
    pub learner: LearnerKind,
    pub learner_config: LearnerConfig,
    /// Graph definitions referenced by label from the schedule. Uses the
    /// same record shape as standalone graph JSON files.
    pub graphs: Vec<GraphSpec>,
    pub relational_schedule: Vec<ScheduleEntry>,
    pub malfunction: Option<MalfunctionEvent>,
    pub total_episodes: usize,
    pub evaluation: EvaluationConfig,
    pub seeds: Vec<u64>,
    pub output_dir: String,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn n_agents(&self) -> usize {
        self.environment.n_agents()
    }

    pub fn validate(&self) -> Result<()> {
        match &self.environment {
            EnvironmentConfig::Gridworld { grid } => grid.validate()?,
            EnvironmentConfig::Crawler { n_agents } => {
                if *n_agents != CRAWLER_AGENTS {
                    return Err(Error::Config(format!(
                        "crawler requires exactly {CRAWLER_AGENTS} agents, got {n_agents}"
                    )));
                }
            }
        }
        if self.learner.is_continuous() != self.environment.is_continuous() {
            return Err(Error::Config(format!(
                "learner {} does not match the configured environment",
                self.learner
            )));
        }
        self.learner_config.validate()?;
        if self.total_episodes == 0 {
            return Err(Error::Config("total_episodes must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut sorted_seeds = self.seeds.clone();
        sorted_seeds.sort_unstable();
        sorted_seeds.dedup();
        if sorted_seeds.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if self.output_dir.is_empty() {
            return Err(Error::Config("output_dir must be set".into()));
        }
        if self.evaluation.cadence_episodes == 0
            || self.evaluation.episodes == 0
            || self.evaluation.final_episodes == 0
        {
            return Err(Error::Config("evaluation settings must be positive".into()));
        }

        // Graphs: valid, distinct labels, right team size.
        let n = self.n_agents();
        for spec in &self.graphs {
            let violations = spec.validate();
            if !violations.is_empty() {
                return Err(Error::Config(format!(
                    "graph '{}' invalid: {}",
                    spec.label,
                    violations
                        .iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join("; ")
                )));
            }
            if spec.n_agents != n {
                return Err(Error::Config(format!(
                    "graph '{}' is for {} agents but the environment has {n}",
                    spec.label, spec.n_agents
                )));
            }
        }
        for (i, spec) in self.graphs.iter().enumerate() {
            if self.graphs[i + 1..].iter().any(|s| s.label == spec.label) {
                return Err(Error::Config(format!(
                    "duplicate graph label '{}'",
                    spec.label
                )));
            }
        }

        // Schedule: strictly increasing, resolvable labels, starts at zero
        // when the learner actually follows it.
        for pair in self.relational_schedule.windows(2) {
            if pair[1].start_episode <= pair[0].start_episode {
                return Err(Error::Config(
                    "relational_schedule episodes must be strictly increasing".into(),
                ));
            }
        }
        for entry in &self.relational_schedule {
            if !self.graphs.iter().any(|g| g.label == entry.graph) {
                return Err(Error::Config(format!(
                    "schedule references unknown graph '{}'",
                    entry.graph
                )));
            }
            if entry.start_episode >= self.total_episodes {
                return Err(Error::Config(format!(
                    "schedule entry at episode {} is beyond the run",
                    entry.start_episode
                )));
            }
        }
        if self.learner.follows_graph_schedule() {
            match self.relational_schedule.first() {
                Some(first) if first.start_episode == 0 => {}
                _ => {
                    return Err(Error::Config(
                        "collaborative learners need a schedule entry starting at episode 0"
                            .into(),
                    ))
                }
            }
        }

        if let Some(event) = &self.malfunction {
            if event.episode >= self.total_episodes {
                return Err(Error::Config(format!(
                    "malfunction episode {} must come before total_episodes {}",
                    event.episode, self.total_episodes
                )));
            }
            if event.agent_index >= n {
                return Err(Error::Config(format!(
                    "malfunction agent {} out of range for {n} agents",
                    event.agent_index
                )));
            }
            let continuous_kind = event.kind == MalfunctionKind::ZeroTorqueContinuous;
            if continuous_kind != self.environment.is_continuous() {
                return Err(Error::Config(
                    "malfunction kind does not match the environment".into(),
                ));
            }
        }
        Ok(())
    }

    /// Resolves a schedule label into a built graph.
    pub fn graph(&self, label: &str) -> Result<RelationalNetwork> {
        let spec = self
            .graphs
            .iter()
            .find(|g| g.label == label)
            .ok_or_else(|| Error::Config(format!("unknown graph '{label}'")))?;
        spec.clone().build()
    }

    /// The graph active at `episode` for schedule-following learners, or
    /// `None` when the schedule has no entry yet / the learner ignores it.
    pub fn scheduled_graph_label(&self, episode: usize) -> Option<&str> {
        if !self.learner.follows_graph_schedule() {
            return None;
        }
        self.relational_schedule
            .iter()
            .take_while(|e| e.start_episode <= episode)
            .last()
            .map(|e| e.graph.as_str())
    }
}

#[cfg(test)]
pub(crate) mod test_fixtures {
    use super::*;
    use crate::learners::EpsilonSchedule;

    /// Small grid experiment used across harness tests: malfunction at 100,
    /// graph switch at 100, 200 episodes total.
    pub(crate) fn grid_config_for_tests() -> ExperimentConfig {
        let n = 4;
        ExperimentConfig {
            environment: EnvironmentConfig::Gridworld {
                grid: GridConfig::default_layout(),
            },
            learner: LearnerKind::CaVdn,
            learner_config: LearnerConfig {
                hidden_layers: vec![16],
                epsilon: EpsilonSchedule {
                    start: 1.0,
                    end: 0.05,
                    decay_horizon: 50,
                },
                ..LearnerConfig::default_discrete()
            },
            graphs: vec![
                RelationalNetwork::identity("identity", n).to_spec(),
                RelationalNetwork::prioritizing("aid_green", n, 3, 0.3, 0.7)
                    .unwrap()
                    .to_spec(),
            ],
            relational_schedule: vec![
                ScheduleEntry {
                    start_episode: 0,
                    graph: "identity".into(),
                },
                ScheduleEntry {
                    start_episode: 100,
                    graph: "aid_green".into(),
                },
            ],
            malfunction: Some(MalfunctionEvent {
                episode: 100,
                agent_index: 3,
                kind: MalfunctionKind::ImmobilizeDiscrete,
                reset_epsilon: true,
            }),
            total_episodes: 200,
            evaluation: EvaluationConfig {
                cadence_episodes: 50,
                episodes: 3,
                final_episodes: 5,
            },
            seeds: vec![7],
            output_dir: "runs/test".into(),
        }
    }
}
