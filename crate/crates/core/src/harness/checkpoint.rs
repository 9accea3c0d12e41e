//! Learner checkpoints: per-agent parameter files plus a JSON manifest
//! (learner kind, schedule position, rng streams).

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::MalfunctionSpec;
use crate::error::{Error, Result};
use crate::harness::config::{EnvironmentConfig, ExperimentConfig};
use crate::learners::{LearnerConfig, LearnerKind};
use crate::neural::Mlp;

pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to rebuild a learner and continue or evaluate a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub learner: LearnerKind,
    pub n_agents: usize,
    /// Episodes completed when the checkpoint was written.
    pub episode: usize,
    /// Episode at which the exploration schedule last reset.
    pub epsilon_reset_marker: usize,
    /// Label of the relational network active at checkpoint time, when the
    /// learner follows a schedule.
    pub active_graph: Option<String>,
    /// The malfunction in effect at checkpoint time, if one was injected.
    pub malfunction_applied: Option<MalfunctionSpec>,
    pub environment: EnvironmentConfig,
    pub learner_config: LearnerConfig,
    pub rng: RngSnapshot,
}

/// Serialized stream states so a resumed run draws the same numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RngSnapshot {
    pub exploration: ChaCha8Rng,
    pub sampling: ChaCha8Rng,
    pub evaluation: ChaCha8Rng,
}

/// Writes the manifest and one parameter file per network role and agent.
pub fn save_checkpoint(
    dir: &Path,
    manifest: &CheckpointManifest,
    prediction: &[&Mlp],
    target: &[&Mlp],
) -> Result<()> {
    if prediction.len() != manifest.n_agents || target.len() != manifest.n_agents {
        return Err(Error::ShapeMismatch {
            what: "checkpoint networks",
            expected: manifest.n_agents,
            got: prediction.len(),
        });
    }
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(manifest)?,
    )?;
    for (i, net) in prediction.iter().enumerate() {
        net.save(&dir.join(format!("agent_{i}_prediction.json")))?;
    }
    for (i, net) in target.iter().enumerate() {
        net.save(&dir.join(format!("agent_{i}_target.json")))?;
    }
    Ok(())
}

/// Loads a checkpoint directory back into (manifest, prediction, target).
pub fn load_checkpoint(dir: &Path) -> Result<(CheckpointManifest, Vec<Mlp>, Vec<Mlp>)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", manifest_path.display())))?;
    let manifest: CheckpointManifest = serde_json::from_str(&text)?;
    let mut prediction = Vec::with_capacity(manifest.n_agents);
    let mut target = Vec::with_capacity(manifest.n_agents);
    for i in 0..manifest.n_agents {
        prediction.push(Mlp::load(&dir.join(format!("agent_{i}_prediction.json")))?);
        target.push(Mlp::load(&dir.join(format!("agent_{i}_target.json")))?);
    }
    Ok((manifest, prediction, target))
}

impl CheckpointManifest {
    /// Reconstructs a minimal experiment config for standalone evaluation of
    /// this checkpoint.
    pub fn evaluation_config(&self, episodes: usize) -> ExperimentConfig {
        ExperimentConfig {
            environment: self.environment.clone(),
            learner: self.learner,
            learner_config: self.learner_config.clone(),
            graphs: vec![],
            relational_schedule: vec![],
            malfunction: None,
            total_episodes: self.episode.max(1),
            evaluation: crate::harness::config::EvaluationConfig {
                cadence_episodes: usize::MAX,
                episodes,
                final_episodes: episodes,
            },
            seeds: vec![0],
            output_dir: String::new(),
        }
    }
}
