//! Experiment execution: seeded training runs with scheduled malfunctions,
//! relational-network switches, periodic greedy evaluation, and artifact
//! persistence.
//!
//! Each seed owns four independent ChaCha streams: network initialization,
//! exploration, replay sampling, and evaluation. Greedy evaluation draws
//! only from its own stream and touches neither the replay memory nor the
//! networks, so pausing for evaluation never perturbs training.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::envs::{
    apply_malfunction_crawler, apply_malfunction_grid, Crawler, GridWorld, MalfunctionSpec,
    GRID_ACTIONS,
};
use crate::error::{Error, Result};
use crate::harness::checkpoint::{save_checkpoint, CheckpointManifest, RngSnapshot, CHECKPOINT_DIR};
use crate::harness::config::{EnvironmentConfig, ExperimentConfig};
use crate::harness::metrics::{MetricsRecord, MetricsWriter, Phase, TimingsWriter, METRICS_FILE, TIMINGS_FILE};
use crate::harness::trajectory::{TrajectoryPoint, TrajectoryWriter, TRAJECTORIES_FILE};
use crate::harness::CONFIG_FILE;
use crate::learners::{
    ContinuousTeamLearner, ContinuousTransition, DiscreteTeamLearner, DiscreteTransition,
    ReplayMemory, Transition,
};
use crate::relnet::RelationalNetwork;

/// Stream indices within a seed's ChaCha key space.
const STREAM_INIT: u64 = 0;
const STREAM_EXPLORATION: u64 = 1;
const STREAM_SAMPLING: u64 = 2;
const STREAM_EVALUATION: u64 = 3;

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Averages from one greedy evaluation, plus the first episode's trajectory.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub per_agent: Vec<f64>,
    pub team: f64,
    pub length: f64,
    /// Grid: resources consumed per episode.
    pub consumed: Option<f64>,
    /// Crawler: final body position per episode.
    pub origin_distance: Option<f64>,
    /// (step, entity, x, y) points of the first greedy episode.
    pub trajectory: Vec<(usize, String, f64, f64)>,
}

impl EvalReport {
    fn trajectory_points(&self, episode: usize) -> Vec<TrajectoryPoint> {
        self.trajectory
            .iter()
            .map(|(step, entity, x, y)| TrajectoryPoint {
                episode,
                step: *step,
                entity: entity.clone(),
                x: *x,
                y: *y,
            })
            .collect()
    }
}

/// Greedy rollouts on a copy of the grid environment; the learner, replay
/// memory, and training rng streams are untouched.
pub fn evaluate_greedy_grid(
    env: &GridWorld,
    learner: &DiscreteTeamLearner,
    n_episodes: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EvalReport> {
    let mut env = env.clone();
    let n = env.n_agents();
    let mut per_agent = vec![0.0; n];
    let mut team = 0.0;
    let mut length = 0.0;
    let mut consumed = 0.0;
    let mut trajectory = Vec::new();

    for episode in 0..n_episodes {
        env.reset();
        let record = episode == 0;
        if record {
            push_grid_positions(&env, 0, &mut trajectory);
        }
        let mut step = 0;
        loop {
            let obs: Vec<Vec<f64>> = (0..n).map(|i| env.observation(i)).collect();
            let greedy = learner.select_actions(&obs, 0.0, rng)?;
            let actions: Vec<_> = greedy.iter().map(|&a| GRID_ACTIONS[a]).collect();
            let out = env.step(&actions)?;
            step += 1;
            for (acc, r) in per_agent.iter_mut().zip(&out.rewards) {
                *acc += r;
            }
            team += out.rewards.iter().sum::<f64>();
            if record {
                push_grid_positions(&env, step, &mut trajectory);
            }
            if out.done {
                break;
            }
        }
        length += step as f64;
        consumed += env
            .state()
            .resource_consumed
            .iter()
            .filter(|&&c| c)
            .count() as f64;
    }

    let inv = 1.0 / n_episodes as f64;
    for v in per_agent.iter_mut() {
        *v *= inv;
    }
    Ok(EvalReport {
        per_agent,
        team: team * inv,
        length: length * inv,
        consumed: Some(consumed * inv),
        origin_distance: None,
        trajectory,
    })
}

fn push_grid_positions(env: &GridWorld, step: usize, out: &mut Vec<(usize, String, f64, f64)>) {
    for (i, cell) in env.state().agent_positions.iter().enumerate() {
        out.push((step, format!("agent{i}"), cell.x as f64, cell.y as f64));
    }
}

/// Greedy rollouts on a copy of the crawler.
pub fn evaluate_greedy_crawler(
    env: &Crawler,
    learner: &ContinuousTeamLearner,
    n_episodes: usize,
    action_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EvalReport> {
    let mut env = env.clone();
    let n = env.n_agents();
    let mut team = 0.0;
    let mut length = 0.0;
    let mut distance = 0.0;
    let mut trajectory = Vec::new();

    for episode in 0..n_episodes {
        env.reset();
        let record = episode == 0;
        if record {
            trajectory.push((0, "body".to_string(), env.state().body_x, 0.0));
        }
        let mut step = 0;
        loop {
            let shared = env.observation();
            let obs: Vec<Vec<f64>> = (0..n).map(|_| shared.clone()).collect();
            let actions = learner.select_actions(&obs, 0.0, action_samples, rng)?;
            let out = env.step(&actions)?;
            step += 1;
            team += out.team_reward;
            if record {
                trajectory.push((step, "body".to_string(), env.state().body_x, 0.0));
            }
            if out.done {
                break;
            }
        }
        length += step as f64;
        distance += env.state().body_x;
    }

    let inv = 1.0 / n_episodes as f64;
    Ok(EvalReport {
        per_agent: Vec::new(),
        team: team * inv,
        length: length * inv,
        consumed: None,
        origin_distance: Some(distance * inv),
        trajectory,
    })
}

/// Runs every configured seed sequentially and returns the run directories.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let root = PathBuf::from(&config.output_dir);
    std::fs::create_dir_all(&root)
        .map_err(|e| Error::Config(format!("cannot create output dir {}: {e}", root.display())))?;
    let mut dirs = Vec::new();
    for &seed in &config.seeds {
        let run_dir = root.join(format!("seed_{seed}"));
        run_one_seed(config, seed, &run_dir)?;
        dirs.push(run_dir);
    }
    Ok(dirs)
}

/// Runs a single seed into `run_dir`.
pub fn run_one_seed(config: &ExperimentConfig, seed: u64, run_dir: &Path) -> Result<()> {
    config.validate()?;
    std::fs::create_dir_all(run_dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", run_dir.display())))?;
    std::fs::write(
        run_dir.join(CONFIG_FILE),
        serde_json::to_string_pretty(config)?,
    )?;
    match &config.environment {
        EnvironmentConfig::Gridworld { grid } => run_seed_grid(config, grid.clone(), seed, run_dir),
        EnvironmentConfig::Crawler { .. } => run_seed_crawler(config, seed, run_dir),
    }
}

struct Writers {
    metrics: MetricsWriter,
    timings: TimingsWriter,
    trajectories: TrajectoryWriter,
}

impl Writers {
    fn create(run_dir: &Path) -> Result<Self> {
        Ok(Writers {
            metrics: MetricsWriter::create(&run_dir.join(METRICS_FILE))?,
            timings: TimingsWriter::create(&run_dir.join(TIMINGS_FILE))?,
            trajectories: TrajectoryWriter::create(&run_dir.join(TRAJECTORIES_FILE))?,
        })
    }

    fn finish(self) -> Result<()> {
        self.metrics.finish()?;
        self.timings.finish()?;
        self.trajectories.finish()
    }

    fn append_eval(&mut self, episode: usize, report: &EvalReport, seconds: f64) -> Result<()> {
        self.metrics.append(&MetricsRecord {
            episode,
            phase: Phase::Eval,
            per_agent_returns: report.per_agent.clone(),
            team_return: report.team,
            episode_length: report.length,
            epsilon: 0.0,
            consumed: report.consumed,
            origin_distance: report.origin_distance,
        })?;
        self.timings.append(episode, Phase::Eval, seconds)?;
        self.trajectories.append(&report.trajectory_points(episode))?;
        Ok(())
    }
}

/// Tracks the malfunction/schedule state shared by both domain loops.
struct Protocol {
    reset_marker: usize,
    malfunction_applied: Option<MalfunctionSpec>,
    active_graph: RelationalNetwork,
    active_label: Option<String>,
}

impl Protocol {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        let n = config.n_agents();
        let (active_graph, active_label) = match config.scheduled_graph_label(0) {
            Some(label) => (config.graph(label)?, Some(label.to_string())),
            None => (RelationalNetwork::identity("identity", n), None),
        };
        Ok(Protocol {
            reset_marker: 0,
            malfunction_applied: None,
            active_graph,
            active_label,
        })
    }

    /// Applies the episode-boundary protocol; returns the malfunction spec
    /// to inject into the environment, if this is the malfunction episode.
    fn at_episode_start(
        &mut self,
        config: &ExperimentConfig,
        episode: usize,
    ) -> Result<Option<MalfunctionSpec>> {
        let mut inject = None;
        if let Some(event) = &config.malfunction {
            if episode == event.episode {
                let spec = MalfunctionSpec {
                    agent_index: event.agent_index,
                    kind: event.kind,
                };
                inject = Some(spec);
                self.malfunction_applied = Some(spec);
                if event.reset_epsilon {
                    self.reset_marker = episode;
                }
            }
        }
        if let Some(label) = config.scheduled_graph_label(episode) {
            if self.active_label.as_deref() != Some(label) {
                self.active_graph = config.graph(label)?;
                self.active_label = Some(label.to_string());
            }
        }
        Ok(inject)
    }
}

fn run_seed_grid(
    config: &ExperimentConfig,
    grid: crate::envs::GridConfig,
    seed: u64,
    run_dir: &Path,
) -> Result<()> {
    let n = grid.n_agents();
    let mut env = GridWorld::new(grid)?;
    let mut init_rng = stream(seed, STREAM_INIT);
    let mut exploration = stream(seed, STREAM_EXPLORATION);
    let mut sampling = stream(seed, STREAM_SAMPLING);
    let mut evaluation = stream(seed, STREAM_EVALUATION);

    let learner_config = &config.learner_config;
    let mut learner = DiscreteTeamLearner::new(
        learner_config,
        config.learner.mixing_mode(),
        n,
        env.config().observation_size(),
        GRID_ACTIONS.len(),
        &mut init_rng,
    )?;
    let mut memory: ReplayMemory<DiscreteTransition> =
        ReplayMemory::new(learner_config.replay_capacity)?;
    let mut protocol = Protocol::new(config)?;
    let mut writers = Writers::create(run_dir)?;

    for episode in 0..config.total_episodes {
        let started = Instant::now();
        if let Some(spec) = protocol.at_episode_start(config, episode)? {
            apply_malfunction_grid(&mut env, spec)?;
        }
        let epsilon = learner_config.epsilon.value(episode, protocol.reset_marker);

        env.reset();
        let mut returns = vec![0.0; n];
        let mut steps = 0usize;
        loop {
            let obs: Vec<Vec<f64>> = (0..n).map(|i| env.observation(i)).collect();
            let chosen = learner.select_actions(&obs, epsilon, &mut exploration)?;
            let actions: Vec<_> = chosen.iter().map(|&a| GRID_ACTIONS[a]).collect();
            let out = env.step(&actions)?;
            steps += 1;
            for (acc, r) in returns.iter_mut().zip(&out.rewards) {
                *acc += r;
            }
            let next_obs: Vec<Vec<f64>> = (0..n).map(|i| env.observation(i)).collect();
            memory.push(Transition {
                observations: obs,
                actions: chosen,
                reward: out.rewards,
                next_observations: next_obs,
                done: out.done,
            });
            if out.done {
                break;
            }
        }

        for _ in 0..learner_config.update_iterations {
            learner.train_step(&memory, &protocol.active_graph, &mut sampling)?;
        }
        if (episode + 1) % learner_config.target_sync_period == 0 {
            learner.sync_targets();
        }

        writers.metrics.append(&MetricsRecord {
            episode,
            phase: Phase::Train,
            team_return: returns.iter().sum(),
            per_agent_returns: returns,
            episode_length: steps as f64,
            epsilon,
            consumed: None,
            origin_distance: None,
        })?;
        writers
            .timings
            .append(episode, Phase::Train, started.elapsed().as_secs_f64())?;

        let completed = episode + 1;
        if completed % config.evaluation.cadence_episodes == 0 && completed != config.total_episodes
        {
            let t0 = Instant::now();
            let report =
                evaluate_greedy_grid(&env, &learner, config.evaluation.episodes, &mut evaluation)?;
            writers.append_eval(completed, &report, t0.elapsed().as_secs_f64())?;
            eprintln!(
                "[seed {seed}] episode {completed}/{} eval team {:.2}",
                config.total_episodes, report.team
            );
        }
    }

    let t0 = Instant::now();
    let report = evaluate_greedy_grid(
        &env,
        &learner,
        config.evaluation.final_episodes,
        &mut evaluation,
    )?;
    writers.append_eval(config.total_episodes, &report, t0.elapsed().as_secs_f64())?;
    writers.finish()?;

    let manifest = CheckpointManifest {
        learner: config.learner,
        n_agents: n,
        episode: config.total_episodes,
        epsilon_reset_marker: protocol.reset_marker,
        active_graph: protocol.active_label.clone(),
        malfunction_applied: protocol.malfunction_applied,
        environment: config.environment.clone(),
        learner_config: config.learner_config.clone(),
        rng: RngSnapshot {
            exploration,
            sampling,
            evaluation,
        },
    };
    let prediction: Vec<&crate::neural::Mlp> = learner.prediction_networks().iter().collect();
    let target: Vec<&crate::neural::Mlp> = learner.target_networks().iter().collect();
    save_checkpoint(&run_dir.join(CHECKPOINT_DIR), &manifest, &prediction, &target)
}

fn run_seed_crawler(config: &ExperimentConfig, seed: u64, run_dir: &Path) -> Result<()> {
    let mut env = Crawler::new(config.n_agents())?;
    let n = env.n_agents();
    let mut init_rng = stream(seed, STREAM_INIT);
    let mut exploration = stream(seed, STREAM_EXPLORATION);
    let mut sampling = stream(seed, STREAM_SAMPLING);
    let mut evaluation = stream(seed, STREAM_EVALUATION);

    let learner_config = &config.learner_config;
    let mut learner = ContinuousTeamLearner::new(
        learner_config,
        config.learner.mixing_mode(),
        n,
        env.observation_size(),
        &mut init_rng,
    )?;
    let mut memory: ReplayMemory<ContinuousTransition> =
        ReplayMemory::new(learner_config.replay_capacity)?;
    let mut protocol = Protocol::new(config)?;
    let mut writers = Writers::create(run_dir)?;
    let mut global_step = 0u64;

    for episode in 0..config.total_episodes {
        let started = Instant::now();
        if let Some(spec) = protocol.at_episode_start(config, episode)? {
            apply_malfunction_crawler(&mut env, spec)?;
        }
        let epsilon = learner_config.epsilon.value(episode, protocol.reset_marker);

        env.reset();
        let mut team_return = 0.0;
        let mut steps = 0usize;
        loop {
            let shared = env.observation();
            let obs: Vec<Vec<f64>> = (0..n).map(|_| shared.clone()).collect();
            let actions = learner.select_actions(
                &obs,
                epsilon,
                learner_config.action_samples,
                &mut exploration,
            )?;
            let out = env.step(&actions)?;
            steps += 1;
            global_step += 1;
            team_return += out.team_reward;
            let next_shared = env.observation();
            memory.push(Transition {
                observations: obs,
                actions,
                reward: out.team_reward,
                next_observations: (0..n).map(|_| next_shared.clone()).collect(),
                done: out.done,
            });
            if global_step % learner_config.update_period_steps as u64 == 0 {
                for _ in 0..learner_config.update_iterations {
                    learner.train_step(&memory, &protocol.active_graph, &mut sampling)?;
                }
            }
            if out.done {
                break;
            }
        }

        writers.metrics.append(&MetricsRecord {
            episode,
            phase: Phase::Train,
            per_agent_returns: Vec::new(),
            team_return,
            episode_length: steps as f64,
            epsilon,
            consumed: None,
            origin_distance: Some(env.state().body_x),
        })?;
        writers
            .timings
            .append(episode, Phase::Train, started.elapsed().as_secs_f64())?;

        let completed = episode + 1;
        if completed % config.evaluation.cadence_episodes == 0 && completed != config.total_episodes
        {
            let t0 = Instant::now();
            let report = evaluate_greedy_crawler(
                &env,
                &learner,
                config.evaluation.episodes,
                learner_config.action_samples,
                &mut evaluation,
            )?;
            writers.append_eval(completed, &report, t0.elapsed().as_secs_f64())?;
            eprintln!(
                "[seed {seed}] episode {completed}/{} eval team {:.3}",
                config.total_episodes, report.team
            );
        }
    }

    let t0 = Instant::now();
    let report = evaluate_greedy_crawler(
        &env,
        &learner,
        config.evaluation.final_episodes,
        learner_config.action_samples,
        &mut evaluation,
    )?;
    writers.append_eval(config.total_episodes, &report, t0.elapsed().as_secs_f64())?;
    writers.finish()?;

    let manifest = CheckpointManifest {
        learner: config.learner,
        n_agents: n,
        episode: config.total_episodes,
        epsilon_reset_marker: protocol.reset_marker,
        active_graph: protocol.active_label.clone(),
        malfunction_applied: protocol.malfunction_applied,
        environment: config.environment.clone(),
        learner_config: config.learner_config.clone(),
        rng: RngSnapshot {
            exploration,
            sampling,
            evaluation,
        },
    };
    let prediction = learner.prediction_networks();
    let target = learner.target_networks();
    save_checkpoint(&run_dir.join(CHECKPOINT_DIR), &manifest, &prediction, &target)
}
