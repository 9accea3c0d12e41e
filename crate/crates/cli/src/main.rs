//! Command-line front end: run experiments, evaluate checkpoints, summarize
//! run sets, and export recorded trajectories.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 for runtime
//! failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use relmix::envs::{Crawler, GridWorld, MalfunctionKind};
use relmix::harness::{
    evaluate_greedy_crawler, evaluate_greedy_grid, export_trajectories, load_checkpoint,
    run_experiment, summarize, EnvironmentConfig, ExperimentConfig, Phase,
};
use relmix::learners::{ContinuousTeamLearner, DiscreteTeamLearner};
use relmix::Error;

#[derive(Parser)]
#[command(name = "relmix", about = "Cooperative multi-agent RL with relational mixing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment config.
    Train {
        /// Path to the experiment config JSON.
        config: PathBuf,
    },
    /// Greedy evaluation of a saved checkpoint.
    Eval {
        /// Checkpoint directory (contains manifest.json).
        checkpoint: PathBuf,
        /// Number of greedy episodes to average.
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        /// Seed for the evaluation rng stream.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Aggregate metrics of completed runs into mean +/- 95% CI.
    Summarize {
        /// Run directories (one per seed).
        #[arg(required = true)]
        run_dirs: Vec<PathBuf>,
    },
    /// Export recorded evaluation trajectories as CSV.
    #[command(name = "export-traj")]
    ExportTraj {
        /// Run directory.
        run_dir: PathBuf,
        /// Which phase's trajectories to export (only "eval" is recorded).
        #[arg(long, default_value = "eval")]
        phase: String,
        /// First episode to include.
        #[arg(long, default_value_t = 0)]
        from: usize,
        /// Last episode to include (defaults to everything).
        #[arg(long)]
        to: Option<usize>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_config() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cli: Cli) -> relmix::Result<()> {
    match cli.command {
        Command::Train { config } => {
            let config = ExperimentConfig::load(&config)?;
            let dirs = run_experiment(&config)?;
            for dir in dirs {
                println!("{}", dir.display());
            }
            Ok(())
        }
        Command::Eval {
            checkpoint,
            episodes,
            seed,
        } => eval_checkpoint(&checkpoint, episodes, seed),
        Command::Summarize { run_dirs } => {
            let table = summarize(&run_dirs)?;
            print!("{table}");
            Ok(())
        }
        Command::ExportTraj {
            run_dir,
            phase,
            from,
            to,
            out,
        } => {
            let phase: Phase = phase.parse().map_err(|_| {
                Error::Config(format!("unknown phase '{phase}' (expected train or eval)"))
            })?;
            let range = from..=to.unwrap_or(usize::MAX);
            let points = export_trajectories(&run_dir, phase, range)?;
            let mut text = String::from("episode,step,entity,x,y\n");
            for p in &points {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    p.episode, p.step, p.entity, p.x, p.y
                ));
            }
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn eval_checkpoint(dir: &PathBuf, episodes: usize, seed: u64) -> relmix::Result<()> {
    let (manifest, prediction, target) = load_checkpoint(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);

    match &manifest.environment {
        EnvironmentConfig::Gridworld { grid } => {
            let mut env = GridWorld::new(grid.clone())?;
            if let Some(spec) = manifest.malfunction_applied {
                debug_assert_eq!(spec.kind, MalfunctionKind::ImmobilizeDiscrete);
                env.immobilize(spec.agent_index)?;
            }
            let n_actions = prediction[0].output_size();
            let learner = DiscreteTeamLearner::from_networks(
                &manifest.learner_config,
                manifest.learner.mixing_mode(),
                prediction,
                target,
                n_actions,
            )?;
            let report = evaluate_greedy_grid(&env, &learner, episodes, &mut rng)?;
            println!("episodes: {episodes}");
            for (i, r) in report.per_agent.iter().enumerate() {
                println!("agent {i} return: {r:.4}");
            }
            println!("team return: {:.4}", report.team);
            println!("episode length: {:.2}", report.length);
            if let Some(c) = report.consumed {
                println!("resources consumed: {c:.2}");
            }
        }
        EnvironmentConfig::Crawler { n_agents } => {
            let mut env = Crawler::new(*n_agents)?;
            if let Some(spec) = manifest.malfunction_applied {
                debug_assert_eq!(spec.kind, MalfunctionKind::ZeroTorqueContinuous);
                env.zero_torque(spec.agent_index)?;
            }
            let learner = ContinuousTeamLearner::from_networks(
                &manifest.learner_config,
                manifest.learner.mixing_mode(),
                prediction,
                target,
            )?;
            let samples = manifest.learner_config.action_samples;
            let report = evaluate_greedy_crawler(&env, &learner, episodes, samples, &mut rng)?;
            println!("episodes: {episodes}");
            println!("team return: {:.4}", report.team);
            println!("episode length: {:.2}", report.length);
            if let Some(d) = report.origin_distance {
                println!("origin distance: {d:.4}");
            }
        }
    }
    Ok(())
}
