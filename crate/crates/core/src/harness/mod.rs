//! Experiment orchestration: configuration, the training loop with the
//! malfunction protocol, metrics and trajectory files, checkpoints, and
//! cross-run summary statistics.

mod checkpoint;
mod config;
mod metrics;
mod runner;
mod summary;
mod trajectory;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, CheckpointManifest, RngSnapshot, CHECKPOINT_DIR,
    MANIFEST_FILE,
};
pub use config::{
    EnvironmentConfig, EvaluationConfig, ExperimentConfig, MalfunctionEvent, ScheduleEntry,
};
pub use metrics::{
    read_metrics, MetricRow, MetricsRecord, MetricsWriter, Phase, TimingsWriter, METRICS_FILE,
    TIMINGS_FILE,
};
pub use runner::{
    evaluate_greedy_crawler, evaluate_greedy_grid, run_experiment, run_one_seed, EvalReport,
};
pub use summary::{mean_ci, summarize, Bucket, SummaryRow, SummaryTable};
pub use trajectory::{
    export_trajectories, read_trajectories, TrajectoryPoint, TrajectoryWriter, TRAJECTORIES_FILE,
};

/// Name of the experiment config copy written into every run directory.
pub const CONFIG_FILE: &str = "config.json";
