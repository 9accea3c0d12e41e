//! Position series recorded during greedy evaluations:
//! `episode,step,entity,x,y`.
//!
//! One trajectory (the first greedy episode) is recorded per evaluation
//! pause, keyed by the training episode at which the pause happened.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::metrics::{read_metrics, Phase, METRICS_FILE};

pub const TRAJECTORIES_FILE: &str = "trajectories.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub episode: usize,
    pub step: usize,
    pub entity: String,
    pub x: f64,
    pub y: f64,
}

pub struct TrajectoryWriter {
    out: BufWriter<File>,
}

impl TrajectoryWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path)?;
        let mut out = BufWriter::new(file);
        writeln!(out, "episode,step,entity,x,y")?;
        Ok(TrajectoryWriter { out })
    }

    pub fn append(&mut self, points: &[TrajectoryPoint]) -> Result<()> {
        for p in points {
            writeln!(self.out, "{},{},{},{},{}", p.episode, p.step, p.entity, p.x, p.y)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_trajectories(path: &Path) -> Result<Vec<TrajectoryPoint>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let expected = ["episode", "step", "entity", "x", "y"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::InvalidArgument(format!(
            "unexpected trajectory header in {}",
            path.display()
        )));
    }
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record?;
        let bad =
            |what: &str| Error::InvalidArgument(format!("bad {what} in trajectory row {record:?}"));
        points.push(TrajectoryPoint {
            episode: record[0].parse().map_err(|_| bad("episode"))?,
            step: record[1].parse().map_err(|_| bad("step"))?,
            entity: record[2].to_string(),
            x: record[3].parse().map_err(|_| bad("x"))?,
            y: record[4].parse().map_err(|_| bad("y"))?,
        });
    }
    Ok(points)
}

/// Extracts the recorded evaluation trajectories of one run for the given
/// episode range. Evaluation pauses inside the range that have metrics but
/// no trajectory rows are reported as an explicit gap, not skipped.
pub fn export_trajectories(
    run_dir: &Path,
    phase: Phase,
    episodes: RangeInclusive<usize>,
) -> Result<Vec<TrajectoryPoint>> {
    if phase != Phase::Eval {
        return Err(Error::InvalidArgument(
            "trajectories are recorded during evaluation only".into(),
        ));
    }
    let all = read_trajectories(&run_dir.join(TRAJECTORIES_FILE))?;
    let metrics = read_metrics(&run_dir.join(METRICS_FILE))?;

    let eval_episodes: BTreeSet<usize> = metrics
        .iter()
        .filter(|r| r.phase == Phase::Eval)
        .map(|r| r.episode)
        .collect();
    let recorded: BTreeSet<usize> = all.iter().map(|p| p.episode).collect();
    let missing: Vec<usize> = eval_episodes
        .iter()
        .filter(|e| episodes.contains(e) && !recorded.contains(e))
        .copied()
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidState(format!(
            "no trajectories recorded for evaluation episodes {missing:?}"
        )));
    }

    Ok(all
        .into_iter()
        .filter(|p| episodes.contains(&p.episode))
        .collect())
}
