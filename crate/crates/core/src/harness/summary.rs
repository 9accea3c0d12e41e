//! Cross-run summary statistics: mean and 95% confidence half-width per
//! metric, split before/after the malfunction plus the final evaluation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::metrics::{read_metrics, Phase, METRICS_FILE};
use crate::harness::CONFIG_FILE;

/// Which slice of a run a statistic describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Bucket {
    /// Evaluations at or before the malfunction episode (all evaluations
    /// when no malfunction is scheduled).
    PreMalfunction,
    /// Evaluations after the malfunction, excluding the final one.
    PostMalfunction,
    /// The single evaluation after training completes.
    Final,
}

impl std::fmt::Display for Bucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Bucket::PreMalfunction => "pre_malfunction",
            Bucket::PostMalfunction => "post_malfunction",
            Bucket::Final => "final",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub bucket: Bucket,
    pub agent: String,
    pub metric: String,
    /// Mean over runs of each run's bucket average.
    pub mean: f64,
    /// 1.96 * sample standard deviation / sqrt(runs); zero for one run.
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub runs: usize,
    /// Set when only one run was summarized: the intervals are degenerate.
    pub single_run: bool,
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket,agent,metric,mean,ci95_half_width\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.bucket, row.agent, row.metric, row.mean, row.half_width
            ));
        }
        out
    }

    pub fn find(&self, bucket: Bucket, agent: &str, metric: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.bucket == bucket && r.agent == agent && r.metric == metric)
    }
}

impl std::fmt::Display for SummaryTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "runs: {}{}", self.runs, if self.single_run { " (single run: intervals degenerate)" } else { "" })?;
        writeln!(f, "{:<18} {:<6} {:<16} {:>14} {:>12}", "bucket", "agent", "metric", "mean", "ci95")?;
        for row in &self.rows {
            writeln!(
                f,
                "{:<18} {:<6} {:<16} {:>14.4} {:>12.4}",
                row.bucket.to_string(),
                row.agent,
                row.metric,
                row.mean,
                row.half_width
            )?;
        }
        Ok(())
    }
}

/// Mean and 95% half-width across per-run values.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n > 0, "mean_ci needs at least one value");
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let half = 1.96 * var.sqrt() / (n as f64).sqrt();
    (mean, half)
}

/// Summarizes a set of completed runs of the same experiment.
///
/// Every run directory must hold the identical experiment config; a mismatch
/// is refused with the list of differing fields.
pub fn summarize(run_dirs: &[PathBuf]) -> Result<SummaryTable> {
    if run_dirs.is_empty() {
        return Err(Error::RunMismatch("no run directories given".into()));
    }
    let reference = load_config_value(&run_dirs[0])?;
    for dir in &run_dirs[1..] {
        let other = load_config_value(dir)?;
        let mut diffs = Vec::new();
        diff_json("", &reference, &other, &mut diffs);
        if !diffs.is_empty() {
            return Err(Error::RunMismatch(format!(
                "{} differs from {} at: {}",
                dir.display(),
                run_dirs[0].display(),
                diffs.join(", ")
            )));
        }
    }
    let config: ExperimentConfig = serde_json::from_value(reference)?;
    let malfunction_episode = config.malfunction.as_ref().map(|m| m.episode);
    let final_episode = config.total_episodes;

    // (bucket, agent, metric) -> per-run bucket means.
    let mut per_run: BTreeMap<(Bucket, String, String), Vec<f64>> = BTreeMap::new();
    for dir in run_dirs {
        let rows = read_metrics(&dir.join(METRICS_FILE))?;
        // (bucket, agent, metric) -> (sum, count) within this run.
        let mut acc: BTreeMap<(Bucket, String, String), (f64, usize)> = BTreeMap::new();
        for row in rows.iter().filter(|r| r.phase == Phase::Eval) {
            if row.metric == "epsilon" {
                continue;
            }
            let bucket = if row.episode >= final_episode {
                Bucket::Final
            } else {
                match malfunction_episode {
                    Some(m) if row.episode > m => Bucket::PostMalfunction,
                    _ => Bucket::PreMalfunction,
                }
            };
            let entry = acc
                .entry((bucket, row.agent.clone(), row.metric.clone()))
                .or_insert((0.0, 0));
            entry.0 += row.value;
            entry.1 += 1;
        }
        for (key, (sum, count)) in acc {
            per_run.entry(key).or_default().push(sum / count as f64);
        }
    }

    let runs = run_dirs.len();
    let mut rows = Vec::new();
    for ((bucket, agent, metric), values) in per_run {
        if values.len() != runs {
            return Err(Error::RunMismatch(format!(
                "metric {metric} ({agent}, {bucket}) present in only {} of {runs} runs",
                values.len()
            )));
        }
        let (mean, half_width) = mean_ci(&values);
        rows.push(SummaryRow {
            bucket,
            agent,
            metric,
            mean,
            half_width,
        });
    }
    Ok(SummaryTable {
        runs,
        single_run: runs == 1,
        rows,
    })
}

fn load_config_value(dir: &Path) -> Result<serde_json::Value> {
    let path = dir.join(CONFIG_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Records the JSON paths at which two documents differ.
fn diff_json(path: &str, a: &serde_json::Value, b: &serde_json::Value, out: &mut Vec<String>) {
    use serde_json::Value;
    match (a, b) {
        (Value::Object(ma), Value::Object(mb)) => {
            let keys: std::collections::BTreeSet<&String> = ma.keys().chain(mb.keys()).collect();
            for key in keys {
                let sub = format!("{path}/{key}");
                match (ma.get(key), mb.get(key)) {
                    (Some(va), Some(vb)) => diff_json(&sub, va, vb, out),
                    _ => out.push(sub),
                }
            }
        }
        (Value::Array(va), Value::Array(vb)) if va.len() == vb.len() => {
            for (i, (ea, eb)) in va.iter().zip(vb).enumerate() {
                diff_json(&format!("{path}[{i}]"), ea, eb, out);
            }
        }
        _ => {
            if a != b {
                out.push(if path.is_empty() { "/".into() } else { path.into() });
            }
        }
    }
}
