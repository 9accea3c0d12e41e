//! Metrics records and their CSV form: `episode,phase,agent,metric,value`.
//!
//! One logical record per (episode, phase) expands to one CSV row per
//! metric. Everything written here is a pure function of (config, seed);
//! wall-clock timings go to a separate file so metrics stay byte-stable.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Train,
    Eval,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Train => "train",
            Phase::Eval => "eval",
        })
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Phase::Train),
            "eval" => Ok(Phase::Eval),
            other => Err(Error::InvalidArgument(format!("unknown phase '{other}'"))),
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub episode: usize,
    pub phase: Phase,
    /// Agent index as a string, or "team" for team-level metrics.
    pub agent: String,
    pub metric: String,
    pub value: f64,
}

/// All measurements taken at one (episode, phase) point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub episode: usize,
    pub phase: Phase,
    /// Per-agent returns (populated in the discrete domain).
    pub per_agent_returns: Vec<f64>,
    pub team_return: f64,
    pub episode_length: f64,
    pub epsilon: f64,
    /// Resources consumed (grid evaluations).
    pub consumed: Option<f64>,
    /// Final body position (crawler evaluations).
    pub origin_distance: Option<f64>,
}

impl MetricsRecord {
    pub fn rows(&self) -> Vec<MetricRow> {
        let mut rows = Vec::new();
        let mut push = |agent: String, metric: &str, value: f64| {
            rows.push(MetricRow {
                episode: self.episode,
                phase: self.phase,
                agent,
                metric: metric.to_string(),
                value,
            });
        };
        for (i, &r) in self.per_agent_returns.iter().enumerate() {
            push(i.to_string(), "return", r);
        }
        push("team".into(), "return", self.team_return);
        push("team".into(), "length", self.episode_length);
        push("team".into(), "epsilon", self.epsilon);
        if let Some(c) = self.consumed {
            push("team".into(), "consumed", c);
        }
        if let Some(d) = self.origin_distance {
            push("team".into(), "origin_distance", d);
        }
        rows
    }
}

/// Append-only metrics file for one run.
pub struct MetricsWriter {
    out: BufWriter<File>,
}

pub const METRICS_FILE: &str = "metrics.csv";
pub const TIMINGS_FILE: &str = "timings.csv";

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path)?;
        let mut out = BufWriter::new(file);
        writeln!(out, "episode,phase,agent,metric,value")?;
        Ok(MetricsWriter { out })
    }

    pub fn append(&mut self, record: &MetricsRecord) -> Result<()> {
        for row in record.rows() {
            writeln!(
                self.out,
                "{},{},{},{},{}",
                row.episode, row.phase, row.agent, row.metric, row.value
            )?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Wall-clock episode durations, kept out of the deterministic metrics.
pub struct TimingsWriter {
    out: BufWriter<File>,
}

impl TimingsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path)?;
        let mut out = BufWriter::new(file);
        writeln!(out, "episode,phase,seconds")?;
        Ok(TimingsWriter { out })
    }

    pub fn append(&mut self, episode: usize, phase: Phase, seconds: f64) -> Result<()> {
        writeln!(self.out, "{episode},{phase},{seconds}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Parses a metrics file back into rows.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let expected = ["episode", "phase", "agent", "metric", "value"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::InvalidArgument(format!(
            "unexpected metrics header in {}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 5 {
            return Err(Error::InvalidArgument(format!(
                "malformed metrics row in {}",
                path.display()
            )));
        }
        let parse_err = |what: &str| {
            Error::InvalidArgument(format!("bad {what} in metrics row: {record:?}"))
        };
        rows.push(MetricRow {
            episode: record[0].parse().map_err(|_| parse_err("episode"))?,
            phase: record[1].parse()?,
            agent: record[2].to_string(),
            metric: record[3].to_string(),
            value: record[4].parse().map_err(|_| parse_err("value"))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_expands_to_expected_rows() {
        let record = MetricsRecord {
            episode: 12,
            phase: Phase::Eval,
            per_agent_returns: vec![1.0, -2.0],
            team_return: -1.0,
            episode_length: 30.0,
            epsilon: 0.0,
            consumed: Some(3.0),
            origin_distance: None,
        };
        let rows = record.rows();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].agent, "0");
        assert_eq!(rows[2].agent, "team");
        assert!(rows.iter().any(|r| r.metric == "consumed"));
        assert!(!rows.iter().any(|r| r.metric == "origin_distance"));
    }

    #[test]
    fn write_then_read_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(METRICS_FILE);
        let record = MetricsRecord {
            episode: 3,
            phase: Phase::Train,
            per_agent_returns: vec![0.5],
            team_return: 0.5,
            episode_length: 7.0,
            epsilon: 0.25,
            consumed: None,
            origin_distance: Some(1.2345678901234567),
        };
        let mut writer = MetricsWriter::create(&path).unwrap();
        writer.append(&record).unwrap();
        writer.finish().unwrap();
        let rows = read_metrics(&path).unwrap();
        assert_eq!(rows.len(), 5);
        let dist = rows.iter().find(|r| r.metric == "origin_distance").unwrap();
        // Shortest round-trip float formatting preserves the exact value.
        assert_eq!(dist.value, 1.2345678901234567);
    }
}
