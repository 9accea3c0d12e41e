//! Linear exploration schedule with reset support.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear decay from `start` to `end` over `decay_horizon` episodes, counted
/// from the most recent reset marker. Resetting the marker restarts the
/// decay, which is how exploration is re-opened after a malfunction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_horizon: usize,
}

impl EpsilonSchedule {
    pub fn new(start: f64, end: f64, decay_horizon: usize) -> Result<Self> {
        let schedule = EpsilonSchedule {
            start,
            end,
            decay_horizon,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("start", self.start), ("end", self.end)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "epsilon {name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Epsilon for `episode`, decaying from the most recent `reset_marker`.
    pub fn value(&self, episode: usize, reset_marker: usize) -> f64 {
        let elapsed = episode.saturating_sub(reset_marker);
        if self.decay_horizon == 0 || elapsed >= self.decay_horizon {
            return self.end;
        }
        let frac = elapsed as f64 / self.decay_horizon as f64;
        self.start + (self.end - self.start) * frac
    }
}
