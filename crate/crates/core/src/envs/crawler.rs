//! Deterministic multi-legged crawler.
//!
//! Four agents each drive one leg with a continuous action pair
//! `(sweep, extend)` in `[-1, 1]`. A leg produces forward thrust only while
//! sweeping its hip backward with the leg extended:
//!
//! - `hip' = clamp(hip + 0.1 * sweep)`
//! - `extension' = clamp(extension + 0.1 * extend)`
//! - `thrust = max(0, -(hip' - hip)) * max(0, extension)`
//!
//! The team reward per step is `0.01 + dx - 0.05 * sum(action^2)` (stability
//! bonus, forward progress with unit time step, control cost). Driving the
//! summed extensions below -3.5 for five consecutive steps flips the body
//! over: the episode ends with an extra -100.

use crate::error::{Error, Result};

pub const CRAWLER_AGENTS: usize = 4;
pub const CRAWLER_ACTION_DIM: usize = 2;

const ANGLE_GAIN: f64 = 0.1;
const CONTROL_COST: f64 = 0.05;
const STABILITY_BONUS: f64 = 0.01;
const TIP_OVER_PENALTY: f64 = -100.0;
const TIP_OVER_SUM: f64 = -3.5;
const TIP_OVER_STEPS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct CrawlerState {
    pub body_x: f64,
    pub hip_angles: Vec<f64>,
    pub extensions: Vec<f64>,
    pub step_count: usize,
    pub instability_counter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrawlerStepOutcome {
    pub team_reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct Crawler {
    state: CrawlerState,
    max_steps: usize,
    /// Persistent zero-torque malfunction flags, kept across resets.
    zero_torque: Vec<bool>,
}

impl Crawler {
    /// Builds the four-legged crawler. Other team sizes are unsupported.
    pub fn new(n_agents: usize) -> Result<Self> {
        if n_agents != CRAWLER_AGENTS {
            return Err(Error::InvalidArgument(format!(
                "crawler supports exactly {CRAWLER_AGENTS} agents, got {n_agents}"
            )));
        }
        Ok(Crawler {
            state: CrawlerState {
                body_x: 0.0,
                hip_angles: vec![0.0; n_agents],
                extensions: vec![0.0; n_agents],
                step_count: 0,
                instability_counter: 0,
            },
            max_steps: 100,
            zero_torque: vec![false; n_agents],
        })
    }

    pub fn state(&self) -> &CrawlerState {
        &self.state
    }

    pub fn n_agents(&self) -> usize {
        CRAWLER_AGENTS
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn reset(&mut self) -> &CrawlerState {
        self.state = CrawlerState {
            body_x: 0.0,
            hip_angles: vec![0.0; CRAWLER_AGENTS],
            extensions: vec![0.0; CRAWLER_AGENTS],
            step_count: 0,
            instability_counter: 0,
        };
        &self.state
    }

    /// Forces an agent's torques to zero for the rest of the run.
    pub fn zero_torque(&mut self, agent: usize) -> Result<()> {
        if agent >= CRAWLER_AGENTS {
            return Err(Error::InvalidArgument(format!(
                "agent {agent} out of range"
            )));
        }
        self.zero_torque[agent] = true;
        Ok(())
    }

    pub fn is_terminal(&self) -> bool {
        self.state.step_count >= self.max_steps
            || self.state.instability_counter >= TIP_OVER_STEPS
    }

    pub fn step(&mut self, actions: &[[f64; CRAWLER_ACTION_DIM]]) -> Result<CrawlerStepOutcome> {
        if self.is_terminal() {
            return Err(Error::EpisodeTerminal);
        }
        if actions.len() != CRAWLER_AGENTS {
            return Err(Error::ShapeMismatch {
                what: "joint action",
                expected: CRAWLER_AGENTS,
                got: actions.len(),
            });
        }

        let mut delta_x = 0.0;
        let mut control = 0.0;
        for leg in 0..CRAWLER_AGENTS {
            let (sweep, extend) = if self.zero_torque[leg] {
                (0.0, 0.0)
            } else {
                (actions[leg][0].clamp(-1.0, 1.0), actions[leg][1].clamp(-1.0, 1.0))
            };
            let hip = self.state.hip_angles[leg];
            let new_hip = (hip + ANGLE_GAIN * sweep).clamp(-1.0, 1.0);
            let new_ext = (self.state.extensions[leg] + ANGLE_GAIN * extend).clamp(-1.0, 1.0);
            let thrust = (-(new_hip - hip)).max(0.0) * self.state.extensions[leg].max(0.0);
            delta_x += thrust;
            control += CONTROL_COST * (sweep * sweep + extend * extend);
            self.state.hip_angles[leg] = new_hip;
            self.state.extensions[leg] = new_ext;
        }

        self.state.body_x += delta_x;
        let mut reward = STABILITY_BONUS + delta_x - control;

        let extension_sum: f64 = self.state.extensions.iter().sum();
        if extension_sum < TIP_OVER_SUM {
            self.state.instability_counter += 1;
        } else {
            self.state.instability_counter = 0;
        }
        let mut done = false;
        if self.state.instability_counter >= TIP_OVER_STEPS {
            reward += TIP_OVER_PENALTY;
            done = true;
        }

        self.state.step_count += 1;
        done |= self.state.step_count >= self.max_steps;
        Ok(CrawlerStepOutcome {
            team_reward: reward,
            done,
        })
    }

    /// Shared observation: all hip angles, all extensions, and the scaled
    /// instability counter. Every agent sees the same vector.
    pub fn observation(&self) -> Vec<f64> {
        let mut obs = Vec::with_capacity(self.observation_size());
        obs.extend_from_slice(&self.state.hip_angles);
        obs.extend_from_slice(&self.state.extensions);
        obs.push(self.state.instability_counter as f64 / TIP_OVER_STEPS as f64);
        obs
    }

    pub fn observation_size(&self) -> usize {
        2 * CRAWLER_AGENTS + 1
    }
}
