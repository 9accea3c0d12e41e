//! Cooperative multi-agent grid world.
//!
//! Agents move on a rectangular grid and must jointly consume every
//! resource. Moving into an idle neighbor pushes it one cell onward. Each
//! consumption pays `consume_reward` to the consuming agent; every step an
//! agent stands off the resource cells it pays `step_penalty_per_resource`
//! per still-unconsumed resource (resource cells are safe spots, consumed
//! or not). Episodes end when everything is consumed or `max_steps` is hit.
//!
//! Joint moves resolve in a fixed deterministic order so that recorded
//! action sequences replay bit-identically:
//!   1. immobilized agents are coerced to idle;
//!   2. pushes resolve in pusher-index order (pusher stays, pushee slides
//!      one cell if that cell is free and in bounds, else both stay);
//!   3. remaining movers move if their destination ends the step unoccupied;
//!      movers contending for one cell yield to the lowest agent index;
//!   4. consumption, then penalties, then the step counter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid coordinates; `x` grows rightward, `y` grows upward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

/// The five primitive moves; pushing is emergent, not a sixth action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridAction {
    Up,
    Down,
    Left,
    Right,
    Idle,
}

/// All actions in canonical index order (the discrete learner's output order).
pub const GRID_ACTIONS: [GridAction; 5] = [
    GridAction::Up,
    GridAction::Down,
    GridAction::Left,
    GridAction::Right,
    GridAction::Idle,
];

impl GridAction {
    /// `(dx, dy)` displacement; `Idle` is `(0, 0)`.
    fn delta(self) -> (isize, isize) {
        match self {
            GridAction::Up => (0, 1),
            GridAction::Down => (0, -1),
            GridAction::Left => (-1, 0),
            GridAction::Right => (1, 0),
            GridAction::Idle => (0, 0),
        }
    }

    pub fn index(self) -> usize {
        GRID_ACTIONS.iter().position(|&a| a == self).unwrap()
    }
}

fn default_consume_reward() -> f64 {
    10.0
}

fn default_step_penalty() -> f64 {
    -1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub agent_starts: Vec<Cell>,
    pub resource_cells: Vec<Cell>,
    pub max_steps: usize,
    #[serde(default = "default_consume_reward")]
    pub consume_reward: f64,
    #[serde(default = "default_step_penalty")]
    pub step_penalty_per_resource: f64,
}

impl GridConfig {
    /// The default four-agent experiment layout on a 10x10 board.
    ///
    /// Each corner agent sits two cells from its nearest resource. The last
    /// agent's resource lies in the interior next to its corner, so when that
    /// agent is immobilized the resource is only reachable by a long detour
    /// from the other side of the board (a cornered agent cannot be pushed
    /// inward: the cells behind it do not exist).
    pub fn default_layout() -> Self {
        GridConfig {
            width: 10,
            height: 10,
            agent_starts: vec![
                Cell::new(0, 0), // blue
                Cell::new(0, 9), // red
                Cell::new(9, 0), // orange
                Cell::new(9, 9), // green
            ],
            resource_cells: vec![
                Cell::new(0, 2),
                Cell::new(0, 7),
                Cell::new(9, 2),
                Cell::new(8, 8),
            ],
            max_steps: 30,
            consume_reward: default_consume_reward(),
            step_penalty_per_resource: default_step_penalty(),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.agent_starts.len()
    }

    pub fn n_resources(&self) -> usize {
        self.resource_cells.len()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("grid dimensions must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        if self.agent_starts.is_empty() {
            return Err(Error::Config("need at least one agent".into()));
        }
        for (what, cells) in [
            ("agent start", &self.agent_starts),
            ("resource", &self.resource_cells),
        ] {
            for &c in cells.iter() {
                if !self.contains(c) {
                    return Err(Error::Config(format!(
                        "{what} ({}, {}) outside {}x{} grid",
                        c.x, c.y, self.width, self.height
                    )));
                }
            }
            for (i, &a) in cells.iter().enumerate() {
                if cells[i + 1..].contains(&a) {
                    return Err(Error::Config(format!(
                        "duplicate {what} at ({}, {})",
                        a.x, a.y
                    )));
                }
            }
        }
        Ok(())
    }

    /// Observation vector length: own position, all positions, resource flags.
    pub fn observation_size(&self) -> usize {
        2 + 2 * self.n_agents() + self.n_resources()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridWorldState {
    pub agent_positions: Vec<Cell>,
    pub resource_consumed: Vec<bool>,
    pub step_count: usize,
    pub immobilized: Vec<bool>,
}

/// One step's outcome: per-agent rewards and the terminal flag.
#[derive(Debug, Clone, PartialEq)]
pub struct GridStepOutcome {
    pub rewards: Vec<f64>,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    config: GridConfig,
    state: GridWorldState,
    /// Persistent malfunction flags, re-applied on every reset.
    malfunction: Vec<bool>,
}

impl GridWorld {
    pub fn new(config: GridConfig) -> Result<Self> {
        config.validate()?;
        let malfunction = vec![false; config.n_agents()];
        let state = initial_state(&config, &malfunction);
        Ok(GridWorld {
            config,
            state,
            malfunction,
        })
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn state(&self) -> &GridWorldState {
        &self.state
    }

    pub fn n_agents(&self) -> usize {
        self.config.n_agents()
    }

    /// Starts a fresh episode. Malfunctions persist across resets.
    pub fn reset(&mut self) -> &GridWorldState {
        self.state = initial_state(&self.config, &self.malfunction);
        &self.state
    }

    /// Immobilizes an agent for the rest of the run: its own actions become
    /// idle, but it can still be pushed.
    pub fn immobilize(&mut self, agent: usize) -> Result<()> {
        if agent >= self.n_agents() {
            return Err(Error::InvalidArgument(format!(
                "agent {agent} out of range"
            )));
        }
        self.malfunction[agent] = true;
        self.state.immobilized[agent] = true;
        Ok(())
    }

    pub fn is_terminal(&self) -> bool {
        self.state.resource_consumed.iter().all(|&c| c)
            || self.state.step_count >= self.config.max_steps
    }

    pub fn step(&mut self, actions: &[GridAction]) -> Result<GridStepOutcome> {
        if self.is_terminal() {
            return Err(Error::EpisodeTerminal);
        }
        if actions.len() != self.n_agents() {
            return Err(Error::ShapeMismatch {
                what: "joint action",
                expected: self.n_agents(),
                got: actions.len(),
            });
        }
        let (positions, consumed, rewards) = resolve_step(
            &self.config,
            &self.state.agent_positions,
            &self.state.resource_consumed,
            &self.state.immobilized,
            actions,
        );
        self.state.agent_positions = positions;
        self.state.resource_consumed = consumed;
        self.state.step_count += 1;
        Ok(GridStepOutcome {
            rewards,
            done: self.is_terminal(),
        })
    }

    /// Flat observation for one agent, every component normalized to [0, 1]:
    /// own position, then all agent positions, then consumed flags.
    pub fn observation(&self, agent: usize) -> Vec<f64> {
        let cfg = &self.config;
        let nx = (cfg.width.max(2) - 1) as f64;
        let ny = (cfg.height.max(2) - 1) as f64;
        let mut obs = Vec::with_capacity(cfg.observation_size());
        let own = self.state.agent_positions[agent];
        obs.push(own.x as f64 / nx);
        obs.push(own.y as f64 / ny);
        for &p in &self.state.agent_positions {
            obs.push(p.x as f64 / nx);
            obs.push(p.y as f64 / ny);
        }
        for &c in &self.state.resource_consumed {
            obs.push(if c { 1.0 } else { 0.0 });
        }
        obs
    }
}

fn initial_state(config: &GridConfig, malfunction: &[bool]) -> GridWorldState {
    GridWorldState {
        agent_positions: config.agent_starts.clone(),
        resource_consumed: vec![false; config.n_resources()],
        step_count: 0,
        immobilized: malfunction.to_vec(),
    }
}

/// Pure single-step transition shared by the environment and the optimal
/// return search. Returns (positions, consumed flags, per-agent rewards).
pub(crate) fn resolve_step(
    config: &GridConfig,
    positions: &[Cell],
    consumed: &[bool],
    immobilized: &[bool],
    actions: &[GridAction],
) -> (Vec<Cell>, Vec<bool>, Vec<f64>) {
    let n = positions.len();
    let mut pos = positions.to_vec();
    let mut taken = consumed.to_vec();
    let mut rewards = vec![0.0; n];

    // 1. Immobilized agents cannot act on their own.
    let effective: Vec<GridAction> = actions
        .iter()
        .enumerate()
        .map(|(i, &a)| if immobilized[i] { GridAction::Idle } else { a })
        .collect();

    let index_of = |c: Cell| c.y * config.width + c.x;
    let mut occupant: Vec<Option<usize>> = vec![None; config.width * config.height];
    for (i, &p) in pos.iter().enumerate() {
        occupant[index_of(p)] = Some(i);
    }

    let shifted = |c: Cell, action: GridAction| -> Option<Cell> {
        let (dx, dy) = action.delta();
        let x = c.x as isize + dx;
        let y = c.y as isize + dy;
        if x < 0 || y < 0 {
            return None;
        }
        let cell = Cell::new(x as usize, y as usize);
        config.contains(cell).then_some(cell)
    };

    // `resolved` marks agents whose final cell is already decided.
    let mut resolved = vec![false; n];

    // 2. Pushes, in pusher-index order. A non-idle move into an idle agent is
    // a push; the pusher's fate is settled either way (it stays in place).
    for pusher in 0..n {
        if effective[pusher] == GridAction::Idle || resolved[pusher] {
            continue;
        }
        let Some(dest) = shifted(pos[pusher], effective[pusher]) else {
            continue;
        };
        let Some(pushee) = occupant[index_of(dest)] else {
            continue;
        };
        if effective[pushee] != GridAction::Idle || resolved[pushee] {
            continue;
        }
        resolved[pusher] = true;
        if let Some(target) = shifted(dest, effective[pusher]) {
            if occupant[index_of(target)].is_none() {
                occupant[index_of(dest)] = None;
                occupant[index_of(target)] = Some(pushee);
                pos[pushee] = target;
                resolved[pushee] = true;
            }
        }
        // Blocked push: both stay (pusher already resolved, pushee idle).
    }

    // 3. Remaining movers. Iteratively cancel moves whose destination will
    // stay occupied or is claimed by a lower-indexed mover; a cancelled mover
    // becomes an obstacle itself, so repeat until stable. Mutual swaps
    // survive: both origin cells end the step empty.
    let mut dest: Vec<Option<Cell>> = (0..n)
        .map(|i| {
            if resolved[i] || effective[i] == GridAction::Idle {
                None
            } else {
                shifted(pos[i], effective[i])
            }
        })
        .collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            let Some(d) = dest[i] else { continue };
            let blocked_by_stationary = (0..n).any(|j| j != i && dest[j].is_none() && pos[j] == d);
            let lost_contention = (0..i).any(|j| dest[j] == Some(d));
            if blocked_by_stationary || lost_contention {
                dest[i] = None;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for i in 0..n {
        if let Some(d) = dest[i] {
            occupant[index_of(pos[i])] = None;
            pos[i] = d;
        }
    }
    debug_assert!(
        {
            let mut cells: Vec<usize> = pos.iter().map(|&c| index_of(c)).collect();
            cells.sort_unstable();
            cells.windows(2).all(|w| w[0] != w[1])
        },
        "two agents on one cell"
    );

    // 4. Consumption: first (only) agent standing on an unconsumed resource
    // takes it.
    for (i, &p) in pos.iter().enumerate() {
        for (r, &cell) in config.resource_cells.iter().enumerate() {
            if !taken[r] && cell == p {
                taken[r] = true;
                rewards[i] += config.consume_reward;
            }
        }
    }

    // 5. Penalties after consumption; any resource cell is a safe spot.
    let unconsumed = taken.iter().filter(|&&c| !c).count();
    if unconsumed > 0 {
        for (i, &p) in pos.iter().enumerate() {
            let safe = config.resource_cells.contains(&p);
            if !safe {
                rewards[i] += config.step_penalty_per_resource * unconsumed as f64;
            }
        }
    }

    (pos, taken, rewards)
}
