//! Exact optimal undiscounted return for small grid instances.
//!
//! Branch-and-bound best-first search over joint action sequences, using the
//! true step rules (pushes included). States that differ only by a
//! permutation of healthy agents are merged, since healthy agents are
//! interchangeable for the team objective. The heuristic is an optimistic
//! bound on the remaining return, so the first terminal state popped carries
//! the exact team optimum.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::envs::grid::{resolve_step, Cell, GridAction, GridConfig, GRID_ACTIONS};
use crate::error::{Error, Result};

/// Search limits: instances beyond these are rejected up front.
const MAX_CELLS: usize = 100;
const MAX_AGENTS: usize = 4;
const MAX_RESOURCES: usize = 4;
const MAX_HORIZON: usize = 30;
const DEFAULT_NODE_BUDGET: usize = 4_000_000;

/// Optimal undiscounted returns for one instance.
///
/// `per_agent` is the split realized by one optimal joint plan; healthy
/// agents are interchangeable, so equally optimal plans may permute the
/// healthy entries.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalReturn {
    pub team: f64,
    pub per_agent: Vec<f64>,
}

pub fn optimal_grid_return(config: &GridConfig, immobilized: &[bool]) -> Result<OptimalReturn> {
    optimal_grid_return_with_budget(config, immobilized, DEFAULT_NODE_BUDGET)
}

pub fn optimal_grid_return_with_budget(
    config: &GridConfig,
    immobilized: &[bool],
    node_budget: usize,
) -> Result<OptimalReturn> {
    config.validate()?;
    let n = config.n_agents();
    let m = config.n_resources();
    if immobilized.len() != n {
        return Err(Error::ShapeMismatch {
            what: "immobilized flags",
            expected: n,
            got: immobilized.len(),
        });
    }
    if config.width * config.height > MAX_CELLS
        || n > MAX_AGENTS
        || m > MAX_RESOURCES
        || config.max_steps > MAX_HORIZON
    {
        return Err(Error::SearchBudget(format!(
            "instance exceeds search limits ({}x{} grid, {n} agents, {m} resources, {} steps)",
            config.width, config.height, config.max_steps
        )));
    }
    if config.consume_reward < 0.0 || config.step_penalty_per_resource > 0.0 {
        return Err(Error::SearchBudget(
            "optimal search requires consume_reward >= 0 and non-positive step penalty".into(),
        ));
    }

    Search::new(config, immobilized).run(node_budget)
}

/// Returns carried per canonical state; positions, consumed mask, and step
/// decode from the packed key.
#[derive(Clone, Copy)]
struct Value {
    team: f64,
    per_agent: [f64; MAX_AGENTS],
}

struct Search<'a> {
    config: &'a GridConfig,
    immobilized: &'a [bool],
    healthy: Vec<usize>,
}

/// Max-heap entry ordered by bound, FIFO on ties for determinism.
struct HeapEntry {
    f: f64,
    g: f64,
    seq: u64,
    key: u64,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.f
            .total_cmp(&other.f)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl<'a> Search<'a> {
    fn new(config: &'a GridConfig, immobilized: &'a [bool]) -> Self {
        let healthy = (0..config.n_agents())
            .filter(|&i| !immobilized[i])
            .collect();
        Search {
            config,
            immobilized,
            healthy,
        }
    }

    fn cell_index(&self, c: Cell) -> u64 {
        (c.y * self.config.width + c.x) as u64
    }

    fn cell_from_index(&self, idx: u64) -> Cell {
        Cell::new(
            (idx as usize) % self.config.width,
            (idx as usize) / self.config.width,
        )
    }

    /// Sorts healthy agents by cell index (carrying their return split
    /// along) and packs positions, consumed mask, and step into a key.
    fn canonical_key(
        &self,
        positions: &mut [Cell],
        per_agent: &mut [f64; MAX_AGENTS],
        consumed_mask: u16,
        step: usize,
    ) -> u64 {
        let mut entries: Vec<(u64, f64)> = self
            .healthy
            .iter()
            .map(|&i| (self.cell_index(positions[i]), per_agent[i]))
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for (&slot, &(cell, ret)) in self.healthy.iter().zip(entries.iter()) {
            positions[slot] = self.cell_from_index(cell);
            per_agent[slot] = ret;
        }
        let mut key: u64 = 0;
        for (i, &p) in positions.iter().enumerate() {
            key |= self.cell_index(p) << (7 * i);
        }
        key |= (consumed_mask as u64) << 28;
        key |= (step as u64) << 32;
        key
    }

    fn unpack(&self, key: u64) -> (Vec<Cell>, u16, usize) {
        let n = self.config.n_agents();
        let positions = (0..n)
            .map(|i| self.cell_from_index((key >> (7 * i)) & 0x7f))
            .collect();
        let mask = ((key >> 28) & 0xf) as u16;
        let step = (key >> 32) as usize;
        (positions, mask, step)
    }

    /// Optimistic bound on the return still collectible from this state.
    ///
    /// Every unconsumed resource is assumed consumed at the earliest step any
    /// agent could reach it (immobilized agents move only after a healthy
    /// agent has had time to reach them, then at most one cell per step). The
    /// penalty floor counts, per future step, resources that certainly remain
    /// unconsumed times agents that certainly cannot stand on a resource cell
    /// yet.
    fn upper_bound(&self, positions: &[Cell], consumed_mask: u16, step: usize) -> f64 {
        let remaining = self.config.max_steps - step;
        if remaining == 0 {
            return 0.0;
        }
        let m = self.config.n_resources();
        let unconsumed: Vec<usize> = (0..m)
            .filter(|&r| consumed_mask & (1 << r) == 0)
            .collect();
        if unconsumed.is_empty() {
            return 0.0;
        }

        // Earliest step a healthy agent could first stand next to each
        // immobilized agent, for the push-speed bound.
        let adjacency_lead: Vec<Option<usize>> = (0..self.config.n_agents())
            .map(|i| {
                if !self.immobilized[i] {
                    return None;
                }
                let lead = self
                    .healthy
                    .iter()
                    .map(|&h| positions[h].manhattan(positions[i]).saturating_sub(1))
                    .min();
                Some(lead.unwrap_or(usize::MAX))
            })
            .collect();
        let reach_time = |agent: usize, target: Cell| -> usize {
            let walk = positions[agent].manhattan(target);
            match adjacency_lead[agent] {
                None => walk,
                Some(usize::MAX) => usize::MAX,
                Some(lead) => lead.saturating_add(walk),
            }
        };

        let earliest: Vec<usize> = unconsumed
            .iter()
            .map(|&r| {
                let cell = self.config.resource_cells[r];
                (0..self.config.n_agents())
                    .map(|a| reach_time(a, cell))
                    .min()
                    .unwrap_or(usize::MAX)
                    .max(1)
            })
            .collect();
        // Earliest step each agent could first stand on any resource cell
        // (consumed cells count: they are safe spots too).
        let on_resource_time: Vec<usize> = (0..self.config.n_agents())
            .map(|a| {
                self.config
                    .resource_cells
                    .iter()
                    .map(|&c| reach_time(a, c))
                    .min()
                    .unwrap_or(usize::MAX)
            })
            .collect();

        let reward: f64 = earliest
            .iter()
            .filter(|&&e| e <= remaining)
            .map(|_| self.config.consume_reward)
            .sum();
        let horizon = if earliest.iter().all(|&e| e <= remaining) {
            earliest.iter().copied().max().unwrap()
        } else {
            remaining
        };
        let mut penalty = 0.0;
        for t in 1..=horizon {
            let still = earliest.iter().filter(|&&e| e > t).count();
            let off = on_resource_time.iter().filter(|&&w| w > t).count();
            penalty += self.config.step_penalty_per_resource * (still * off) as f64;
        }
        reward + penalty
    }

    fn run(&self, node_budget: usize) -> Result<OptimalReturn> {
        let n = self.config.n_agents();
        let consumed_all = (1u16 << self.config.n_resources()) - 1;

        let mut positions = self.config.agent_starts.clone();
        let mut split = [0.0; MAX_AGENTS];
        let root_key = self.canonical_key(&mut positions, &mut split, 0, 0);

        let mut best: HashMap<u64, Value> = HashMap::new();
        let mut heap = BinaryHeap::new();
        let mut seq: u64 = 0;

        best.insert(
            root_key,
            Value {
                team: 0.0,
                per_agent: split,
            },
        );
        heap.push(HeapEntry {
            f: self.upper_bound(&positions, 0, 0),
            g: 0.0,
            seq,
            key: root_key,
        });

        let mut expansions = 0usize;
        while let Some(entry) = heap.pop() {
            let value = best[&entry.key];
            if entry.g < value.team {
                continue; // superseded by a better path to the same state
            }
            let (positions, mask, step) = self.unpack(entry.key);
            if mask == consumed_all || step >= self.config.max_steps {
                return Ok(OptimalReturn {
                    team: value.team,
                    per_agent: value.per_agent[..n].to_vec(),
                });
            }
            expansions += 1;
            if expansions > node_budget {
                return Err(Error::SearchBudget(format!(
                    "optimal search exceeded {node_budget} node expansions"
                )));
            }

            let consumed: Vec<bool> = (0..self.config.n_resources())
                .map(|r| mask & (1 << r) != 0)
                .collect();
            let mut actions = vec![GridAction::Idle; n];
            self.for_each_joint_action(&mut actions, 0, &mut |joint| {
                let (mut next_pos, taken, rewards) =
                    resolve_step(self.config, &positions, &consumed, self.immobilized, joint);
                let mut next_mask = 0u16;
                for (r, &c) in taken.iter().enumerate() {
                    if c {
                        next_mask |= 1 << r;
                    }
                }
                let team = value.team + rewards.iter().sum::<f64>();
                let mut per_agent = value.per_agent;
                for (slot, &r) in rewards.iter().enumerate() {
                    per_agent[slot] += r;
                }
                let key = self.canonical_key(&mut next_pos, &mut per_agent, next_mask, step + 1);
                let known = best
                    .get(&key)
                    .map(|v| v.team)
                    .unwrap_or(f64::NEG_INFINITY);
                if team > known {
                    best.insert(key, Value { team, per_agent });
                    let bound = if next_mask == consumed_all {
                        0.0
                    } else {
                        self.upper_bound(&next_pos, next_mask, step + 1)
                    };
                    seq += 1;
                    heap.push(HeapEntry {
                        f: team + bound,
                        g: team,
                        seq,
                        key,
                    });
                }
            });
        }
        unreachable!("terminal states are always reachable within max_steps");
    }

    /// Enumerates joint actions; immobilized agents stay on idle.
    fn for_each_joint_action(
        &self,
        actions: &mut Vec<GridAction>,
        agent: usize,
        visit: &mut impl FnMut(&[GridAction]),
    ) {
        if agent == actions.len() {
            visit(actions);
            return;
        }
        if self.immobilized[agent] {
            actions[agent] = GridAction::Idle;
            self.for_each_joint_action(actions, agent + 1, visit);
            return;
        }
        for &a in &GRID_ACTIONS {
            actions[agent] = a;
            self.for_each_joint_action(actions, agent + 1, visit);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(
        (width, height): (usize, usize),
        starts: &[(usize, usize)],
        resources: &[(usize, usize)],
        max_steps: usize,
    ) -> GridConfig {
        GridConfig {
            width,
            height,
            agent_starts: starts.iter().map(|&(x, y)| Cell::new(x, y)).collect(),
            resource_cells: resources.iter().map(|&(x, y)| Cell::new(x, y)).collect(),
            max_steps,
            consume_reward: 10.0,
            step_penalty_per_resource: -1.0,
        }
    }

    /// Exhaustive maximum over every joint action sequence; the independent
    /// check for the branch-and-bound search. Only viable for tiny instances.
    fn exhaustive_optimum(cfg: &GridConfig, immobilized: &[bool]) -> f64 {
        fn recurse(
            cfg: &GridConfig,
            immobilized: &[bool],
            positions: &[Cell],
            consumed: &[bool],
            step: usize,
            acc: f64,
        ) -> f64 {
            if consumed.iter().all(|&c| c) || step >= cfg.max_steps {
                return acc;
            }
            let n = positions.len();
            let mut best = f64::NEG_INFINITY;
            let combos = 5usize.pow(n as u32);
            for code in 0..combos {
                let mut joint = Vec::with_capacity(n);
                let mut c = code;
                for _ in 0..n {
                    joint.push(GRID_ACTIONS[c % 5]);
                    c /= 5;
                }
                let (pos, taken, rewards) =
                    resolve_step(cfg, positions, consumed, immobilized, &joint);
                let total = acc + rewards.iter().sum::<f64>();
                let value = recurse(cfg, immobilized, &pos, &taken, step + 1, total);
                if value > best {
                    best = value;
                }
            }
            best
        }
        let consumed = vec![false; cfg.n_resources()];
        recurse(cfg, immobilized, &cfg.agent_starts, &consumed, 0, 0.0)
    }

    #[test]
    fn adjacent_single_resource_is_worth_full_reward() {
        let cfg = config((5, 5), &[(1, 1)], &[(1, 2)], 10);
        let opt = optimal_grid_return(&cfg, &[false]).unwrap();
        assert_eq!(opt.team, 10.0);
        assert_eq!(opt.per_agent, vec![10.0]);
    }

    #[test]
    fn zero_resources_yield_zero() {
        let cfg = config((4, 4), &[(0, 0), (3, 3)], &[], 10);
        let opt = optimal_grid_return(&cfg, &[false, false]).unwrap();
        assert_eq!(opt.team, 0.0);
    }

    #[test]
    fn immobilized_loner_accumulates_pure_penalties() {
        let cfg = config((6, 6), &[(0, 0)], &[(5, 5)], 8);
        let opt = optimal_grid_return(&cfg, &[true]).unwrap();
        // One unconsumed resource, one stranded agent, eight steps.
        assert_eq!(opt.team, -8.0);
        assert_eq!(opt.per_agent, vec![-8.0]);
    }

    #[test]
    fn matches_exhaustive_search_single_agent() {
        let cfg = config((4, 4), &[(0, 0)], &[(2, 1)], 6);
        let expected = exhaustive_optimum(&cfg, &[false]);
        let opt = optimal_grid_return(&cfg, &[false]).unwrap();
        assert_eq!(opt.team, expected);
        // Distance 3: two penalty steps then consumption.
        assert_eq!(opt.team, 10.0 - 2.0);
    }

    #[test]
    fn matches_exhaustive_search_two_agents_two_resources() {
        let cfg = config((4, 3), &[(0, 0), (3, 2)], &[(1, 1), (2, 1)], 4);
        let expected = exhaustive_optimum(&cfg, &[false, false]);
        let opt = optimal_grid_return(&cfg, &[false, false]).unwrap();
        assert_eq!(opt.team, expected);
    }

    #[test]
    fn matches_exhaustive_search_with_immobilized_pushee() {
        // The immobilized agent sits one cell from the resource with a
        // healthy pusher right behind it: one push finishes the episode.
        let cfg = config((5, 3), &[(1, 1), (2, 1)], &[(3, 1)], 4);
        let immobilized = [false, true];
        let expected = exhaustive_optimum(&cfg, &immobilized);
        let opt = optimal_grid_return(&cfg, &immobilized).unwrap();
        assert_eq!(opt.team, expected);
        // Push on the first step: pushee consumes, pusher stays off-resource
        // but the episode ends with everything consumed.
        assert_eq!(opt.team, 10.0);
    }

    #[test]
    fn matches_exhaustive_search_two_agents_shared_resource() {
        let cfg = config((3, 3), &[(0, 0), (2, 2)], &[(1, 1)], 4);
        let expected = exhaustive_optimum(&cfg, &[false, false]);
        let opt = optimal_grid_return(&cfg, &[false, false]).unwrap();
        assert_eq!(opt.team, expected);
    }

    #[test]
    fn oversized_instance_is_rejected() {
        let cfg = config((20, 20), &[(0, 0)], &[(5, 5)], 10);
        assert!(matches!(
            optimal_grid_return(&cfg, &[false]),
            Err(Error::SearchBudget(_))
        ));
        let cfg = config((5, 5), &[(0, 0)], &[(3, 3)], 60);
        assert!(matches!(
            optimal_grid_return(&cfg, &[false]),
            Err(Error::SearchBudget(_))
        ));
    }

    #[test]
    fn tiny_node_budget_reports_capacity_error() {
        let cfg = GridConfig::default_layout();
        assert!(matches!(
            optimal_grid_return_with_budget(&cfg, &[false; 4], 1),
            Err(Error::SearchBudget(_))
        ));
    }

    #[test]
    fn default_layout_healthy_optimum() {
        let cfg = GridConfig::default_layout();
        let opt = optimal_grid_return(&cfg, &[false; 4]).unwrap();
        // Every agent is two cells from its resource: one all-off penalty
        // step, then four simultaneous consumptions.
        assert_eq!(opt.team, 24.0);
        assert_eq!(opt.per_agent, vec![6.0; 4]);
    }

    #[test]
    fn default_layout_immobilized_green_optimum() {
        let cfg = GridConfig::default_layout();
        let opt = optimal_grid_return(&cfg, &[false, false, false, true]).unwrap();
        // Healthy agents consume their own resources at step 2; the nearest
        // healthy agent then walks 7 cells to the stranded corner resource
        // (the cornered agent cannot be pushed inward), consuming at step 9.
        assert_eq!(opt.team, 11.0);
    }
}
