//! Fixed-capacity experience replay with oldest-first eviction.

use rand::Rng;

use crate::error::{Error, Result};

/// One stored experience tuple. `A` is the per-agent action representation
/// (a discrete index or a continuous pair); `R` is the reward record (a
/// per-agent vector when individual rewards are observable, a single team
/// scalar otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<A, R> {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<A>,
    pub reward: R,
    pub next_observations: Vec<Vec<f64>>,
    pub done: bool,
}

pub type DiscreteTransition = Transition<usize, Vec<f64>>;
pub type ContinuousTransition = Transition<[f64; 2], f64>;

/// Ring buffer of transitions; size never exceeds capacity and the oldest
/// entry is evicted first.
#[derive(Debug, Clone)]
pub struct ReplayMemory<T> {
    capacity: usize,
    buffer: Vec<T>,
    write_head: usize,
    inserted: u64,
}

impl<T> ReplayMemory<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument(
                "replay capacity must be positive".into(),
            ));
        }
        Ok(ReplayMemory {
            capacity,
            buffer: Vec::new(),
            write_head: 0,
            inserted: 0,
        })
    }

    pub fn push(&mut self, item: T) {
        if self.buffer.len() < self.capacity {
            self.buffer.push(item);
        } else {
            self.buffer[self.write_head] = item;
        }
        self.write_head = (self.write_head + 1) % self.capacity;
        self.inserted += 1;
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total number of insertions over the memory's lifetime.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn get(&self, index: usize) -> &T {
        &self.buffer[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.buffer.iter()
    }

    /// Uniform sample of `batch` stored transitions (with replacement).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, batch: usize) -> Vec<&T> {
        (0..batch)
            .map(|_| &self.buffer[rng.gen_range(0..self.buffer.len())])
            .collect()
    }
}
