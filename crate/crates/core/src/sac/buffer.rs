use rand::seq::index;
use rand::Rng;

use super::SacError;

/// One stored transition. `reward` is whatever the learner should regress
/// on: the environment reward plus any shaping applied at collection time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Experience {
    pub obs: [f32; 2],
    pub action: usize,
    pub reward: f64,
    pub next_obs: [f32; 2],
    /// No bootstrapping past this transition.
    pub terminal: bool,
}

/// Fixed-capacity FIFO replay memory.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Experience>,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, items: Vec::with_capacity(capacity), head: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Appends, overwriting the oldest entry once full.
    pub fn push(&mut self, e: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(e);
        } else {
            self.items[self.head] = e;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Stored transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        let (newer, older) = self.items.split_at(self.head);
        older.iter().chain(newer.iter())
    }

    /// `n` distinct entries drawn uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Experience>, SacError> {
        if n == 0 || self.items.len() < n {
            return Err(SacError::InsufficientData { have: self.items.len(), need: n.max(1) });
        }
        Ok(index::sample(rng, self.items.len(), n).into_iter().map(|i| self.items[i]).collect())
    }
}
