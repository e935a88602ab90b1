//! Episode records shared by the agents, the OT reward and the run loop.

use crate::grid::{Action, Observation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub obs: Observation,
    pub action: Action,
    /// Environment reward (before any shaping).
    pub reward: f64,
    pub next_obs: Observation,
    /// Goal reached: no bootstrapping from `next_obs`.
    pub terminal: bool,
    /// Last step of the episode (goal or horizon).
    pub done: bool,
}

/// One episode of one task, in time order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub task: usize,
    pub steps: Vec<Transition>,
}

impl Trajectory {
    pub fn new(task: usize) -> Self {
        Self { task, steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Undiscounted sum of environment rewards.
    pub fn env_return(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn reached_goal(&self) -> bool {
        self.steps.last().is_some_and(|s| s.terminal)
    }
}
