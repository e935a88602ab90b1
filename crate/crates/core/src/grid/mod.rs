//! Deterministic multi-goal gridworlds.
//!
//! All tasks on a map share the same states, actions and transitions; they
//! differ only in which goal cell pays out and ends the episode.

mod env;
mod map;
mod oracle;

pub use env::{GridEnv, RewardScheme, Step};
pub use map::{Cell, GridMap};
pub use oracle::{optimal_returns, optimal_values, OptimalReturn, TaskValues};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The four moves. `index()` order is the network output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn one_hot(self) -> [f64; 4] {
        let mut v = [0.0; 4];
        v[self.index()] = 1.0;
        v
    }
}

/// Normalized agent position: `(row / height, col / width)`, both in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub row: f32,
    pub col: f32,
}

impl Observation {
    pub const DIM: usize = 2;

    pub fn of_cell(map: &GridMap, (r, c): Cell) -> Self {
        Self {
            row: r as f32 / map.height() as f32,
            col: c as f32 / map.width() as f32,
        }
    }

    pub fn to_array(self) -> [f32; 2] {
        [self.row, self.col]
    }
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("map is empty")]
    EmptyMap,
    #[error("line {line}: expected {expected} columns, found {found}")]
    NotRectangular {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {col}: unexpected character {ch:?}")]
    BadChar { line: usize, col: usize, ch: char },
    #[error("border cell {cell:?} is not a wall")]
    OpenBorder { cell: Cell },
    #[error("map declares no goals")]
    NoGoals,
    #[error("goal for task {task} is missing")]
    MissingGoal { task: usize },
    #[error("goal for task {task} appears twice, again at {cell:?}")]
    DuplicateGoal { task: usize, cell: Cell },
    #[error("free cell {cell:?} cannot reach any goal")]
    Unreachable { cell: Cell },
    #[error("line {line}: {msg}")]
    BadRegion { line: usize, msg: String },
    #[error("task {task} out of range for a map with {n_tasks} goals")]
    NoSuchTask { task: usize, n_tasks: usize },
    #[error("invalid reward scheme: {0}")]
    BadScheme(String),
    #[error("step called on a finished episode")]
    EpisodeFinished,
    #[error("step called before reset")]
    NotStarted,
    #[error("cannot read map {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
