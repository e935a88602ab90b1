//! Multi-task gridworld reinforcement learning with optimal-transport reward
//! sharing, a Distral baseline and independent SAC learners.
//!
//! [`experiment::run`] is the entry point; the `ot-distill` binary wraps it.

pub mod cli;
pub mod distral;
pub mod experiment;
pub mod grid;
pub mod nn;
pub mod ot;
pub mod sac;
pub mod trajectory;
