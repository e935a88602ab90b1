//! Training loops for the three sharing modes, run directories, scoring and
//! the proxy-reward heatmap.
//!
//! Every mode shares one loop. Each iteration collects an episode per task,
//! computes the shaping reward of every step (OT proxy reward against a
//! partner trajectory, Distral log-ratio, or nothing), stores the shaped
//! transitions and runs one SAC update per collected step. Distral then takes
//! one distillation step per task.

mod config;
mod heatmap;
mod log;
mod runner;
pub mod stats;
mod table;

pub use config::{ExperimentConfig, Mode, PartnerSource, ProxyConfig, SharingConfig};
pub use heatmap::{ot_heatmap, seed_heatmap, Heatmap, HEATMAP_STREAM};
pub use log::{EpisodeRecord, EvalRecord, RunLog};
pub use runner::{
    evaluate, evaluate_all_starts, rollout, run, run_distral, run_no_sharing, run_ot_sharing, run_seed, stream_rng,
    thread_pool, RunOutput, SeedOutcome, THREADS_ENV,
};
pub use table::{check_complete, ModeRun, ResultTable};

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::sac::{SacAgent, SacError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {msg}", path.display())]
    Input { path: PathBuf, msg: String },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("aggregation error: {0}")]
    Aggregation(String),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl From<SacError> for ExperimentError {
    fn from(e: SacError) -> Self {
        match e {
            SacError::Config(msg) => ExperimentError::Config(msg),
            e => ExperimentError::Numeric(e.to_string()),
        }
    }
}

pub const CONFIG_FILE: &str = "config.toml";
pub const MAP_FILE: &str = "map.map";

fn output_err(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Output(format!("{}: {e}", path.display()))
}

/// Directory of one seed's checkpoints inside a run directory.
pub fn checkpoint_dir(run_dir: &Path, seed: u64, task: usize) -> PathBuf {
    run_dir.join("checkpoints").join(format!("seed_{seed}")).join(format!("task_{}", task + 1))
}

/// Writes a self-contained run directory: the resolved config (pointing at
/// a copy of the map), the logs and, if enabled, every agent's networks.
pub fn write_run_dir(cfg: &ExperimentConfig, out: &RunOutput, dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| output_err(dir, e))?;
    let map_src = cfg.map_path();
    fs::copy(&map_src, dir.join(MAP_FILE)).map_err(|e| output_err(&map_src, e))?;
    let mut resolved = cfg.clone();
    resolved.map = PathBuf::from(MAP_FILE);
    if resolved.reward.is_none() {
        let map = cfg.load_map()?;
        resolved.reward = Some(cfg.reward_scheme(&map));
    }
    fs::write(dir.join(CONFIG_FILE), resolved.to_toml()).map_err(|e| output_err(dir, e))?;
    out.log.write(dir)?;
    if cfg.checkpoints {
        for s in &out.seeds {
            for (task, agent) in s.agents.iter().enumerate() {
                agent.save(&checkpoint_dir(dir, s.seed, task))?;
            }
        }
    }
    Ok(())
}

/// Loads the task policies of one seed saved by [`write_run_dir`].
pub fn load_agents(run_dir: &Path, cfg: &ExperimentConfig, seed: u64, n_tasks: usize) -> Result<Vec<SacAgent>, ExperimentError> {
    (0..n_tasks)
        .map(|task| {
            let dir = checkpoint_dir(run_dir, seed, task);
            if !dir.exists() {
                return Err(ExperimentError::Input { path: dir, msg: "checkpoint directory not found".into() });
            }
            SacAgent::load(cfg.sac, &dir).map_err(|e| ExperimentError::Input { path: dir, msg: e.to_string() })
        })
        .collect()
}
