use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::distral::DistralConfig;
use crate::grid::{GridMap, RewardScheme};
use crate::ot::SinkhornConfig;
use crate::sac::SacConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    OtSharing,
    Distral,
    NoSharing,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::NoSharing, Mode::Distral, Mode::OtSharing];

    pub fn name(self) -> &'static str {
        match self {
            Mode::OtSharing => "ot_sharing",
            Mode::Distral => "distral",
            Mode::NoSharing => "no_sharing",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// Where the comparison target of a trajectory comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartnerSource {
    /// The latest trajectory of a uniformly drawn other task.
    Random,
    /// All other tasks' latest trajectories pooled into one distribution.
    Aggregate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SharingConfig {
    /// Episodes collected per task per iteration.
    pub rollouts: usize,
    /// Partner trajectories each episode is compared with; rewards are averaged.
    pub partners: usize,
    pub partner_source: PartnerSource,
}

impl Default for SharingConfig {
    fn default() -> Self {
        Self { rollouts: 1, partners: 1, partner_source: PartnerSource::Random }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProxyConfig {
    pub sigma: f64,
    pub beta: f64,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        Self { sigma: 0.1, beta: 5.0 }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env_name: String,
    /// Map file, relative to the directory of the config file.
    pub map: PathBuf,
    /// Use only the first `n_tasks` goals of the map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_tasks: Option<usize>,
    pub mode: Mode,
    pub seeds: Vec<u64>,
    /// Environment steps per task.
    pub timesteps: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Greedy evaluation every this many steps per task; 0 disables it.
    #[serde(default)]
    pub eval_cadence: usize,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    /// Trailing window of environment steps scored as the final return.
    #[serde(default = "default_final_window")]
    pub final_window: usize,
    /// Save every agent's networks at the end of the run.
    #[serde(default)]
    pub checkpoints: bool,
    /// Defaults to [`RewardScheme::for_map`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardScheme>,
    #[serde(default)]
    pub sharing: SharingConfig,
    #[serde(default)]
    pub proxy: ProxyConfig,
    #[serde(default)]
    pub sinkhorn: SinkhornConfig,
    #[serde(default)]
    pub sac: SacConfig,
    #[serde(default)]
    pub distral: DistralConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_horizon() -> usize {
    100
}
fn default_eval_episodes() -> usize {
    10
}
fn default_final_window() -> usize {
    4000
}

impl ExperimentConfig {
    /// A config with every default and the given map.
    pub fn new(env_name: &str, map: impl Into<PathBuf>, mode: Mode) -> Self {
        Self {
            env_name: env_name.to_string(),
            map: map.into(),
            n_tasks: None,
            mode,
            seeds: (0..6).collect(),
            timesteps: 200_000,
            horizon: default_horizon(),
            eval_cadence: 0,
            eval_episodes: default_eval_episodes(),
            final_window: default_final_window(),
            checkpoints: false,
            reward: None,
            sharing: SharingConfig::default(),
            proxy: ProxyConfig::default(),
            sinkhorn: SinkhornConfig::default(),
            sac: SacConfig::default(),
            distral: DistralConfig::default(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::Input {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            ExperimentError::Config(msg) => ExperimentError::Config(format!("{}: {msg}", path.display())),
            e => e,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn map_path(&self) -> PathBuf {
        self.base_dir.join(&self.map)
    }

    pub fn load_map(&self) -> Result<GridMap, ExperimentError> {
        let path = self.map_path();
        GridMap::load(&path).map_err(|e| ExperimentError::Input { path, msg: e.to_string() })
    }

    pub fn reward_scheme(&self, map: &GridMap) -> RewardScheme {
        self.reward.unwrap_or_else(|| RewardScheme::for_map(map))
    }

    pub fn task_count(&self, map: &GridMap) -> usize {
        self.n_tasks.unwrap_or(map.n_tasks())
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.seeds.is_empty() {
            return bad("seeds: at least one seed required".into());
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return bad(format!("seeds: duplicates in {:?}", self.seeds));
        }
        if self.timesteps == 0 {
            return bad("timesteps: must be ≥ 1".into());
        }
        if self.horizon == 0 {
            return bad("horizon: must be ≥ 1".into());
        }
        if self.eval_cadence > 0 && self.eval_episodes == 0 {
            return bad("eval_episodes: must be ≥ 1 when eval_cadence > 0".into());
        }
        if self.n_tasks == Some(0) {
            return bad("n_tasks: must be ≥ 1".into());
        }
        if self.sharing.rollouts == 0 || self.sharing.partners == 0 {
            return bad("sharing: rollouts and partners must be ≥ 1".into());
        }
        if !(self.proxy.sigma.is_finite() && self.proxy.sigma >= 0.0) {
            return bad(format!("proxy.sigma: must be ≥ 0, got {}", self.proxy.sigma));
        }
        if !(self.proxy.beta.is_finite() && self.proxy.beta > 0.0) {
            return bad(format!("proxy.beta: must be > 0, got {}", self.proxy.beta));
        }
        if !(self.sinkhorn.epsilon.is_finite() && self.sinkhorn.epsilon > 0.0) || self.sinkhorn.max_iters == 0 {
            return bad("sinkhorn: epsilon must be > 0 and max_iters ≥ 1".into());
        }
        if let Some(r) = &self.reward {
            r.validate().map_err(|e| ExperimentError::Config(format!("reward: {e}")))?;
        }
        self.sac.validate().map_err(|e| ExperimentError::Config(format!("sac: {e}")))?;
        self.distral.validate().map_err(|e| ExperimentError::Config(format!("distral: {e}")))?;
        Ok(())
    }

    /// Checks that need the map: task count and partner availability.
    pub fn validate_with_map(&self, map: &GridMap) -> Result<(), ExperimentError> {
        let n = self.task_count(map);
        if n > map.n_tasks() {
            return Err(ExperimentError::Config(format!(
                "n_tasks: {n} requested but the map has {} goals",
                map.n_tasks()
            )));
        }
        if self.mode == Mode::OtSharing && n < 2 {
            return Err(ExperimentError::Config(format!("mode ot_sharing needs at least 2 tasks, got {n}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
env_name = "zigzag"
map = "../maps/zigzag.map"
mode = "ot_sharing"
seeds = [0, 1, 2]
timesteps = 30000

[proxy]
sigma = 0.1
beta = 2.0

[sac]
hidden_width = 64
"#;

    #[test]
    fn parse_fills_defaults() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.mode, Mode::OtSharing);
        assert_eq!(cfg.horizon, 100);
        assert_eq!(cfg.proxy.beta, 2.0);
        assert_eq!(cfg.sac.hidden_width, 64);
        assert_eq!(cfg.sac.batch_size, 128);
        assert_eq!(cfg.distral, DistralConfig::default());
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        let text = cfg.to_toml();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml(), text);

        let mut full = ExperimentConfig::new("room", "room5.map", Mode::Distral);
        full.reward = Some(RewardScheme { step_penalty: -0.1, wall_penalty: -0.1, goal_reward: 5.8 });
        full.n_tasks = Some(1);
        full.sinkhorn.epsilon = 0.1 + 0.2;
        assert_eq!(ExperimentConfig::parse(&full.to_toml()).unwrap(), full);
    }

    #[test]
    fn unknown_field_rejected_with_location() {
        let err = ExperimentConfig::parse("env_name = \"x\"\nmap = \"m\"\nmode = \"ot_sharing\"\nseeds = [0]\ntimesteps = 1\n[sac]\nwidth = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("width") && err.contains("line 7"), "{err}");
    }

    #[test]
    fn bad_values_rejected() {
        let mut cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        cfg.seeds = vec![1, 1];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        cfg.proxy.beta = 0.0;
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::parse(&SAMPLE.replace("ot_sharing", "shared")).is_err());
    }

    #[test]
    fn mode_names() {
        for m in Mode::ALL {
            assert_eq!(Mode::parse(m.name()), Some(m));
        }
        assert_eq!(Mode::parse("other"), None);
    }
}
