use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::OtError;

/// Share of the transport cost carried by each atom of one side of a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionVector(Array1<f64>);

impl ContributionVector {
    pub fn new(values: Array1<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.sum()
    }
}

/// Parameters of the contribution → reward map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyRewardConfig {
    /// Scale: the reward for a zero-cost atom. Zero disables shaping.
    pub sigma: f64,
    /// Decay rate over (normalized) transport distance.
    pub beta: f64,
    pub horizon: usize,
    pub state_dim: usize,
    pub action_dim: usize,
}

impl ProxyRewardConfig {
    pub fn validate(&self) -> Result<(), OtError> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(OtError::BadProxyConfig(format!("sigma must be ≥ 0, got {}", self.sigma)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(OtError::BadProxyConfig(format!("beta must be > 0, got {}", self.beta)));
        }
        if self.horizon == 0 {
            return Err(OtError::BadProxyConfig("horizon must be ≥ 1".into()));
        }
        if self.state_dim + self.action_dim == 0 {
            return Err(OtError::BadProxyConfig("state_dim + action_dim must be ≥ 1".into()));
        }
        Ok(())
    }

    /// `β·T/√(|X|+|A|)`: contributions carry mass `1/T`, so this rescales them
    /// to a per-atom distance before the exponential decay.
    pub fn decay_rate(&self) -> f64 {
        self.beta * self.horizon as f64 / ((self.state_dim + self.action_dim) as f64).sqrt()
    }
}

/// `σ·exp(-rate·c)`, floored at the smallest positive double so the result
/// stays strictly positive when `σ > 0`.
pub fn proxy_reward(contribution: f64, cfg: &ProxyRewardConfig) -> f64 {
    let s = cfg.sigma * (-cfg.decay_rate() * contribution).exp();
    if cfg.sigma > 0.0 {
        s.max(f64::MIN_POSITIVE)
    } else {
        0.0
    }
}

/// Maps every contribution through [`proxy_reward`].
pub fn proxy_rewards(c: &ContributionVector, cfg: &ProxyRewardConfig) -> Vec<f64> {
    c.values().iter().map(|&ci| proxy_reward(ci, cfg)).collect()
}
