//! KL-regularized multi-task baseline: a shared default policy `π₀` distilled
//! from every task, and per-task rewards shaped toward it.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{AdamConfig, AdamState, Mlp, NnError};
use crate::sac::{greedy_action, log_softmax_rows, softmax};

#[derive(Debug, Error)]
pub enum DistralError {
    #[error("distillation batch is empty")]
    EmptyBatch,
    #[error("invalid Distral config: {0}")]
    Config(String),
    #[error("non-finite distillation loss")]
    NonFiniteLoss,
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistralConfig {
    /// Weight of the KL term relative to the entropy term, in `[0, 1]`.
    pub alpha: f64,
    /// Inverse temperature.
    pub beta: f64,
    pub distill_lr: f64,
    pub distill_batch: usize,
}

impl Default for DistralConfig {
    fn default() -> Self {
        Self { alpha: 0.5, beta: 5.0, distill_lr: 1e-3, distill_batch: 128 }
    }
}

impl DistralConfig {
    pub fn validate(&self) -> Result<(), DistralError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(DistralError::Config(format!("alpha must be in [0, 1], got {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(DistralError::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.distill_lr.is_finite() && self.distill_lr > 0.0) {
            return Err(DistralError::Config(format!("distill_lr must be positive, got {}", self.distill_lr)));
        }
        if self.distill_batch == 0 {
            return Err(DistralError::Config("distill_batch must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// `r + (α/β)·log π₀(a|x) − (1/β)·log π(a|x)`.
pub fn augmented_reward(r: f64, logp_task: f64, logp_default: f64, cfg: &DistralConfig) -> f64 {
    r + shaping_term(logp_task, logp_default, cfg)
}

/// The shaping part of [`augmented_reward`] alone.
pub fn shaping_term(logp_task: f64, logp_default: f64, cfg: &DistralConfig) -> f64 {
    cfg.alpha / cfg.beta * logp_default - logp_task / cfg.beta
}

/// The shared default policy and its optimizer.
#[derive(Debug, Clone)]
pub struct DistilledPolicy {
    pub net: Mlp,
    opt: AdamState<f32>,
}

impl DistilledPolicy {
    pub fn new<R: Rng + ?Sized>(dims: &[usize], lr: f64, rng: &mut R) -> Result<Self, DistralError> {
        let net = Mlp::new(dims, rng)?;
        Ok(Self::from_net(net, lr))
    }

    pub fn from_net(net: Mlp, lr: f64) -> Self {
        let opt = AdamState::new(&net, AdamConfig { lr, ..AdamConfig::default() });
        Self { net, opt }
    }

    pub fn log_probs(&self, obs: &Array2<f32>) -> Result<Array2<f32>, DistralError> {
        let mut z = self.net.forward(obs.view())?;
        log_softmax_rows(&mut z);
        Ok(z)
    }

    pub fn probs(&self, obs: &[f32]) -> Result<Vec<f64>, DistralError> {
        Ok(softmax(&self.net.forward_one(obs)?))
    }

    pub fn greedy(&self, obs: &[f32]) -> Result<usize, DistralError> {
        Ok(greedy_action(&self.net.forward_one(obs)?))
    }

    /// Mean `−log π₀(a|x)` over the batch, without updating.
    pub fn nll(&self, obs: &[[f32; 2]], actions: &[usize]) -> Result<f64, DistralError> {
        if obs.is_empty() {
            return Err(DistralError::EmptyBatch);
        }
        let x = Array2::from_shape_fn((obs.len(), 2), |(i, j)| obs[i][j]);
        let lp = self.log_probs(&x)?;
        Ok(-actions.iter().enumerate().map(|(i, &a)| lp[[i, a]] as f64).sum::<f64>() / obs.len() as f64)
    }

    /// One Adam step on the cross-entropy `−log π₀(a|x)` of observed task
    /// actions. Returns the loss before the step.
    pub fn distill_update(&mut self, obs: &[[f32; 2]], actions: &[usize]) -> Result<f64, DistralError> {
        let n = obs.len();
        if n == 0 || actions.len() != n {
            return Err(DistralError::EmptyBatch);
        }
        let x = Array2::from_shape_fn((n, 2), |(i, j)| obs[i][j]);
        let acts = self.net.forward_cached(x.view())?;
        let mut logp = acts.output().clone();
        log_softmax_rows(&mut logp);
        let mut grad = logp.mapv(|l| l.exp() / n as f32);
        let mut loss = 0.0;
        for (i, &a) in actions.iter().enumerate() {
            grad[[i, a]] -= 1.0 / n as f32;
            loss -= logp[[i, a]] as f64;
        }
        loss /= n as f64;
        if !loss.is_finite() {
            return Err(DistralError::NonFiniteLoss);
        }
        let g = self.net.backward(&acts, grad.view())?;
        self.opt.step(&mut self.net, &g)?;
        Ok(loss)
    }
}
