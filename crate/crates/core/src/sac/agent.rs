use std::fs;
use std::io::{self, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{greedy_action, log_softmax_rows, sample_action, Experience, ReplayBuffer, SacError};
use crate::nn::{load_mlp, save_mlp, AdamConfig, AdamState, Gradients, Mlp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SacConfig {
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub gamma: f64,
    /// Entropy temperature, fixed for the whole run.
    pub alpha: f64,
    /// Target networks keep this fraction of their weights per update.
    pub polyak: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub buffer_size: usize,
    /// Transitions collected before the first update.
    pub warmup: usize,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            hidden_width: 256,
            hidden_layers: 3,
            gamma: 0.99,
            alpha: 0.1,
            polyak: 0.99,
            lr: 1e-3,
            batch_size: 128,
            buffer_size: 10_000,
            warmup: 1_000,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<(), SacError> {
        let bad = |msg: String| Err(SacError::Config(msg));
        if self.hidden_width == 0 {
            return bad("hidden_width must be ≥ 1".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must be in [0, 1], got {}", self.gamma));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad(format!("alpha must be ≥ 0, got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.polyak) {
            return bad(format!("polyak must be in [0, 1], got {}", self.polyak));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_size {
            return bad(format!(
                "batch_size must be in 1..=buffer_size ({}), got {}",
                self.buffer_size, self.batch_size
            ));
        }
        Ok(())
    }

    pub fn layer_dims(&self, input: usize, output: usize) -> Vec<usize> {
        let mut dims = vec![input];
        dims.extend(std::iter::repeat_n(self.hidden_width, self.hidden_layers));
        dims.push(output);
        dims
    }
}

/// Scalar diagnostics of one gradient update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub policy_loss: f64,
    /// Mean policy entropy over the batch, in nats.
    pub entropy: f64,
    pub q_mean: f64,
}

impl UpdateStats {
    pub const CSV_HEADER: &'static str = "critic1_loss,critic2_loss,policy_loss,entropy,q_mean";

    pub fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.critic1_loss, self.critic2_loss, self.policy_loss, self.entropy, self.q_mean
        )
    }
}

/// Appends one CSV row per update.
pub struct DiagnosticsLog<W: Write> {
    out: W,
    rows: u64,
}

impl<W: Write> DiagnosticsLog<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "update,{}", UpdateStats::CSV_HEADER)?;
        Ok(Self { out, rows: 0 })
    }

    pub fn record(&mut self, stats: &UpdateStats) -> io::Result<()> {
        self.rows += 1;
        writeln!(self.out, "{},{}", self.rows, stats.csv_fields())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Discrete soft actor-critic with twin critics and Polyak targets.
#[derive(Debug, Clone)]
pub struct SacAgent {
    cfg: SacConfig,
    pub policy: Mlp,
    pub q1: Mlp,
    pub q2: Mlp,
    pub q1_target: Mlp,
    pub q2_target: Mlp,
    opt_policy: AdamState<f32>,
    opt_q1: AdamState<f32>,
    opt_q2: AdamState<f32>,
    pub buffer: ReplayBuffer,
    updates: u64,
}

const CHECKPOINT_FILES: [&str; 5] = ["policy.mlp", "q1.mlp", "q2.mlp", "q1_target.mlp", "q2_target.mlp"];

impl SacAgent {
    pub fn new<R: Rng + ?Sized>(cfg: SacConfig, obs_dim: usize, n_actions: usize, rng: &mut R) -> Result<Self, SacError> {
        cfg.validate()?;
        let dims = cfg.layer_dims(obs_dim, n_actions);
        let policy = Mlp::new(&dims, rng)?;
        let q1 = Mlp::new(&dims, rng)?;
        let q2 = Mlp::new(&dims, rng)?;
        Ok(Self::from_networks(cfg, policy, q1.clone(), q2.clone(), q1, q2))
    }

    fn from_networks(cfg: SacConfig, policy: Mlp, q1: Mlp, q2: Mlp, q1_target: Mlp, q2_target: Mlp) -> Self {
        let adam = AdamConfig { lr: cfg.lr, ..AdamConfig::default() };
        Self {
            opt_policy: AdamState::new(&policy, adam),
            opt_q1: AdamState::new(&q1, adam),
            opt_q2: AdamState::new(&q2, adam),
            buffer: ReplayBuffer::new(cfg.buffer_size),
            cfg,
            policy,
            q1,
            q2,
            q1_target,
            q2_target,
            updates: 0,
        }
    }

    pub fn config(&self) -> &SacConfig {
        &self.cfg
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn n_actions(&self) -> usize {
        self.policy.output_dim()
    }

    pub fn logits(&self, obs: &[f32]) -> Result<Vec<f32>, SacError> {
        Ok(self.policy.forward_one(obs)?)
    }

    /// Row-wise `log π(·|x)` for a batch of observations.
    pub fn log_probs(&self, obs: ArrayView2<'_, f32>) -> Result<Array2<f32>, SacError> {
        let mut z = self.policy.forward(obs)?;
        log_softmax_rows(&mut z);
        Ok(z)
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &[f32], rng: &mut R, greedy: bool) -> Result<usize, SacError> {
        let logits = self.logits(obs)?;
        Ok(if greedy { greedy_action(&logits) } else { sample_action(&logits, rng) })
    }

    /// Most probable action, lowest index on ties.
    pub fn greedy(&self, obs: &[f32]) -> Result<usize, SacError> {
        Ok(greedy_action(&self.logits(obs)?))
    }

    pub fn store(&mut self, e: Experience) {
        self.buffer.push(e);
    }

    /// Whether the buffer is past warm-up and holds a full minibatch.
    pub fn ready(&self) -> bool {
        self.buffer.len() >= self.cfg.warmup.max(self.cfg.batch_size)
    }

    /// One critic + policy + target step on a uniformly drawn minibatch.
    pub fn update<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<UpdateStats, SacError> {
        let batch = self.buffer.sample(self.cfg.batch_size, rng)?;
        self.update_on(&batch)
    }

    /// One update on an explicit minibatch.
    pub fn update_on(&mut self, batch: &[Experience]) -> Result<UpdateStats, SacError> {
        if batch.is_empty() {
            return Err(SacError::InsufficientData { have: 0, need: 1 });
        }
        let n = batch.len();
        let na = self.n_actions();
        let alpha = self.cfg.alpha as f32;
        let gamma = self.cfg.gamma as f32;
        let x = Array2::from_shape_fn((n, 2), |(i, j)| batch[i].obs[j]);
        let x_next = Array2::from_shape_fn((n, 2), |(i, j)| batch[i].next_obs[j]);

        // soft state value of x' under the current policy and the target critics
        let logp_next = self.log_probs(x_next.view())?;
        let qt1 = self.q1_target.forward(x_next.view())?;
        let qt2 = self.q2_target.forward(x_next.view())?;
        let y: Vec<f32> = batch
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let r = e.reward as f32;
                if e.terminal {
                    return r;
                }
                let v: f32 = (0..na)
                    .map(|a| {
                        let lp = logp_next[[i, a]];
                        lp.exp() * (qt1[[i, a]].min(qt2[[i, a]]) - alpha * lp)
                    })
                    .sum();
                r + gamma * v
            })
            .collect();

        let (l1, g1, q1v) = critic_grads(&self.q1, x.view(), batch, &y)?;
        let (l2, g2, q2v) = critic_grads(&self.q2, x.view(), batch, &y)?;

        let acts = self.policy.forward_cached(x.view())?;
        let mut logp = acts.output().clone();
        log_softmax_rows(&mut logp);
        let mut grad = Array2::<f32>::zeros((n, na));
        let (mut policy_loss, mut entropy, mut q_mean) = (0.0f64, 0.0f64, 0.0f64);
        let mut w = vec![0.0f32; na];
        for i in 0..n {
            let mut expected = 0.0f32;
            for a in 0..na {
                let p = logp[[i, a]].exp();
                let qmin = q1v[[i, a]].min(q2v[[i, a]]);
                w[a] = alpha * logp[[i, a]] - qmin;
                expected += p * w[a];
                entropy -= (p * logp[[i, a]]) as f64;
                q_mean += qmin as f64;
            }
            policy_loss += expected as f64;
            for a in 0..na {
                grad[[i, a]] = logp[[i, a]].exp() * (w[a] - expected) / n as f32;
            }
        }
        let nf = n as f64;
        let stats = UpdateStats {
            critic1_loss: l1,
            critic2_loss: l2,
            policy_loss: policy_loss / nf,
            entropy: entropy / nf,
            q_mean: q_mean / (nf * na as f64),
        };
        for (what, v) in [("critic1", l1), ("critic2", l2), ("policy", stats.policy_loss)] {
            if !v.is_finite() {
                return Err(SacError::NonFiniteLoss { what, update: self.updates + 1 });
            }
        }
        let gp = self.policy.backward(&acts, grad.view())?;

        self.opt_q1.step(&mut self.q1, &g1)?;
        self.opt_q2.step(&mut self.q2, &g2)?;
        self.opt_policy.step(&mut self.policy, &gp)?;
        let rho = self.cfg.polyak as f32;
        self.q1_target.polyak_update(&self.q1, rho)?;
        self.q2_target.polyak_update(&self.q2, rho)?;
        self.updates += 1;
        Ok(stats)
    }

    /// Writes all five networks into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), SacError> {
        fs::create_dir_all(dir).map_err(crate::nn::NnError::Io)?;
        let nets = [&self.policy, &self.q1, &self.q2, &self.q1_target, &self.q2_target];
        for (net, file) in nets.into_iter().zip(CHECKPOINT_FILES) {
            save_mlp(net, &dir.join(file))?;
        }
        Ok(())
    }

    /// Restores networks saved by [`SacAgent::save`]. Optimizer state and
    /// replay memory start empty.
    pub fn load(cfg: SacConfig, dir: &Path) -> Result<Self, SacError> {
        cfg.validate()?;
        let mut nets = Vec::with_capacity(5);
        for file in CHECKPOINT_FILES {
            nets.push(load_mlp::<f32>(&dir.join(file))?);
        }
        let dims = nets[0].dims();
        if let Some(bad) = nets.iter().find(|n| n.dims() != dims) {
            return Err(crate::nn::NnError::Architecture(dims, bad.dims()).into());
        }
        let mut it = nets.into_iter();
        let mut next = || it.next().expect("five networks");
        Ok(Self::from_networks(cfg, next(), next(), next(), next(), next()))
    }
}

fn critic_grads(
    net: &Mlp,
    x: ArrayView2<'_, f32>,
    batch: &[Experience],
    y: &[f32],
) -> Result<(f64, Gradients<f32>, Array2<f32>), SacError> {
    let acts = net.forward_cached(x)?;
    let q = acts.output();
    let n = batch.len() as f32;
    let mut grad = Array2::<f32>::zeros(q.dim());
    let mut loss = 0.0f64;
    for (i, e) in batch.iter().enumerate() {
        let d = q[[i, e.action]] - y[i];
        loss += (d * d) as f64;
        grad[[i, e.action]] = 2.0 * d / n;
    }
    let g = net.backward(&acts, grad.view())?;
    Ok((loss / batch.len() as f64, g, acts.into_output()))
}
