//! Discrete-action soft actor-critic.
//!
//! Categorical policy over the four moves, twin critics with Polyak-averaged
//! targets and a fixed entropy temperature. Both the critic target and the
//! policy objective use exact expectations over actions instead of samples.

mod agent;
mod buffer;

pub use agent::{DiagnosticsLog, SacAgent, SacConfig, UpdateStats};
pub use buffer::{Experience, ReplayBuffer};

use ndarray::Array2;
use rand::Rng;
use thiserror::Error;

use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum SacError {
    #[error("replay buffer holds {have} transitions, need {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("non-finite {what} loss at update {update}")]
    NonFiniteLoss { what: &'static str, update: u64 },
    #[error("invalid SAC config: {0}")]
    Config(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// In-place `z ← z − logsumexp(z)` on every row.
pub fn log_softmax_rows(z: &mut Array2<f32>) {
    for mut row in z.rows_mut() {
        let max = row.iter().fold(f32::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f32>().ln();
        row.mapv_inplace(|v| v - lse);
    }
}

/// Softmax in double precision.
pub fn softmax(logits: &[f32]) -> Vec<f64> {
    let max = logits.iter().fold(f32::NEG_INFINITY, |m, &v| m.max(v)) as f64;
    let e: Vec<f64> = logits.iter().map(|&v| (v as f64 - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// Index of the largest logit; the lowest index wins ties.
pub fn greedy_action(logits: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

/// Draws from `softmax(logits)` by inverting the cumulative distribution.
pub fn sample_action<R: Rng + ?Sized>(logits: &[f32], rng: &mut R) -> usize {
    let p = softmax(logits);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn greedy_picks_first_max() {
        assert_eq!(greedy_action(&[1.0, 3.0, 2.0, 0.0]), 1);
        assert_eq!(greedy_action(&[2.0, 2.0, 2.0, 2.0]), 0);
        assert_eq!(greedy_action(&[0.0, 5.0, 5.0, 1.0]), 1);
    }

    #[test]
    fn equal_logits_sample_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 4];
        let n = 10_000;
        for _ in 0..n {
            counts[sample_action(&[0.3; 4], &mut rng)] += 1;
        }
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - 0.25 * n as f64).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn dominant_logit_always_drawn() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(sample_action(&[0.0, 0.0, 80.0, 0.0], &mut rng), 2);
        }
    }

    #[test]
    fn log_softmax_normalizes() {
        let mut z = Array2::from_shape_vec((2, 3), vec![1.0, 2.0, 3.0, 1000.0, 0.0, -1000.0]).unwrap();
        log_softmax_rows(&mut z);
        for row in z.rows() {
            assert!((row.iter().map(|v| v.exp()).sum::<f32>() - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|v| v.is_finite()));
        }
    }
}
