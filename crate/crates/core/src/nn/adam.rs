use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::{Gradients, Mlp, NnError, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

/// First/second moment accumulators for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub config: AdamConfig,
    pub step: u64,
    m: Gradients<F>,
    v: Gradients<F>,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(net: &Mlp<F>, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    /// Applies one bias-corrected Adam step in place. A non-finite gradient
    /// leaves both the network and the optimizer state untouched.
    pub fn step(&mut self, net: &mut Mlp<F>, grads: &Gradients<F>) -> Result<(), NnError> {
        let shapes = |g: &Gradients<F>| {
            g.layers
                .iter()
                .map(|l| (l.weight.dim(), l.bias.len()))
                .collect::<Vec<_>>()
        };
        if shapes(grads) != shapes(&self.m) {
            let dims = |g: &Gradients<F>| g.layers.iter().map(|l| l.fan_out()).collect();
            return Err(NnError::Architecture(dims(&self.m), dims(grads)));
        }
        if let Some(layer) = grads.layers.iter().position(|l| {
            !l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite())
        }) {
            return Err(NnError::NonFiniteGradient { layer });
        }

        self.step += 1;
        let c = &self.config;
        let t = self.step as i32;
        let b1 = F::from_f64(c.beta1);
        let b2 = F::from_f64(c.beta2);
        let one = F::one();
        let lr_t = F::from_f64(c.lr * (1.0 - c.beta2.powi(t)).sqrt() / (1.0 - c.beta1.powi(t)));
        // eps is applied to the bias-corrected second moment
        let eps_t = F::from_f64(c.eps * (1.0 - c.beta2.powi(t)).sqrt());

        let update = |p: &mut F, m: &mut F, v: &mut F, g: F| {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            *p = *p - lr_t * *m / (v.sqrt() + eps_t);
        };
        for (((layer, m), v), g) in net
            .layers_mut()
            .iter_mut()
            .zip(&mut self.m.layers)
            .zip(&mut self.v.layers)
            .zip(&grads.layers)
        {
            Zip::from(&mut layer.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .and(&g.weight)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Dense;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_net(w: f64) -> Mlp<f64> {
        Mlp::from_layers(vec![Dense { weight: array![[w]], bias: array![0.0] }]).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut net = Mlp::<f64>::new(&[2, 4, 3], &mut rng).unwrap();
        let before = net.clone();
        let mut adam = AdamState::new(&net, AdamConfig::default());
        adam.step(&mut net, &Gradients::zeros_like(&before)).unwrap();
        assert_eq!(net, before);
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m̂ = g, v̂ = g², so the first update is lr·g/(|g|+eps) ≈ lr·sign(g)
        for g in [0.37, -12.0, 1e-3] {
            let mut net = scalar_net(1.0);
            let mut adam = AdamState::new(&net, AdamConfig::default());
            let mut grads = Gradients::zeros_like(&net);
            grads.layers[0].weight[[0, 0]] = g;
            adam.step(&mut net, &grads).unwrap();
            let moved = 1.0 - net.layers()[0].weight[[0, 0]];
            let expected = 1e-3 * g / (g.abs() + 1e-8);
            assert!((moved - expected).abs() < 1e-12, "g={g}: {moved} vs {expected}");
        }
    }

    #[test]
    fn nan_gradient_rejected_untouched() {
        let mut net = scalar_net(0.5);
        let mut adam = AdamState::new(&net, AdamConfig::default());
        let before = (net.clone(), adam.clone());
        let mut grads = Gradients::zeros_like(&net);
        grads.layers[0].bias[0] = f64::NAN;
        assert!(matches!(
            adam.step(&mut net, &grads),
            Err(NnError::NonFiniteGradient { layer: 0 })
        ));
        assert_eq!((net, adam), before);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let mut net = Mlp::<f32>::new(&[2, 16, 4], &mut rng).unwrap();
            let mut adam = AdamState::new(&net, AdamConfig::default());
            for k in 0..20 {
                let x = [0.1 * k as f32, 0.5];
                let g = net.gradients(&x, &[1.0, -1.0, 0.5, 0.0]).unwrap();
                adam.step(&mut net, &g).unwrap();
            }
            net
        };
        assert_eq!(run(), run());
    }
}
