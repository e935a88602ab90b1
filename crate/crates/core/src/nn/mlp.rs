use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use super::{NnError, Scalar};

/// One affine layer. `weight` is `fan_in × fan_out` so a batch `X` maps to `X·W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<F> {
    pub weight: Array2<F>,
    pub bias: Array1<F>,
}

impl<F: Scalar> Dense<F> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.ncols()
    }

    fn all_finite(&self) -> bool {
        self.weight.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

/// Multilayer perceptron: Tanh on every hidden layer, identity on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<F = f32> {
    layers: Vec<Dense<F>>,
}

/// Per-layer outputs recorded by [`Mlp::forward_cached`]; `outputs[0]` is the input batch.
#[derive(Debug, Clone)]
pub struct Activations<F> {
    outputs: Vec<Array2<F>>,
}

impl<F> Activations<F> {
    pub fn into_output(mut self) -> Array2<F> {
        self.outputs.pop().expect("at least one layer")
    }

    pub fn output(&self) -> &Array2<F> {
        self.outputs.last().expect("activations always hold the input")
    }
}

/// Parameter-shaped gradient (or moment) buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<F> {
    pub layers: Vec<Dense<F>>,
}

impl<F: Scalar> Gradients<F> {
    pub fn zeros_like(net: &Mlp<F>) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Dense::zeros(l.fan_in(), l.fan_out()))
                .collect(),
        }
    }

    pub fn scale(&mut self, k: F) {
        for l in &mut self.layers {
            l.weight.mapv_inplace(|v| v * k);
            l.bias.mapv_inplace(|v| v * k);
        }
    }

    pub fn flatten(&self) -> Vec<F> {
        flatten_layers(&self.layers)
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(Dense::all_finite)
    }
}

fn flatten_layers<F: Scalar>(layers: &[Dense<F>]) -> Vec<F> {
    let mut out = Vec::new();
    for l in layers {
        out.extend(l.weight.iter().copied());
        out.extend(l.bias.iter().copied());
    }
    out
}

impl<F: Scalar> Mlp<F> {
    /// Builds a network with `dims = [input, hidden.., output]`, weights and
    /// biases drawn uniformly from `±1/sqrt(fan_in)`.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self, NnError> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(NnError::TooFewLayers(dims.to_vec()));
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let mut draw = || F::from_f64(rng.random_range(-bound..bound));
                let weight = Array2::from_shape_simple_fn((w[0], w[1]), &mut draw);
                let bias = Array1::from_shape_simple_fn(w[1], &mut draw);
                Dense { weight, bias }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Dense<F>>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::TooFewLayers(Vec::new()));
        }
        for pair in layers.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.fan_out() != b.fan_in() || a.bias.len() != a.fan_out() {
                return Err(NnError::TooFewLayers(vec![a.fan_in(), a.fan_out(), b.fan_in()]));
            }
        }
        let last = layers.last().unwrap();
        if last.bias.len() != last.fan_out() {
            return Err(NnError::TooFewLayers(vec![last.fan_in(), last.fan_out()]));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense<F>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<F>] {
        &mut self.layers
    }

    /// `[input, hidden.., output]`
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(Dense::fan_out));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().fan_out()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<F> {
        flatten_layers(&self.layers)
    }

    /// Overwrites every parameter from a slice in [`Mlp::flat_params`] order.
    pub fn set_flat_params(&mut self, values: &[F]) {
        assert_eq!(values.len(), self.param_count(), "flat parameter length");
        let mut it = values.iter().copied();
        for l in &mut self.layers {
            for w in l.weight.iter_mut().chain(l.bias.iter_mut()) {
                *w = it.next().unwrap();
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(Dense::all_finite)
    }

    fn check_input(&self, x: &ArrayView2<'_, F>) -> Result<(), NnError> {
        if x.ncols() != self.input_dim() {
            return Err(NnError::InputDim {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    /// Batched forward pass: one row per sample.
    pub fn forward(&self, x: ArrayView2<'_, F>) -> Result<Array2<F>, NnError> {
        self.check_input(&x)?;
        let last = self.layers.len() - 1;
        let mut h = affine(&self.layers[0], x);
        if last > 0 {
            h.mapv_inplace(F::activation);
        }
        for (i, layer) in self.layers.iter().enumerate().skip(1) {
            h = affine(layer, h.view());
            if i < last {
                h.mapv_inplace(F::activation);
            }
        }
        Ok(h)
    }

    /// Forward pass for a single input vector.
    pub fn forward_one(&self, x: &[F]) -> Result<Vec<F>, NnError> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        Ok(self.forward(view)?.into_raw_vec_and_offset().0)
    }

    /// Forward pass that keeps every layer output for [`Mlp::backward`].
    pub fn forward_cached(&self, x: ArrayView2<'_, F>) -> Result<Activations<F>, NnError> {
        self.check_input(&x)?;
        let last = self.layers.len() - 1;
        let mut outputs = Vec::with_capacity(self.layers.len() + 1);
        outputs.push(x.to_owned());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut h = affine(layer, outputs[i].view());
            if i < last {
                h.mapv_inplace(F::activation);
            }
            outputs.push(h);
        }
        Ok(Activations { outputs })
    }

    /// Reverse-mode gradient of `sum(grad_out ⊙ forward(x))` with respect to
    /// every parameter, summed over the batch.
    pub fn backward(
        &self,
        acts: &Activations<F>,
        grad_out: ArrayView2<'_, F>,
    ) -> Result<Gradients<F>, NnError> {
        let out = acts.output();
        if grad_out.dim() != out.dim() {
            return Err(NnError::GradShape {
                expected: out.dim(),
                got: grad_out.dim(),
            });
        }
        let n = self.layers.len();
        let mut grads: Vec<Option<Dense<F>>> = vec![None; n];
        let mut delta = grad_out.to_owned();
        for i in (0..n).rev() {
            if i + 1 < n {
                // through tanh: d/dz tanh(z) = 1 - tanh(z)^2
                Zip::from(&mut delta)
                    .and(&acts.outputs[i + 1])
                    .for_each(|d, &h| *d = *d * (F::one() - h * h));
            }
            let input = &acts.outputs[i];
            let weight = input.t().dot(&delta);
            let bias = delta.sum_axis(Axis(0));
            if i > 0 {
                delta = delta.dot(&self.layers[i].weight.t());
            }
            grads[i] = Some(Dense { weight, bias });
        }
        Ok(Gradients {
            layers: grads.into_iter().map(Option::unwrap).collect(),
        })
    }

    /// Convenience wrapper: forward then backward for one input/gradient pair.
    pub fn gradients(&self, x: &[F], grad_out: &[F]) -> Result<Gradients<F>, NnError> {
        let xv = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        let acts = self.forward_cached(xv)?;
        let gv = ArrayView2::from_shape((1, grad_out.len()), grad_out).expect("row vector");
        self.backward(&acts, gv)
    }

    fn check_same_arch(&self, other: &Self) -> Result<(), NnError> {
        if self.dims() != other.dims() {
            return Err(NnError::Architecture(self.dims(), other.dims()));
        }
        Ok(())
    }

    /// `self ← rho·self + (1−rho)·online`, elementwise.
    pub fn polyak_update(&mut self, online: &Self, rho: F) -> Result<(), NnError> {
        self.check_same_arch(online)?;
        let keep = F::one() - rho;
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            Zip::from(&mut t.weight)
                .and(&o.weight)
                .for_each(|t, &o| *t = rho * *t + keep * o);
            Zip::from(&mut t.bias)
                .and(&o.bias)
                .for_each(|t, &o| *t = rho * *t + keep * o);
        }
        Ok(())
    }
}

fn affine<F: Scalar>(layer: &Dense<F>, x: ArrayView2<'_, F>) -> Array2<F> {
    let mut h = layer
        .bias
        .broadcast((x.nrows(), layer.fan_out()))
        .expect("bias matches fan_out")
        .to_owned();
    general_mat_mul(F::one(), &x, &layer.weight, F::one(), &mut h);
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_output_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = Mlp::<f64>::new(&[3, 5, 2], &mut rng).unwrap();
        for l in net.layers_mut() {
            l.weight.fill(0.0);
        }
        net.layers_mut()[1].bias = array![0.25, -1.5];
        let y = net.forward_one(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y, vec![0.25, -1.5]);
    }

    #[test]
    fn one_one_one_chain_by_hand() {
        // y = w2 * tanh(w1 * x + b1) + b2
        let (w1, b1, w2, b2, x) = (0.7_f64, -0.2, 1.3, 0.05, 0.9);
        let net = Mlp::from_layers(vec![
            Dense { weight: array![[w1]], bias: array![b1] },
            Dense { weight: array![[w2]], bias: array![b2] },
        ])
        .unwrap();
        let expected = w2 * (w1 * x + b1).tanh() + b2;
        let y = net.forward_one(&[x]).unwrap()[0];
        assert!((y - expected).abs() < 1e-15);

        // hand derivative: dy/dw1 = w2 * (1 - tanh^2) * x
        let g = net.gradients(&[x], &[1.0]).unwrap();
        let t = (w1 * x + b1).tanh();
        assert!((g.layers[0].weight[[0, 0]] - w2 * (1.0 - t * t) * x).abs() < 1e-15);
        assert!((g.layers[1].weight[[0, 0]] - t).abs() < 1e-15);
        assert!((g.layers[1].bias[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_rows_identical_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::<f32>::new(&[2, 8, 8, 4], &mut rng).unwrap();
        let x = Array2::from_shape_fn((5, 2), |(_, j)| [0.3_f32, 0.6][j]);
        let y = net.forward(x.view()).unwrap();
        for r in 1..5 {
            assert_eq!(y.row(0), y.row(r));
        }
    }

    #[test]
    fn input_dim_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::<f32>::new(&[2, 4, 4], &mut rng).unwrap();
        assert!(matches!(
            net.forward_one(&[1.0, 2.0, 3.0]),
            Err(NnError::InputDim { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn zero_and_doubled_output_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Mlp::<f64>::new(&[3, 6, 6, 2], &mut rng).unwrap();
        let x = [0.1, -0.4, 0.8];
        let zero = net.gradients(&x, &[0.0, 0.0]).unwrap();
        assert!(zero.flatten().iter().all(|&g| g == 0.0));

        let g1 = net.gradients(&x, &[0.3, -1.1]).unwrap().flatten();
        let g2 = net.gradients(&x, &[0.6, -2.2]).unwrap().flatten();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn polyak_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let online = Mlp::<f64>::new(&[2, 3, 1], &mut rng).unwrap();
        let original = Mlp::<f64>::new(&[2, 3, 1], &mut rng).unwrap();

        let mut t = original.clone();
        t.polyak_update(&online, 0.0).unwrap();
        assert_eq!(t, online);

        let mut t = original.clone();
        t.polyak_update(&online, 1.0).unwrap();
        assert_eq!(t, original);

        let mut t = Mlp::<f64>::from_layers(vec![Dense { weight: array![[1.0]], bias: array![1.0] }]).unwrap();
        let o = Mlp::from_layers(vec![Dense { weight: array![[0.0]], bias: array![0.0] }]).unwrap();
        t.polyak_update(&o, 0.99).unwrap();
        assert!((t.layers()[0].weight[[0, 0]] - 0.99).abs() < 1e-15);

        let other = Mlp::<f64>::new(&[2, 4, 1], &mut rng).unwrap();
        assert!(t.polyak_update(&other, 0.5).is_err());
    }
}
