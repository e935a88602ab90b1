//! Small feed-forward networks with hand-written backpropagation.
//!
//! Everything the agents need and nothing more: Tanh MLPs with linear heads,
//! exact reverse-mode gradients, Adam with bias correction, Polyak averaging
//! and a versioned text checkpoint format.
//!
//! Networks are generic over the float type. Agents train in `f32`; the
//! gradient checks run in `f64` so central differences are meaningful.

mod adam;
mod checkpoint;
mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{load_mlp, read_mlp, save_mlp, write_mlp, CHECKPOINT_MAGIC};
pub use mlp::{Activations, Dense, Gradients, Mlp};

use std::fmt::{Debug, Display};
use std::str::FromStr;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::Float;
use thiserror::Error;

/// Float types a network can be built over.
pub trait Scalar:
    Float + LinalgScalar + ScalarOperand + Debug + Display + FromStr + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Hidden-layer activation. Exact for `f64`; a rational approximation for `f32`.
    fn activation(self) -> Self;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn activation(self) -> Self {
        tanh_f32(self)
    }
}

/// 13/6 rational approximation of tanh, max abs error ~1e-7 on f32.
/// Branch-free so batch loops vectorize; libm `tanhf` dominates forward time otherwise.
#[inline]
pub fn tanh_f32(x: f32) -> f32 {
    const CLAMP: f32 = 7.905_311;
    const A1: f32 = 4.893_524_6e-3;
    const A3: f32 = 6.372_619_3e-4;
    const A5: f32 = 1.485_722_4e-5;
    const A7: f32 = 5.122_297e-8;
    const A9: f32 = -8.604_671_5e-11;
    const A11: f32 = 2.000_187_9e-13;
    const A13: f32 = -2.760_768_5e-16;
    const B0: f32 = 4.893_525_2e-3;
    const B2: f32 = 2.268_434_6e-3;
    const B4: f32 = 1.185_347_1e-4;
    const B6: f32 = 1.198_258_4e-6;
    let x = x.clamp(-CLAMP, CLAMP);
    let x2 = x * x;
    let mut p = A13;
    p = p * x2 + A11;
    p = p * x2 + A9;
    p = p * x2 + A7;
    p = p * x2 + A5;
    p = p * x2 + A3;
    p = p * x2 + A1;
    let p = p * x;
    let mut q = B6;
    q = q * x2 + B4;
    q = q * x2 + B2;
    q = q * x2 + B0;
    p / q
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn activation(self) -> Self {
        self.tanh()
    }
}


#[derive(Debug, Error)]
pub enum NnError {
    #[error("input has {got} features, network expects {expected}")]
    InputDim { expected: usize, got: usize },
    #[error("output gradient has shape {got:?}, expected {expected:?}")]
    GradShape {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("architectures differ: {0:?} vs {1:?}")]
    Architecture(Vec<usize>, Vec<usize>),
    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },
    #[error("network needs at least an input and an output layer, got dims {0:?}")]
    TooFewLayers(Vec<usize>),
    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
