use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::Parameters;
use crate::linalg::{axpy, Matrix};
use crate::{Error, Result};

/// LeakyReLU slope used inside GAT attention logits.
pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Elu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    libm::expm1(x)
                }
            }
            Activation::Identity => x,
        }
    }

    /// Derivative at pre-activation `x`.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    libm::exp(x)
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[inline]
pub(crate) fn leaky_relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

#[inline]
pub(crate) fn leaky_relu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Glorot-uniform sample for a `rows × cols` weight.
pub(crate) fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut R) -> Matrix {
    let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..bound))
}

/// Row-wise affine map plus activation: `act(X Wᵀ + b)` with `W` stored
/// `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Matrix,
    pre: Matrix,
}

impl DenseLayer {
    pub fn new(weight: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::Shape(alloc::format!("bias {} for {} outputs", bias.len(), weight.rows())));
        }
        Ok(Self { weight, bias, activation })
    }

    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        Self { weight: glorot(outputs, inputs, inputs, outputs, rng), bias: vec![0.0; outputs], activation }
    }

    pub fn identity(width: usize) -> Self {
        Self { weight: Matrix::identity(width), bias: vec![0.0; width], activation: Activation::Identity }
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weight: Matrix::zeros(self.weight.rows(), self.weight.cols()),
            bias: vec![0.0; self.bias.len()],
            activation: self.activation,
        }
    }

    fn pre_activation(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.inputs() {
            return Err(Error::Shape(alloc::format!("dense layer expects {} inputs, got {}", self.inputs(), x.cols())));
        }
        let mut pre = x.matmul_t(&self.weight);
        for r in 0..pre.rows() {
            axpy(pre.row_mut(r), 1.0, &self.bias);
        }
        Ok(pre)
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        let mut out = self.pre_activation(x)?;
        let act = self.activation;
        out.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
        Ok(out)
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, DenseCache)> {
        let pre = self.pre_activation(x)?;
        let act = self.activation;
        let out = Matrix::from_vec(pre.rows(), pre.cols(), pre.as_slice().iter().map(|&v| act.apply(v)).collect())?;
        Ok((out, DenseCache { input: x.clone(), pre }))
    }

    /// Returns the parameter gradient and `∂/∂X`.
    pub fn backward(&self, cache: &DenseCache, d_out: &Matrix) -> (DenseLayer, Matrix) {
        let act = self.activation;
        let d_pre = Matrix::from_fn(d_out.rows(), d_out.cols(), |r, c| d_out.get(r, c) * act.derivative(cache.pre.get(r, c)));
        let grad = DenseLayer { weight: d_pre.t_matmul(&cache.input), bias: d_pre.column_sums(), activation: act };
        let d_in = d_pre.matmul(&self.weight);
        (grad, d_in)
    }
}

impl Parameters for DenseLayer {
    fn for_each(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&alloc::format!("{prefix}.weight"), self.weight.as_slice());
        f(&alloc::format!("{prefix}.bias"), &self.bias);
    }

    fn for_each_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&alloc::format!("{prefix}.weight"), self.weight.as_mut_slice());
        f(&alloc::format!("{prefix}.bias"), &mut self.bias);
    }
}

/// Applies a stack of dense layers, keeping caches for backward.
pub(crate) fn forward_stack(layers: &[DenseLayer], x: &Matrix) -> Result<(Matrix, Vec<DenseCache>)> {
    let mut h = x.clone();
    let mut caches = Vec::with_capacity(layers.len());
    for layer in layers {
        let (out, cache) = layer.forward(&h)?;
        caches.push(cache);
        h = out;
    }
    Ok((h, caches))
}

pub(crate) fn backward_stack(layers: &[DenseLayer], caches: &[DenseCache], d_out: &Matrix) -> (Vec<DenseLayer>, Matrix) {
    let mut grads = Vec::with_capacity(layers.len());
    let mut d = d_out.clone();
    for (layer, cache) in layers.iter().zip(caches).rev() {
        let (g, d_in) = layer.backward(cache, &d);
        grads.push(g);
        d = d_in;
    }
    grads.reverse();
    (grads, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_layer_passes_through() {
        let x = Matrix::from_fn(3, 2, |r, c| r as f64 - c as f64 * 0.5);
        assert_eq!(DenseLayer::identity(2).apply(&x).unwrap(), x);
    }

    #[test]
    fn activations() {
        assert_eq!(Activation::Relu.apply(-1.0), 0.0);
        assert_eq!(Activation::Elu.apply(2.0), 2.0);
        assert!((Activation::Elu.apply(-1.0) - (libm::exp(-1.0) - 1.0)).abs() < 1e-15);
        assert_eq!(leaky_relu(-1.0), -0.2);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let d = DenseLayer::identity(3);
        assert!(matches!(d.apply(&Matrix::zeros(2, 2)), Err(Error::Shape(_))));
    }
}
