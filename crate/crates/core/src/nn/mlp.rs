//! Batched multilayer perceptron with exact reverse-mode gradients.

use std::cell::Cell;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::tensor::Tensor2;

thread_local! {
    static FORWARD_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of forward passes executed on this thread. Used by tests to prove
/// that neural decoding is one-shot (exactly one pass per decode call).
pub fn forward_call_count() -> u64 {
    FORWARD_CALLS.with(Cell::get)
}

pub fn reset_forward_call_count() {
    FORWARD_CALLS.with(|c| c.set(0));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
    /// The logistic sigmoid; used by the supervised baseline's output head.
    Logistic,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
            Activation::Logistic => {
                // Stable in both tails.
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// Derivative given the pre-activation `z` and post-activation `a`.
    /// The ReLU subgradient at zero is defined as 0.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
            Activation::Logistic => a * (1.0 - a),
        }
    }
}

/// A dense feed-forward network: `dims[0]` inputs through affine layers of
/// widths `dims[1..]`, each followed by its activation.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    dims: Vec<usize>,
    /// `weights[l]` has shape `dims[l] x dims[l+1]`.
    weights: Vec<Tensor2>,
    biases: Vec<Vec<f64>>,
    activations: Vec<Activation>,
}

/// Per-layer values cached by a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[l]` is the input to layer `l` (so `inputs[0]` is the batch).
    inputs: Vec<Tensor2>,
    /// `preacts[l]` is `inputs[l] · W_l + b_l`.
    preacts: Vec<Tensor2>,
}

impl ForwardCache {
    /// Post-activation output of the last layer.
    pub fn output(&self) -> Tensor2 {
        let l = self.preacts.len() - 1;
        self.inputs[l + 1].clone()
    }

    /// Pre-activation values of the last layer (the logits of a logistic
    /// head). Needed for numerically stable cross-entropy.
    pub fn last_preact(&self) -> &Tensor2 {
        self.preacts.last().expect("cache has at least one layer")
    }
}

/// Parameter gradients with the same shapes as the model parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub d_weights: Vec<Tensor2>,
    pub d_biases: Vec<Vec<f64>>,
}

impl MlpModel {
    /// Initialize with uniform weights in `±sqrt(6 / (fan_in + fan_out))`
    /// and zero biases, drawing from `rng` in a fixed order.
    pub fn new<R: Rng>(dims: Vec<usize>, activations: Vec<Activation>, rng: &mut R) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::validation("model needs at least one layer".to_string()));
        }
        if activations.len() != dims.len() - 1 {
            return Err(Error::validation(format!(
                "{} activations for {} layers",
                activations.len(),
                dims.len() - 1
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::validation("zero-width layer".to_string()));
        }
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data: Vec<f64> =
                (0..fan_in * fan_out).map(|_| (2.0 * rng.random::<f64>() - 1.0) * limit).collect();
            weights.push(Tensor2::from_vec(fan_in, fan_out, data)?);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(MlpModel { dims, weights, biases, activations })
    }

    /// Build a model from explicit parameters (checkpoint loading).
    pub fn from_parts(
        dims: Vec<usize>,
        weights: Vec<Tensor2>,
        biases: Vec<Vec<f64>>,
        activations: Vec<Activation>,
    ) -> Result<Self> {
        if dims.len() < 2
            || weights.len() != dims.len() - 1
            || biases.len() != dims.len() - 1
            || activations.len() != dims.len() - 1
        {
            return Err(Error::validation("inconsistent model part counts".to_string()));
        }
        for l in 0..weights.len() {
            if weights[l].rows() != dims[l]
                || weights[l].cols() != dims[l + 1]
                || biases[l].len() != dims[l + 1]
            {
                return Err(Error::validation(format!("layer {l} shape mismatch")));
            }
        }
        Ok(MlpModel { dims, weights, biases, activations })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn output_activation(&self) -> Activation {
        *self.activations.last().unwrap()
    }

    pub fn weights(&self) -> &[Tensor2] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.rows() * w.cols()).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Forward pass; returns the output and the cache backprop needs.
    pub fn forward(&self, input: &Tensor2) -> Result<(Tensor2, ForwardCache)> {
        if input.cols() != self.dims[0] {
            return Err(Error::validation(format!(
                "input has {} features, model expects {}",
                input.cols(),
                self.dims[0]
            )));
        }
        FORWARD_CALLS.with(|c| c.set(c.get() + 1));
        let mut inputs = vec![input.clone()];
        let mut preacts = Vec::with_capacity(self.weights.len());
        for (l, w) in self.weights.iter().enumerate() {
            let mut z = inputs[l].matmul(w);
            let bias = &self.biases[l];
            for i in 0..z.rows() {
                for (v, b) in z.row_mut(i).iter_mut().zip(bias) {
                    *v += b;
                }
            }
            let act = self.activations[l];
            let mut a = z.clone();
            for v in a.data_mut() {
                *v = act.apply(*v);
            }
            preacts.push(z);
            inputs.push(a);
        }
        let output = inputs.last().unwrap().clone();
        Ok((output, ForwardCache { inputs, preacts }))
    }

    /// Forward pass without gradient bookkeeping (decode-time inference).
    pub fn infer(&self, input: &Tensor2) -> Result<Tensor2> {
        let (out, _) = self.forward(input)?;
        Ok(out)
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        if cache.preacts.len() != self.weights.len()
            || cache.inputs.len() != self.weights.len() + 1
            || (0..self.weights.len()).any(|l| {
                cache.inputs[l].cols() != self.dims[l]
                    || cache.preacts[l].cols() != self.dims[l + 1]
            })
        {
            return Err(Error::validation(
                "forward cache does not match this model".to_string(),
            ));
        }
        Ok(())
    }

    /// Reverse-mode gradients from a loss gradient w.r.t. the output
    /// (post-activation). Returns parameter gradients and the gradient
    /// w.r.t. the input batch.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_grad: &Tensor2,
    ) -> Result<(Gradients, Tensor2)> {
        self.check_cache(cache)?;
        let last = self.weights.len() - 1;
        if output_grad.rows() != cache.preacts[last].rows()
            || output_grad.cols() != self.dims[last + 1]
        {
            return Err(Error::validation("output gradient shape mismatch".to_string()));
        }
        let act = self.activations[last];
        let z = &cache.preacts[last];
        let a = &cache.inputs[last + 1];
        let mut dz = output_grad.clone();
        for (i, v) in dz.data_mut().iter_mut().enumerate() {
            *v *= act.derivative(z.data()[i], a.data()[i]);
        }
        self.backprop_from_last_preact(cache, dz)
    }

    /// Reverse-mode gradients given the gradient w.r.t. the *pre-activation*
    /// of the last layer. Lets fused losses (logistic + cross-entropy) skip
    /// the unstable output-space derivative.
    pub fn backward_from_logits(
        &self,
        cache: &ForwardCache,
        last_preact_grad: &Tensor2,
    ) -> Result<(Gradients, Tensor2)> {
        self.check_cache(cache)?;
        let last = self.weights.len() - 1;
        if last_preact_grad.rows() != cache.preacts[last].rows()
            || last_preact_grad.cols() != self.dims[last + 1]
        {
            return Err(Error::validation("logit gradient shape mismatch".to_string()));
        }
        self.backprop_from_last_preact(cache, last_preact_grad.clone())
    }

    fn backprop_from_last_preact(
        &self,
        cache: &ForwardCache,
        mut dz: Tensor2,
    ) -> Result<(Gradients, Tensor2)> {
        let layers = self.weights.len();
        let mut d_weights = vec![Tensor2::zeros(0, 0); layers];
        let mut d_biases = vec![Vec::new(); layers];
        for l in (0..layers).rev() {
            d_weights[l] = cache.inputs[l].transpose_matmul(&dz);
            d_biases[l] = dz.column_sums();
            let d_input = dz.matmul_transpose(&self.weights[l]);
            if l == 0 {
                return Ok((Gradients { d_weights, d_biases }, d_input));
            }
            let act = self.activations[l - 1];
            let z = &cache.preacts[l - 1];
            let a = &cache.inputs[l];
            dz = d_input;
            for (i, v) in dz.data_mut().iter_mut().enumerate() {
                *v *= act.derivative(z.data()[i], a.data()[i]);
            }
        }
        unreachable!("loop returns at l == 0");
    }

    /// In-place parameter access for the optimizer.
    pub(crate) fn params_mut(&mut self) -> (&mut [Tensor2], &mut [Vec<f64>]) {
        (&mut self.weights, &mut self.biases)
    }
}
