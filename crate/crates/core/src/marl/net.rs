//! Dense feed-forward networks with hand-written backpropagation.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Identity,
    /// Logistic squashing into `(0, 1)`.
    Logistic,
}

/// A multilayer perceptron with rectified-linear hidden layers.
///
/// All parameters live in one flat vector, layer by layer, each layer storing
/// its `out x in` weight matrix row-major followed by its bias vector. The
/// optimizer, Polyak averaging and checkpoints all work on that vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
    output: OutputActivation,
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Input of every layer; `inputs[0]` is the network input.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of every layer.
    pre: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Mlp {
    fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn zeros(sizes: &[usize], output: OutputActivation) -> Self {
        assert!(sizes.len() >= 2, "a network needs input and output sizes");
        Mlp {
            sizes: sizes.to_vec(),
            params: vec![0.0; Self::param_count(sizes)],
            output,
        }
    }

    /// Uniform `(-1/sqrt(fan_in), 1/sqrt(fan_in))` initialization of weights
    /// and biases.
    pub fn random(sizes: &[usize], output: OutputActivation, rng: &mut impl Rng) -> Self {
        let mut net = Self::zeros(sizes, output);
        let mut offset = 0;
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out + fan_out] {
                *p = rng.random_range(-bound..bound);
            }
            offset += fan_in * fan_out + fan_out;
        }
        net
    }

    pub fn from_params(
        sizes: &[usize],
        output: OutputActivation,
        params: Vec<f64>,
    ) -> Result<Self> {
        let expected = Self::param_count(sizes);
        if params.len() != expected {
            return Err(Error::ShapeMismatch {
                what: "network parameters",
                expected,
                got: params.len(),
            });
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            params,
            output,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.sizes == other.sizes && self.output == other.output
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_trace(x).output
    }

    pub fn forward_trace(&self, x: &[f64]) -> Trace {
        assert_eq!(x.len(), self.input_dim(), "network input width");
        let layers = self.sizes.len() - 1;
        let mut inputs = Vec::with_capacity(layers);
        let mut pre = Vec::with_capacity(layers);
        let mut current = x.to_vec();
        let mut offset = 0;
        for li in 0..layers {
            let (n_in, n_out) = (self.sizes[li], self.sizes[li + 1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let bias = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    bias[o] + row.iter().zip(&current).map(|(w, a)| w * a).sum::<f64>()
                })
                .collect();
            let last = li + 1 == layers;
            let activated: Vec<f64> = if !last {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                match self.output {
                    OutputActivation::Identity => z.clone(),
                    OutputActivation::Logistic => z.iter().map(|&v| logistic(v)).collect(),
                }
            };
            inputs.push(std::mem::replace(&mut current, activated));
            pre.push(z);
        }
        Trace {
            inputs,
            pre,
            output: current,
        }
    }

    /// Backpropagates `grad_output` (dLoss/dOutput) through the pass in
    /// `trace`. Parameter gradients are added into `param_grad` when given;
    /// the gradient with respect to the network input is returned.
    pub fn backward(
        &self,
        trace: &Trace,
        grad_output: &[f64],
        mut param_grad: Option<&mut [f64]>,
    ) -> Vec<f64> {
        assert_eq!(
            grad_output.len(),
            self.output_dim(),
            "output gradient width"
        );
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            offsets.push(offset);
            offset += w[0] * w[1] + w[1];
        }

        // gradient w.r.t. the pre-activation of the current layer
        let mut delta: Vec<f64> = match self.output {
            OutputActivation::Identity => grad_output.to_vec(),
            OutputActivation::Logistic => grad_output
                .iter()
                .zip(&trace.output)
                .map(|(g, y)| g * y * (1.0 - y))
                .collect(),
        };
        for li in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[li], self.sizes[li + 1]);
            let base = offsets[li];
            let weights = &self.params[base..base + n_in * n_out];
            let input = &trace.inputs[li];
            if let Some(grad) = param_grad.as_deref_mut() {
                for o in 0..n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut grad[base + o * n_in..base + (o + 1) * n_in];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                    grad[base + n_in * n_out + o] += d;
                }
            }
            let mut upstream = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &weights[o * n_in..(o + 1) * n_in];
                for (u, w) in upstream.iter_mut().zip(row) {
                    *u += d * w;
                }
            }
            if li > 0 {
                let below = &trace.pre[li - 1];
                for (u, z) in upstream.iter_mut().zip(below) {
                    if *z <= 0.0 {
                        *u = 0.0;
                    }
                }
            }
            delta = upstream;
        }
        delta
    }

    /// Gradient of output `index` with respect to the input.
    pub fn input_gradient(&self, x: &[f64], index: usize) -> Vec<f64> {
        let trace = self.forward_trace(x);
        let mut seed = vec![0.0; self.output_dim()];
        seed[index] = 1.0;
        self.backward(&trace, &seed, None)
    }

    /// Smallest |pre-activation| over the hidden units for input `x`: how far
    /// the input is from a kink of the rectifier.
    pub fn min_hidden_margin(&self, x: &[f64]) -> f64 {
        let trace = self.forward_trace(x);
        let hidden = trace.pre.len() - 1;
        trace.pre[..hidden]
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, z| m.min(z.abs()))
    }
}
