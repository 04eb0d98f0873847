use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Softmax,
    Identity,
}

/// Output head of a classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    /// Independent Bernoulli outputs, one per column.
    Sigmoid,
    /// One categorical distribution over the outputs.
    Softmax,
}

impl Head {
    pub fn activation(self) -> Activation {
        match self {
            Head::Sigmoid => Activation::Sigmoid,
            Head::Softmax => Activation::Softmax,
        }
    }
}

/// Which quantity input gradients are taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientSpace {
    /// Post-activation output (probabilities for classifier heads).
    #[default]
    Probability,
    /// Pre-activation output of the last layer.
    Logit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out × in`
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weight: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::DimensionMismatch {
                context: "Layer bias",
                expected: weight.rows(),
                actual: bias.len(),
            });
        }
        Ok(Self {
            weight,
            bias,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    fn param_count(&self) -> usize {
        self.weight.rows() * self.weight.cols() + self.bias.len()
    }
}

/// Feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
}

/// Activations recorded by a forward pass, consumed by backprop.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `inputs[l]` is the input to layer `l`; the last entry is the network output.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().expect("trace holds at least the input")
    }

    pub fn logits(&self) -> &[f64] {
        self.pre.last().map_or(&[], |v| v.as_slice())
    }
}

impl MlpModel {
    /// Builds a network from explicit layers; only dimension chaining is checked.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("a network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::DimensionMismatch {
                    context: "layer chaining",
                    expected: pair[0].output_dim(),
                    actual: pair[1].input_dim(),
                });
            }
        }
        Ok(Self { layers })
    }

    /// Relu hidden layers followed by a classifier head, Glorot-uniform weights and zero biases.
    pub fn init(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        head: Head,
        rng: &mut Rng,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 || hidden.contains(&0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        if head == Head::Softmax && output_dim < 2 {
            return Err(Error::invalid("a softmax head needs at least two outputs"));
        }
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(output_dim);
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|l| {
                let (fan_in, fan_out) = (dims[l], dims[l + 1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| rng.uniform_range(-limit, limit))
                    .collect();
                let activation = if l + 1 == n {
                    head.activation()
                } else {
                    Activation::Relu
                };
                Layer::new(
                    Matrix::new(fan_out, fan_in, data)?,
                    vec![0.0; fan_out],
                    activation,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// Classifier head, if the final activation is sigmoid or softmax.
    pub fn head(&self) -> Option<Head> {
        match self.layers[self.layers.len() - 1].activation {
            Activation::Sigmoid => Some(Head::Sigmoid),
            Activation::Softmax => Some(Head::Softmax),
            _ => None,
        }
    }

    /// Index of the "positive" output used when a single score is needed.
    pub fn positive_index(&self) -> usize {
        if self.output_dim() == 1 {
            0
        } else {
            1
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Parameters flattened as `[W₀, b₀, W₁, b₁, …]`.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(layer.weight.data());
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    /// Applies `f(index, &mut param)` in the flattened parameter order.
    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let mut idx = 0;
        for layer in &mut self.layers {
            for p in layer.weight.data_mut().iter_mut().chain(layer.bias.iter_mut()) {
                f(idx, p);
                idx += 1;
            }
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "model input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        for layer in &self.layers {
            let mut z = layer.weight.matvec(&a)?;
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi += bi;
            }
            a = activate(layer.activation, &z);
        }
        Ok(a)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        inputs.push(x.to_vec());
        for layer in &self.layers {
            let mut z = layer.weight.matvec(inputs.last().unwrap())?;
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi += bi;
            }
            inputs.push(activate(layer.activation, &z));
            pre.push(z);
        }
        Ok(ForwardTrace { inputs, pre })
    }

    /// Logits (last pre-activation) at `x`.
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x)?.pre.pop().unwrap_or_default())
    }

    /// Reverse pass from a gradient on the last layer's pre-activation.
    ///
    /// Returns the gradient with respect to the input. When `param_grad` is
    /// given, parameter gradients are accumulated into it in
    /// [`MlpModel::params`] order.
    pub fn backward_from_logits(
        &self,
        trace: &ForwardTrace,
        d_logits: &[f64],
        mut param_grad: Option<&mut [f64]>,
    ) -> Vec<f64> {
        let offsets = self.param_offsets();
        let mut delta = d_logits.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            if l + 1 < self.layers.len() {
                delta = activation_backward(layer.activation, &trace.pre[l], &trace.inputs[l + 1], &delta);
            }
            if let Some(grad) = param_grad.as_deref_mut() {
                let input = &trace.inputs[l];
                let (rows, cols) = layer.weight.shape();
                let base = offsets[l];
                for i in 0..rows {
                    let d = delta[i];
                    if d == 0.0 {
                        continue;
                    }
                    let g_row = &mut grad[base + i * cols..base + (i + 1) * cols];
                    for (g, &a) in g_row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                    grad[base + rows * cols + i] += d;
                }
            }
            delta = layer
                .weight
                .t_matvec(&delta)
                .expect("delta length matches layer output");
        }
        delta
    }

    /// Reverse pass from a gradient on the network output.
    pub fn backward_from_output(
        &self,
        trace: &ForwardTrace,
        d_output: &[f64],
        param_grad: Option<&mut [f64]>,
    ) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let d_logits = activation_backward(
            self.layers[last].activation,
            &trace.pre[last],
            trace.output(),
            d_output,
        );
        self.backward_from_logits(trace, &d_logits, param_grad)
    }

    /// Exact derivative of output component `output_index` with respect to `x`.
    pub fn input_gradient(&self, x: &[f64], output_index: usize) -> Result<Vec<f64>> {
        self.input_gradient_in(x, output_index, GradientSpace::Probability)
    }

    pub fn input_gradient_in(
        &self,
        x: &[f64],
        output_index: usize,
        space: GradientSpace,
    ) -> Result<Vec<f64>> {
        if output_index >= self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "output index",
                expected: self.output_dim(),
                actual: output_index,
            });
        }
        let trace = self.forward_trace(x)?;
        let mut seed = vec![0.0; self.output_dim()];
        seed[output_index] = 1.0;
        Ok(match space {
            GradientSpace::Probability => self.backward_from_output(&trace, &seed, None),
            GradientSpace::Logit => self.backward_from_logits(&trace, &seed, None),
        })
    }

    /// Jacobian of all outputs, one row per output (`output_dim × input_dim`).
    pub fn input_jacobian(&self, x: &[f64], space: GradientSpace) -> Result<Matrix> {
        let trace = self.forward_trace(x)?;
        let k = self.output_dim();
        let mut data = Vec::with_capacity(k * self.input_dim());
        for j in 0..k {
            let mut seed = vec![0.0; k];
            seed[j] = 1.0;
            let g = match space {
                GradientSpace::Probability => self.backward_from_output(&trace, &seed, None),
                GradientSpace::Logit => self.backward_from_logits(&trace, &seed, None),
            };
            data.extend(g);
        }
        Matrix::new(k, self.input_dim(), data)
    }

    fn param_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for layer in &self.layers {
            offsets.push(acc);
            acc += layer.param_count();
        }
        offsets
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn activate(act: Activation, z: &[f64]) -> Vec<f64> {
    match act {
        Activation::Identity => z.to_vec(),
        Activation::Relu => z.iter().map(|&v| if v < 0.0 { 0.0 } else { v }).collect(),
        Activation::Sigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
        Activation::Softmax => {
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / sum).collect()
        }
    }
}

/// Pulls a gradient on post-activations back to pre-activations.
fn activation_backward(act: Activation, pre: &[f64], post: &[f64], d_post: &[f64]) -> Vec<f64> {
    match act {
        Activation::Identity => d_post.to_vec(),
        Activation::Relu => pre
            .iter()
            .zip(d_post)
            .map(|(&z, &d)| if z > 0.0 { d } else { 0.0 })
            .collect(),
        Activation::Sigmoid => post
            .iter()
            .zip(d_post)
            .map(|(&s, &d)| d * s * (1.0 - s))
            .collect(),
        Activation::Softmax => {
            let inner: f64 = post.iter().zip(d_post).map(|(p, d)| p * d).sum();
            post.iter().zip(d_post).map(|(&p, &d)| p * (d - inner)).collect()
        }
    }
}
