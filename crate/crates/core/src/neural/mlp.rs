use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Activation applied after the last affine layer. Hidden layers use ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Identity,
    Softmax,
    Sigmoid,
    Tanh,
}

impl OutputActivation {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputActivation::Identity => "identity",
            OutputActivation::Softmax => "softmax",
            OutputActivation::Sigmoid => "sigmoid",
            OutputActivation::Tanh => "tanh",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "identity" => OutputActivation::Identity,
            "softmax" => OutputActivation::Softmax,
            "sigmoid" => OutputActivation::Sigmoid,
            "tanh" => OutputActivation::Tanh,
            other => return Err(Error::InvalidArgument(format!("unknown activation {other}"))),
        })
    }
}

/// Affine layer `y = W x + b` with `W` of shape `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }
}

/// Fully connected network with ReLU hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    layers: Vec<Dense>,
    output: OutputActivation,
}

/// Activations recorded by [`Mlp::forward_cached`] for backpropagation.
///
/// `activations[0]` is the input batch; `activations[l]` the output of layer `l`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("cache holds at least the input")
    }

    pub fn input(&self) -> &Array2<f64> {
        &self.activations[0]
    }
}

/// Parameter gradients with the same layout as the network, plus the
/// gradient with respect to the input batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
    pub input: Array2<f64>,
}

impl Gradients {
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn squared_norm(&self) -> f64 {
        self.slices().iter().flat_map(|s| s.iter()).map(|g| g * g).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|g| *g *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|g| g.is_finite()))
    }
}

fn relu_inplace(a: &mut Array2<f64>) {
    a.mapv_inplace(|v| v.max(0.0));
}

fn softmax_rows(a: &mut Array2<f64>) {
    for mut row in a.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(
        layer_sizes: &[usize],
        output: OutputActivation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, output)?;
        for layer in &mut net.layers {
            let (fan_out, fan_in) = layer.weight.dim();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            layer.weight.mapv_inplace(|_| rng.random_range(-limit..=limit));
        }
        Ok(net)
    }

    pub fn zeros(layer_sizes: &[usize], output: OutputActivation) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "layer sizes must list at least input and output, all positive: {layer_sizes:?}"
            )));
        }
        let layers = layer_sizes
            .windows(2)
            .map(|w| Dense::zeros(w[0], w[1]))
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            output,
        })
    }

    pub(crate) fn from_layers(
        layer_sizes: Vec<usize>,
        layers: Vec<Dense>,
        output: OutputActivation,
    ) -> Result<Self> {
        let net = Self { layer_sizes, layers, output };
        for (l, w) in net.layer_sizes.windows(2).enumerate() {
            let layer = net.layers.get(l).ok_or(Error::DimensionMismatch {
                expected: net.layer_sizes.len() - 1,
                actual: net.layers.len(),
            })?;
            if layer.weight.dim() != (w[1], w[0]) || layer.bias.len() != w[1] {
                return Err(Error::InvalidArgument(format!("layer {l} has the wrong shape")));
            }
        }
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated non-empty")
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.param_slices().iter().all(|s| s.iter().all(|p| p.is_finite()))
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let batch = ArrayView2::from_shape((1, x.len()), x)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(self.forward_batch(batch)?.into_raw_vec_and_offset().0)
    }

    /// Rows of `x` are samples.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let last = self.layers.len() - 1;
        let mut a = self.affine(0, x);
        for l in 1..=last {
            relu_inplace(&mut a);
            a = self.affine(l, a.view());
        }
        self.apply_output(&mut a);
        Ok(a)
    }

    pub fn forward_cached(&self, x: Array2<f64>) -> Result<ForwardCache> {
        self.check_input(x.ncols())?;
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x);
        for l in 0..=last {
            let mut a = self.affine(l, activations[l].view());
            if l < last {
                relu_inplace(&mut a);
            } else {
                self.apply_output(&mut a);
            }
            activations.push(a);
        }
        Ok(ForwardCache { activations })
    }

    /// Gradients of `sum(output ⊙ upstream)` with respect to every parameter
    /// and to the input, for the batch recorded in `cache`.
    pub fn backward(&self, cache: &ForwardCache, upstream: &Array2<f64>) -> Result<Gradients> {
        let out = cache.output();
        if upstream.dim() != out.dim() {
            return Err(Error::DimensionMismatch {
                expected: out.len(),
                actual: upstream.len(),
            });
        }
        let mut delta = match self.output {
            OutputActivation::Identity => upstream.clone(),
            OutputActivation::Sigmoid => upstream * &out.mapv(|y| y * (1.0 - y)),
            OutputActivation::Tanh => upstream * &out.mapv(|y| 1.0 - y * y),
            OutputActivation::Softmax => {
                let mut d = upstream * out;
                for (mut row, y) in d.rows_mut().into_iter().zip(out.rows()) {
                    let dot = row.sum();
                    row.zip_mut_with(&y, |v, &p| *v -= p * dot);
                }
                d
            }
        };

        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let prev = &cache.activations[l];
            let weight = delta.t().dot(prev).as_standard_layout().into_owned();
            let bias = delta.sum_axis(Axis(0));
            let mut back = delta.dot(&self.layers[l].weight);
            if l > 0 {
                back.zip_mut_with(prev, |g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
            }
            grads.push(Dense { weight, bias });
            delta = back;
        }
        grads.reverse();
        Ok(Gradients { layers: grads, input: delta })
    }

    /// `self ← tau * source + (1 - tau) * self`.
    pub fn soft_update_from(&mut self, source: &Mlp, tau: f64) -> Result<()> {
        if source.layer_sizes != self.layer_sizes {
            return Err(Error::InvalidArgument("soft update between different shapes".into()));
        }
        for (dst, src) in self.param_slices_mut().into_iter().zip(source.param_slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = tau * s + (1.0 - tau) * *d;
            }
        }
        Ok(())
    }

    fn check_input(&self, width: usize) -> Result<()> {
        if width != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: width,
            });
        }
        Ok(())
    }

    fn affine(&self, l: usize, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let layer = &self.layers[l];
        let mut z = x.dot(&layer.weight.t());
        z += &layer.bias;
        z
    }

    fn apply_output(&self, a: &mut Array2<f64>) {
        match self.output {
            OutputActivation::Identity => {}
            OutputActivation::Sigmoid => a.mapv_inplace(|v| 1.0 / (1.0 + (-v).exp())),
            OutputActivation::Tanh => a.mapv_inplace(f64::tanh),
            OutputActivation::Softmax => softmax_rows(a),
        }
    }
}
