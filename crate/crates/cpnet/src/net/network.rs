//! Network parameters, forward pass, and reverse-mode gradients.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sigmoid outputs are clamped strictly inside (0, 1) so they can always be
/// read as p-values; the ceiling is the largest f64 below 1.
const SIGMOID_FLOOR: f64 = 1e-300;
const SIGMOID_CEIL: f64 = 1.0 - 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    /// Pass-through, used when a loss consumes raw logits (e.g. the softmax
    /// cross-entropy reference head).
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => {
                let s = if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                };
                s.clamp(SIGMOID_FLOOR, SIGMOID_CEIL)
            }
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// One dense layer: `out = f(x W^T + b)` with `weights` stored `out x in`.
#[derive(Debug, Clone)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }
}

/// Per-layer weight and bias gradients matching a network's shapes.
#[derive(Debug, Clone)]
pub struct BatchGradient {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl BatchGradient {
    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|(w, b)| {
            w.iter().all(|v| v.is_finite()) && b.iter().all(|v| v.is_finite())
        })
    }
}

/// A dense feedforward network plus its optimizer state.
#[derive(Debug, Clone)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub seed: u64,
    pub(crate) adam: Option<super::optim::AdamState>,
}

impl Network {
    /// Build a network with ReLU hidden layers and a sigmoid output head,
    /// the shape used for direct p-value approximation.
    ///
    /// Weights use uniform fan-in/fan-out scaling, biases start at zero, and
    /// initialization is deterministic for a fixed seed. An empty `hidden`
    /// list degenerates to logistic regression.
    pub fn init(
        input_dim: usize,
        class_count: usize,
        hidden: &[usize],
        seed: u64,
    ) -> Result<Network> {
        Self::init_with_output(input_dim, class_count, hidden, Activation::Sigmoid, seed)
    }

    /// Same as [`Network::init`] but with a caller-chosen output activation.
    pub fn init_with_output(
        input_dim: usize,
        class_count: usize,
        hidden: &[usize],
        output_activation: Activation,
        seed: u64,
    ) -> Result<Network> {
        if input_dim == 0 {
            return Err(Error::InvalidParameter("input_dim must be >= 1".into()));
        }
        if class_count < 2 {
            return Err(Error::DegenerateClassCount(class_count));
        }
        if hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidParameter(
                "hidden layer sizes must be >= 1".into(),
            ));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut in_dim = input_dim;
        for &h in hidden {
            layers.push(init_layer(&mut rng, in_dim, h, Activation::Relu));
            in_dim = h;
        }
        layers.push(init_layer(&mut rng, in_dim, class_count, output_activation));

        Ok(Network {
            layers,
            seed,
            adam: None,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").out_dim()
    }

    pub fn output_activation(&self) -> Activation {
        self.layers.last().expect("at least one layer").activation
    }

    /// Forward pass over a batch (rows are samples).
    pub fn forward(&self, batch: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let acts = self.forward_cached(batch)?;
        Ok(acts.into_iter().next_back().expect("output activation"))
    }

    /// Forward pass keeping every layer's activations, input first.
    pub(crate) fn forward_cached(&self, batch: ArrayView2<'_, f64>) -> Result<Vec<Array2<f64>>> {
        if batch.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "batch width {} does not match input dim {}",
                batch.ncols(),
                self.input_dim()
            )));
        }
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(batch.to_owned());
        for layer in &self.layers {
            let mut z = acts.last().expect("previous activation").dot(&layer.weights.t());
            z += &layer.bias;
            z.mapv_inplace(|v| layer.activation.apply(v));
            acts.push(z);
        }
        Ok(acts)
    }

    /// Chain-rule gradients of all parameters given the loss gradient with
    /// respect to the network outputs.
    ///
    /// Gradients are summed over the batch (the `1/N` of mean-reduced losses
    /// belongs to `loss_grad`), so gradients over disjoint sub-batches add
    /// up to the full-batch gradient.
    pub fn backward(
        &self,
        batch: ArrayView2<'_, f64>,
        loss_grad: ArrayView2<'_, f64>,
    ) -> Result<BatchGradient> {
        let acts = self.forward_cached(batch)?;
        self.backward_from_cache(&acts, loss_grad)
    }

    pub(crate) fn backward_from_cache(
        &self,
        acts: &[Array2<f64>],
        loss_grad: ArrayView2<'_, f64>,
    ) -> Result<BatchGradient> {
        let output = acts.last().expect("output activation");
        if loss_grad.dim() != output.dim() {
            return Err(Error::Shape(format!(
                "loss gradient {:?} does not match output {:?}",
                loss_grad.dim(),
                output.dim()
            )));
        }
        if !loss_grad.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("loss gradient".into()));
        }

        let mut grads: Vec<(Array2<f64>, Array1<f64>)> = Vec::with_capacity(self.layers.len());
        let mut upstream = loss_grad.to_owned();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let out = &acts[l + 1];
            // delta = dL/dz through the activation
            let mut delta = upstream;
            ndarray::Zip::from(&mut delta).and(out).for_each(|d, &a| {
                *d *= layer.activation.derivative_from_output(a);
            });
            let dw = delta.t().dot(&acts[l]);
            let db = delta.sum_axis(Axis(0));
            if l > 0 {
                upstream = delta.dot(&layer.weights);
            } else {
                upstream = delta; // unused
            }
            grads.push((dw, db));
        }
        grads.reverse();
        Ok(BatchGradient { layers: grads })
    }

    /// Forward over a row subset of a feature matrix, chunked to bound
    /// transient memory.
    pub fn forward_rows(
        &self,
        features: &Array2<f64>,
        rows: &[usize],
    ) -> Result<Array2<f64>> {
        const CHUNK: usize = 4096;
        let mut out = Array2::zeros((rows.len(), self.output_dim()));
        let d = features.ncols();
        for (chunk_idx, chunk) in rows.chunks(CHUNK).enumerate() {
            let mut batch = Array2::zeros((chunk.len(), d));
            for (i, &r) in chunk.iter().enumerate() {
                batch.row_mut(i).assign(&features.row(r));
            }
            let y = self.forward(batch.view())?;
            let start = chunk_idx * CHUNK;
            out.slice_mut(ndarray::s![start..start + chunk.len(), ..])
                .assign(&y);
        }
        Ok(out)
    }
}

fn init_layer(rng: &mut ChaCha8Rng, in_dim: usize, out_dim: usize, activation: Activation) -> Layer {
    let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
    let weights = Array2::from_shape_fn((out_dim, in_dim), |_| rng.gen_range(-limit..limit));
    Layer {
        weights,
        bias: Array1::zeros(out_dim),
        activation,
    }
}
