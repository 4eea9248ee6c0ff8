//! Adam optimizer with persisted moment estimates.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::net::network::{BatchGradient, Network};

/// Hyperparameters for the mini-batch training loop.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    /// Must be at least 2: batch-level distribution losses are undefined on
    /// singletons.
    pub batch_size: usize,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 128,
            epochs: 3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::BatchTooSmall(self.batch_size));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for (name, beta) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be in [0,1), got {beta}"
                )));
            }
        }
        Ok(())
    }
}

/// First and second moment estimates, one pair per layer.
#[derive(Debug, Clone)]
pub(crate) struct AdamState {
    pub m: Vec<(Array2<f64>, Array1<f64>)>,
    pub v: Vec<(Array2<f64>, Array1<f64>)>,
}

impl AdamState {
    fn zeros_like(net: &Network) -> Self {
        let zeros = |n: &Network| {
            n.layers
                .iter()
                .map(|l| {
                    (
                        Array2::zeros(l.weights.dim()),
                        Array1::zeros(l.bias.len()),
                    )
                })
                .collect()
        };
        AdamState {
            m: zeros(net),
            v: zeros(net),
        }
    }
}

impl Network {
    /// One bias-corrected Adam update at step `t` (1-based).
    ///
    /// Rejects non-finite gradients before touching any parameter or moment.
    pub fn adam_step(
        &mut self,
        grads: &BatchGradient,
        config: &TrainingConfig,
        t: usize,
    ) -> Result<()> {
        if t == 0 {
            return Err(Error::InvalidParameter("adam step index starts at 1".into()));
        }
        if grads.layers.len() != self.layers.len() {
            return Err(Error::Shape(format!(
                "{} gradient layers for {} network layers",
                grads.layers.len(),
                self.layers.len()
            )));
        }
        for (layer, (gw, gb)) in self.layers.iter().zip(&grads.layers) {
            if gw.dim() != layer.weights.dim() || gb.len() != layer.bias.len() {
                return Err(Error::Shape("gradient shape mismatch".into()));
            }
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradient".into()));
        }

        if self.adam.is_none() {
            self.adam = Some(AdamState::zeros_like(self));
        }
        let mut state = self.adam.take().expect("state initialized above");

        let b1 = config.adam_beta1;
        let b2 = config.adam_beta2;
        let corr1 = 1.0 - b1.powi(t as i32);
        let corr2 = 1.0 - b2.powi(t as i32);
        let lr = config.learning_rate;
        let eps = config.adam_epsilon;

        for (l, (gw, gb)) in grads.layers.iter().enumerate() {
            update(
                self.layers[l].weights.as_slice_mut().expect("contiguous"),
                state.m[l].0.as_slice_mut().expect("contiguous"),
                state.v[l].0.as_slice_mut().expect("contiguous"),
                gw.as_slice().expect("contiguous"),
                b1, b2, corr1, corr2, lr, eps,
            );
            update(
                self.layers[l].bias.as_slice_mut().expect("contiguous"),
                state.m[l].1.as_slice_mut().expect("contiguous"),
                state.v[l].1.as_slice_mut().expect("contiguous"),
                gb.as_slice().expect("contiguous"),
                b1, b2, corr1, corr2, lr, eps,
            );
        }
        self.adam = Some(state);
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn update(
    theta: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    g: &[f64],
    b1: f64,
    b2: f64,
    corr1: f64,
    corr2: f64,
    lr: f64,
    eps: f64,
) {
    for i in 0..theta.len() {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        let m_hat = m[i] / corr1;
        let v_hat = v[i] / corr2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}
