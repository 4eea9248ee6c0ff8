//! The conformal approximation loss.
//!
//! A well-calibrated conformal predictor emits true-class p-values that are
//! uniform on (0, 1) and false-class p-values near 0. This loss pushes a
//! sigmoid-output network toward exactly that profile so the outputs can be
//! read as p-values directly:
//!
//! - false-class outputs get binary cross entropy against 0;
//! - true-class outputs, as a batch sample, are matched to `U[0,1]` through
//!   four terms: distance of the mean from 1/2, distance of the variance
//!   from 1/12, the l2 norm of the sum-normalized sample (a collision
//!   statistic that penalizes lumpy distributions), and a negated Huber
//!   term that pushes values away from the over-represented point `delta`.
//!
//! Every component returns its exact gradient, so the composite is a drop-in
//! batch loss for gradient descent.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Component weights and shape parameters for [`conformal_loss`].
///
/// The defaults are the grid-searched MNIST weights; the l2 weight is the
/// one component worth re-tuning per dataset.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub w_false: f64,
    pub w_true: f64,
    pub w_mean: f64,
    pub w_var: f64,
    pub w_l2: f64,
    pub w_huber: f64,
    /// Huber quadratic/linear transition; 1.0 keeps all (0,1) outputs in the
    /// quadratic regime.
    pub huber_alpha: f64,
    /// Center the negated Huber term here.
    pub huber_delta: f64,
    /// Outputs are clipped into `[clip, 1-clip]` before logs.
    pub clip_epsilon: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w_false: 1.0,
            w_true: 1.0,
            w_mean: 1.0,
            w_var: 1.0,
            w_l2: 5.0,
            w_huber: 0.25,
            huber_alpha: 1.0,
            huber_delta: 0.125,
            clip_epsilon: 1e-7,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("w_false", self.w_false),
            ("w_true", self.w_true),
            ("w_mean", self.w_mean),
            ("w_var", self.w_var),
            ("w_l2", self.w_l2),
            ("w_huber", self.w_huber),
        ];
        for (name, w) in weights {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a non-negative real, got {w}"
                )));
            }
        }
        if !(self.huber_alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "huber_alpha must be positive, got {}",
                self.huber_alpha
            )));
        }
        if !(self.huber_delta > 0.0 && self.huber_delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "huber_delta must be in (0,1), got {}",
                self.huber_delta
            )));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon <= 1e-3) {
            return Err(Error::InvalidParameter(format!(
                "clip_epsilon must be in (0, 1e-3], got {}",
                self.clip_epsilon
            )));
        }
        Ok(())
    }
}

/// Batch outputs partitioned into the true-class entry per row and the
/// remaining false-class entries, with their (row, class) positions.
#[derive(Debug, Clone)]
pub struct BatchMasks {
    pub true_outputs: Vec<f64>,
    pub false_outputs: Vec<f64>,
    pub true_positions: Vec<(usize, usize)>,
    pub false_positions: Vec<(usize, usize)>,
}

/// Split `outputs[n, c]` into the true entry (`c == labels[n]`) per row and
/// the other `C - 1` entries in row-major order.
pub fn mask_outputs(outputs: &Array2<f64>, labels: &[usize]) -> Result<BatchMasks> {
    let (n, c) = outputs.dim();
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "{} labels for {} output rows",
            labels.len(),
            n
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::UnknownLabel {
            label: bad,
            class_count: c,
        });
    }
    let mut masks = BatchMasks {
        true_outputs: Vec::with_capacity(n),
        false_outputs: Vec::with_capacity(n * (c - 1)),
        true_positions: Vec::with_capacity(n),
        false_positions: Vec::with_capacity(n * (c - 1)),
    };
    for (row, &label) in labels.iter().enumerate() {
        for (col, &v) in outputs.row(row).iter().enumerate() {
            if col == label {
                masks.true_outputs.push(v);
                masks.true_positions.push((row, col));
            } else {
                masks.false_outputs.push(v);
                masks.false_positions.push((row, col));
            }
        }
    }
    Ok(masks)
}

/// Binary cross entropy of the false-class outputs against 0:
/// `-mean(log(1 - v))` with values clipped into `[clip, 1-clip]`.
///
/// An empty input is defined as zero loss with zero gradient.
pub fn loss_false(values: &[f64], clip: f64) -> (f64, Vec<f64>) {
    if values.is_empty() {
        return (0.0, Vec::new());
    }
    let m = values.len() as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(values.len());
    for &v in values {
        let clipped = v.clamp(clip, 1.0 - clip);
        total -= (1.0 - clipped).ln();
        // clipping saturates the gradient outside the clip range
        grad.push(if v > clip && v < 1.0 - clip {
            1.0 / (m * (1.0 - clipped))
        } else {
            0.0
        });
    }
    (total / m, grad)
}

/// Distance of the sample mean from `E[U(0,1)] = 1/2`, as `sqrt((mu-1/2)^2)`.
///
/// The kink at zero takes subgradient 0.
pub fn loss_mean(values: &[f64]) -> (f64, Vec<f64>) {
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let diff = mu - 0.5;
    let value = diff.abs();
    let g = signum_or_zero(diff) / n;
    (value, vec![g; values.len()])
}

/// Distance of the population variance from `Var[U(0,1)] = 1/12`.
pub fn loss_var(values: &[f64]) -> Result<(f64, Vec<f64>)> {
    if values.len() < 2 {
        return Err(Error::BatchTooSmall(values.len()));
    }
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    let diff = var - 1.0 / 12.0;
    let value = diff.abs();
    let sign = signum_or_zero(diff);
    let grad = values
        .iter()
        .map(|&v| sign * 2.0 * (v - mu) / n)
        .collect();
    Ok((value, grad))
}

/// l2 norm of the sum-normalized sample, `||v / sum(v)||_2`.
///
/// A collision statistic: minimal (`1/sqrt(N)`) for a flat sample, 1 when
/// all mass sits on one entry. Scale-invariant, so it measures shape only.
pub fn loss_l2(values: &[f64]) -> (f64, Vec<f64>) {
    let s: f64 = values.iter().sum();
    let q: f64 = values.iter().map(|v| v * v).sum();
    let root_q = q.sqrt();
    let value = root_q / s;
    let grad = values
        .iter()
        .map(|&v| v / (root_q * s) - root_q / (s * s))
        .collect();
    (value, grad)
}

/// Negated mean Huber loss of the sample around `delta`.
///
/// Huber is quadratic within `|x| <= alpha` and linear outside; negating it
/// rewards outputs that move away from the over-represented point `delta`,
/// fighting the normal-like bump under-fit models produce.
pub fn loss_huber(values: &[f64], alpha: f64, delta: f64) -> (f64, Vec<f64>) {
    let n = values.len() as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(values.len());
    for &v in values {
        let x = v - delta;
        let (h, dh) = if x.abs() <= alpha {
            (0.5 * x * x, x)
        } else {
            (alpha * (x.abs() - 0.5 * alpha), alpha * signum_or_zero(x))
        };
        total -= h;
        grad.push(-dh / n);
    }
    (total / n, grad)
}

/// The composite conformal loss and its gradient for every output.
///
/// `w_false * loss_false + w_true * (w_mean * loss_mean + w_var * loss_var
/// + w_l2 * loss_l2 + w_huber * loss_huber)`, with component gradients
/// scattered back to the (row, class) positions they came from. False-class
/// positions receive only the cross-entropy gradient; true-class positions
/// only the distribution-term gradients.
pub fn conformal_loss(
    outputs: &Array2<f64>,
    labels: &[usize],
    w: &LossWeights,
) -> Result<(f64, Array2<f64>)> {
    if outputs.nrows() < 2 {
        return Err(Error::BatchTooSmall(outputs.nrows()));
    }
    let masks = mask_outputs(outputs, labels)?;

    let (v_false, g_false) = loss_false(&masks.false_outputs, w.clip_epsilon);
    let (v_mean, g_mean) = loss_mean(&masks.true_outputs);
    let (v_var, g_var) = loss_var(&masks.true_outputs)?;
    let (v_l2, g_l2) = loss_l2(&masks.true_outputs);
    let (v_huber, g_huber) = loss_huber(&masks.true_outputs, w.huber_alpha, w.huber_delta);

    let true_value =
        w.w_mean * v_mean + w.w_var * v_var + w.w_l2 * v_l2 + w.w_huber * v_huber;
    let value = w.w_false * v_false + w.w_true * true_value;

    let mut grad = Array2::zeros(outputs.dim());
    for (i, &(row, col)) in masks.false_positions.iter().enumerate() {
        grad[[row, col]] = w.w_false * g_false[i];
    }
    for (i, &(row, col)) in masks.true_positions.iter().enumerate() {
        grad[[row, col]] = w.w_true
            * (w.w_mean * g_mean[i]
                + w.w_var * g_var[i]
                + w.w_l2 * g_l2[i]
                + w.w_huber * g_huber[i]);
    }
    Ok((value, grad))
}

fn signum_or_zero(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
