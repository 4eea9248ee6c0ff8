//! Softmax cross-entropy on logits, the reference head for the plain
//! accuracy sanity check. Use with an identity-output network.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Mean cross entropy of row-wise softmax against integer labels, with the
/// gradient with respect to the logits.
pub fn softmax_cross_entropy(
    logits: &Array2<f64>,
    labels: &[usize],
) -> Result<(f64, Array2<f64>)> {
    let (n, c) = logits.dim();
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "{} labels for {} logit rows",
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
    let mut grad = Array2::zeros((n, c));
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        total -= (exp[y] / z).ln();
        for (j, &e) in exp.iter().enumerate() {
            let p = e / z;
            grad[[i, j]] = (p - if j == y { 1.0 } else { 0.0 }) / n as f64;
        }
    }
    Ok((total / n as f64, grad))
}
