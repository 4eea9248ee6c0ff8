//! The margin-error nonconformity measure.

use crate::error::{Error, Result};

/// Margin score of labeling a sample as `label` given per-class probability
/// estimates: `0.5 - (max_{y != label} p[y] - p[label]) / 2`.
///
/// Higher means more conforming; p-value ranks count calibration scores at
/// or below a test score, so the two conventions fit together.
pub fn margin_ncm(prob_row: &[f64], label: usize) -> Result<f64> {
    if prob_row.len() < 2 {
        return Err(Error::DegenerateClassCount(prob_row.len()));
    }
    if label >= prob_row.len() {
        return Err(Error::UnknownLabel {
            label,
            class_count: prob_row.len(),
        });
    }
    if !prob_row.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("probability row".into()));
    }
    let best_other = prob_row
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(0.5 - (best_other - prob_row[label]) / 2.0)
}
