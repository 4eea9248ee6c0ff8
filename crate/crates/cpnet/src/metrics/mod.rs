//! Validity and efficiency metrics for conformal predictors.

mod ks;
mod report;

pub use ks::{ks_uniformity, KsResult};
pub use report::{evaluate, CurvePoint, EvaluationReport, RateRow};

use crate::cp::{prediction_sets, PValueMatrix, PredictionSet};
use crate::error::{Error, Result};

/// Ordered significance levels in (0, 1).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SignificanceGrid(Vec<f64>);

impl SignificanceGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty significance grid".into()));
        }
        for w in values.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter(
                    "significance grid must be strictly increasing".into(),
                ));
            }
        }
        if values[0] <= 0.0 || *values.last().expect("non-empty") >= 1.0 {
            return Err(Error::InvalidParameter(
                "significance grid must lie in (0,1)".into(),
            ));
        }
        Ok(Self(values))
    }

    /// The percent grid 0.01, 0.02, ..., 0.99.
    pub fn percent() -> Self {
        Self((1..100).map(|i| i as f64 / 100.0).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for SignificanceGrid {
    fn default() -> Self {
        Self::percent()
    }
}

/// Prediction-set outcome rates at one significance level.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SetRates {
    /// True label not in the prediction set.
    pub error: f64,
    /// Outlier samples (empty set).
    pub empty: f64,
    /// Efficient predictions (exactly one label).
    pub single: f64,
    /// Samples on a class boundary (more than one label).
    pub multi: f64,
}

/// Classify each prediction set as empty/single/multi and count errors.
///
/// The three size rates come from integer counts, so they sum to one up to
/// a final division.
pub fn set_rates(sets: &[PredictionSet], labels: &[usize]) -> Result<SetRates> {
    if sets.is_empty() || sets.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} sets for {} labels",
            sets.len(),
            labels.len()
        )));
    }
    let n = sets.len();
    let (mut errors, mut empty, mut single, mut multi) = (0usize, 0usize, 0usize, 0usize);
    for (set, &y) in sets.iter().zip(labels) {
        if !set.contains(y) {
            errors += 1;
        }
        match set.len() {
            0 => empty += 1,
            1 => single += 1,
            _ => multi += 1,
        }
    }
    debug_assert_eq!(empty + single + multi, n);
    Ok(SetRates {
        error: errors as f64 / n as f64,
        empty: empty as f64 / n as f64,
        single: single as f64 / n as f64,
        multi: multi as f64 / n as f64,
    })
}

/// Mean prediction-set size.
pub fn avg_set_size(sets: &[PredictionSet]) -> f64 {
    if sets.is_empty() {
        return 0.0;
    }
    sets.iter().map(|s| s.len() as f64).sum::<f64>() / sets.len() as f64
}

/// Empirical error rate at each grid level.
///
/// The true label is in the set iff its p-value exceeds epsilon, so the
/// error curve is the ECDF of the true-class p-values sampled on the grid.
/// (Equality with the prediction-set route is covered by tests.)
pub fn calibration_curve(
    p: &PValueMatrix,
    labels: &[usize],
    grid: &SignificanceGrid,
) -> Result<Vec<(f64, f64)>> {
    let mut true_p = p.true_class(labels)?;
    true_p.sort_by(|a, b| a.partial_cmp(b).expect("finite p-values"));
    let n = true_p.len() as f64;
    Ok(grid
        .values()
        .iter()
        .map(|&eps| {
            let count = true_p.partition_point(|&v| v <= eps);
            (eps, count as f64 / n)
        })
        .collect())
}

/// Mean absolute distance between the empirical error curve and the
/// diagonal, in percentage points.
pub fn miscalibration(p: &PValueMatrix, labels: &[usize], grid: &SignificanceGrid) -> Result<f64> {
    let curve = calibration_curve(p, labels, grid)?;
    let mean = curve
        .iter()
        .map(|&(eps, err)| (err - eps).abs())
        .sum::<f64>()
        / curve.len() as f64;
    Ok(100.0 * mean)
}

/// Mean over test rows of (sum of the row's p-values minus its maximum).
///
/// Zero when all mass sits on one class per row; small values mean
/// confident, concentrated p-values.
pub fn fuzziness(p: &PValueMatrix) -> f64 {
    let n = p.n_test();
    let mut total = 0.0;
    for row in p.values.rows() {
        let sum: f64 = row.sum();
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        total += sum - max;
    }
    total / n as f64
}

/// Error rate at one level via explicit prediction sets; the slow reference
/// route for [`calibration_curve`].
pub fn error_rate_via_sets(p: &PValueMatrix, labels: &[usize], epsilon: f64) -> Result<f64> {
    let sets = prediction_sets(p, epsilon)?;
    Ok(set_rates(&sets, labels)?.error)
}
