//! Prediction sets from p-values.

use crate::cp::PValueMatrix;
use crate::error::{Error, Result};

/// The labels whose p-values exceed the significance level for one test
/// sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    /// Sorted ascending.
    pub labels: Vec<usize>,
    pub epsilon: f64,
}

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: usize) -> bool {
        self.labels.binary_search(&label).is_ok()
    }
}

/// One prediction set per test row: label in the set iff `p > epsilon`
/// (strict).
pub fn prediction_sets(p: &PValueMatrix, epsilon: f64) -> Result<Vec<PredictionSet>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be in (0,1), got {epsilon}"
        )));
    }
    Ok(p
        .values
        .rows()
        .into_iter()
        .map(|row| PredictionSet {
            labels: row
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v > epsilon)
                .map(|(c, _)| c)
                .collect(),
            epsilon,
        })
        .collect())
}
