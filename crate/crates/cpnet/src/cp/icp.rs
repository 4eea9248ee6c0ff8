//! Inductive conformal p-values with label-conditional calibration.

use ndarray::Array2;

use crate::cp::ncm::margin_ncm;
use crate::cp::{PValueMatrix, PValueSource};
use crate::data::{DataSplit, LabeledDataset};
use crate::error::{Error, Result};
use crate::net::Network;

/// Per-class sorted margin scores of the calibration samples, scored at
/// their true labels.
#[derive(Debug, Clone)]
pub struct CalibrationScores {
    per_class: Vec<Vec<f64>>,
}

impl CalibrationScores {
    /// Score every calibration row at its true label and group by class.
    ///
    /// Every class must appear at least once; rank-based p-values are
    /// undefined for classes with no calibration evidence.
    pub fn from_outputs(
        outputs: &Array2<f64>,
        labels: &[usize],
        class_count: usize,
    ) -> Result<Self> {
        if outputs.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} calibration rows",
                labels.len(),
                outputs.nrows()
            )));
        }
        let mut per_class = vec![Vec::new(); class_count];
        for (i, &y) in labels.iter().enumerate() {
            let row = outputs.row(i);
            let score = margin_ncm(row.as_slice().expect("contiguous row"), y)?;
            per_class[y].push(score);
        }
        for (class, scores) in per_class.iter_mut().enumerate() {
            if scores.is_empty() {
                return Err(Error::CalibrationCoverage { class });
            }
            scores.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
        }
        Ok(Self { per_class })
    }

    pub fn class_size(&self, class: usize) -> usize {
        self.per_class[class].len()
    }

    /// Rank-based p-value of a test score for a candidate class:
    /// `(|{calibration scores of that class <= score}| + 1) / (m_class + 1)`.
    ///
    /// Ties count toward the rank; the attainable range is
    /// `[1/(m+1), 1]`.
    pub fn pvalue(&self, class: usize, score: f64) -> f64 {
        let scores = &self.per_class[class];
        // first index with value > score; equal values count
        let rank = scores.partition_point(|&s| s <= score);
        (rank + 1) as f64 / (scores.len() + 1) as f64
    }
}

/// Exact ICP p-values for the test partition.
///
/// The model must have been fit on the proper-train partition only; the
/// calibration partition supplies the ranks.
pub fn icp_pvalues(
    model: &Network,
    ds: &LabeledDataset,
    split: &DataSplit,
) -> Result<PValueMatrix> {
    if split.calibration.is_empty() {
        return Err(Error::Shape("empty calibration partition".into()));
    }
    if split.test.is_empty() {
        return Err(Error::Shape("empty test partition".into()));
    }
    let calib_outputs = model.forward_rows(&ds.features, &split.calibration)?;
    let calib_labels: Vec<usize> = split.calibration.iter().map(|&r| ds.labels[r]).collect();
    let scores = CalibrationScores::from_outputs(&calib_outputs, &calib_labels, ds.class_count)?;

    let test_outputs = model.forward_rows(&ds.features, &split.test)?;
    let mut values = Array2::zeros((split.test.len(), ds.class_count));
    for i in 0..split.test.len() {
        let row = test_outputs.row(i);
        let row_slice = row.as_slice().expect("contiguous row");
        for class in 0..ds.class_count {
            let alpha = margin_ncm(row_slice, class)?;
            values[[i, class]] = scores.pvalue(class, alpha);
        }
    }
    Ok(PValueMatrix {
        values,
        source: PValueSource::Icp,
    })
}

/// Read a conformal-loss network's sigmoid outputs on the test partition
/// directly as p-values.
pub fn nn_pvalues(
    model: &Network,
    ds: &LabeledDataset,
    split: &DataSplit,
) -> Result<PValueMatrix> {
    if split.test.is_empty() {
        return Err(Error::Shape("empty test partition".into()));
    }
    let values = model.forward_rows(&ds.features, &split.test)?;
    Ok(PValueMatrix {
        values,
        source: PValueSource::DirectNn,
    })
}
