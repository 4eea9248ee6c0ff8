//! Dataset ingestion, normalization, and train/calibration/test splitting.

mod idx;
mod split;
mod tabular;

pub use idx::load_idx_images;
pub use split::{split, DataSplit, SplitSpec};
pub use tabular::{load_csv, load_image_csv, CsvOptions};

use ndarray::Array2;

use crate::error::{Error, Result};

/// A feature matrix with integer labels.
///
/// Features are row-major `N x d` and normalized to `[0, 1]` by the loaders.
/// Labels take values in `[0, class_count)`.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub name: String,
}

impl LabeledDataset {
    /// Build a dataset, validating the type invariants.
    pub fn new(
        name: impl Into<String>,
        features: Array2<f64>,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(Error::Shape(format!("empty dataset ({n} x {d})")));
        }
        if labels.len() != n {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                n
            )));
        }
        if class_count < 2 {
            return Err(Error::DegenerateClassCount(class_count));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::UnknownLabel {
                label: bad,
                class_count,
            });
        }
        if !features.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        Ok(Self {
            features,
            labels,
            class_count,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    /// Copy the given rows into a dense matrix plus their labels.
    pub fn gather(&self, rows: &[usize]) -> (Array2<f64>, Vec<usize>) {
        let d = self.feature_dim();
        let mut out = Array2::zeros((rows.len(), d));
        let mut labels = Vec::with_capacity(rows.len());
        for (i, &r) in rows.iter().enumerate() {
            out.row_mut(i).assign(&self.features.row(r));
            labels.push(self.labels[r]);
        }
        (out, labels)
    }

    /// Per-class sample counts (length `class_count`).
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Stack two datasets with identical width and class count.
    ///
    /// Used to rejoin predetermined train/test files into one index space;
    /// rows of `self` come first.
    pub fn concat(&self, other: &LabeledDataset) -> Result<LabeledDataset> {
        if self.feature_dim() != other.feature_dim() {
            return Err(Error::Shape(format!(
                "cannot concat d={} with d={}",
                self.feature_dim(),
                other.feature_dim()
            )));
        }
        if self.class_count != other.class_count {
            return Err(Error::Shape(format!(
                "cannot concat class_count={} with class_count={}",
                self.class_count, other.class_count
            )));
        }
        let features = ndarray::concatenate(
            ndarray::Axis(0),
            &[self.features.view(), other.features.view()],
        )
        .map_err(|e| Error::Shape(e.to_string()))?;
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        LabeledDataset::new(self.name.clone(), features, labels, self.class_count)
    }
}

/// Keep only the listed classes, relabeling them to `0..keep.len()` in the
/// given order.
pub fn filter_classes(ds: &LabeledDataset, keep: &[usize]) -> Result<LabeledDataset> {
    if keep.is_empty() {
        return Err(Error::InvalidParameter("keep list is empty".into()));
    }
    if keep.len() < 2 {
        return Err(Error::DegenerateClassCount(keep.len()));
    }
    let mut remap = vec![None; ds.class_count];
    for (new, &old) in keep.iter().enumerate() {
        if old >= ds.class_count {
            return Err(Error::UnknownLabel {
                label: old,
                class_count: ds.class_count,
            });
        }
        if remap[old].is_some() {
            return Err(Error::InvalidParameter(format!(
                "class {old} listed twice in keep"
            )));
        }
        remap[old] = Some(new);
    }

    let rows: Vec<usize> = ds
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| remap[l].is_some())
        .map(|(i, _)| i)
        .collect();
    if rows.is_empty() {
        return Err(Error::Shape("no rows left after class filter".into()));
    }
    let (features, old_labels) = ds.gather(&rows);
    let labels = old_labels
        .into_iter()
        .map(|l| remap[l].expect("kept row has kept label"))
        .collect();
    LabeledDataset::new(ds.name.clone(), features, labels, keep.len())
}

/// Re-apply min-max scaling using statistics from the training portion only
/// (proper-train plus calibration), clamping all rows to `[0, 1]`.
pub fn rescale_for_split(ds: &LabeledDataset, split: &DataSplit) -> LabeledDataset {
    let train_rows = split.training_pool();
    let d = ds.feature_dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for &r in &train_rows {
        for (j, &v) in ds.features.row(r).iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let mut features = ds.features.clone();
    for mut row in features.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            let range = hi[j] - lo[j];
            *v = if range > 0.0 {
                ((*v - lo[j]) / range).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }
    LabeledDataset {
        features,
        labels: ds.labels.clone(),
        class_count: ds.class_count,
        name: ds.name.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> LabeledDataset {
        LabeledDataset::new(
            "toy",
            array![[0.0, 1.0], [0.5, 0.0], [1.0, 1.0], [0.25, 0.5]],
            vec![0, 1, 2, 1],
            3,
        )
        .unwrap()
    }

    #[test]
    fn new_rejects_label_out_of_range() {
        let err = LabeledDataset::new("x", array![[0.0], [1.0]], vec![0, 2], 2).unwrap_err();
        assert!(matches!(err, Error::UnknownLabel { label: 2, .. }));
    }

    #[test]
    fn new_rejects_non_finite() {
        let err =
            LabeledDataset::new("x", array![[0.0], [f64::NAN]], vec![0, 1], 2).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn filter_remaps_in_keep_order() {
        let ds = toy();
        let out = filter_classes(&ds, &[2, 0]).unwrap();
        assert_eq!(out.class_count, 2);
        assert_eq!(out.labels, vec![1, 0]);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn filter_keep_all_is_identity_relabel() {
        let ds = toy();
        let out = filter_classes(&ds, &[0, 1, 2]).unwrap();
        assert_eq!(out.labels, ds.labels);
        assert_eq!(out.features, ds.features);
    }

    #[test]
    fn filter_single_class_is_rejected() {
        let ds = toy();
        assert!(matches!(
            filter_classes(&ds, &[2]),
            Err(Error::DegenerateClassCount(1))
        ));
    }

    #[test]
    fn filter_unknown_class_is_rejected() {
        let ds = toy();
        assert!(matches!(
            filter_classes(&ds, &[0, 7]),
            Err(Error::UnknownLabel { label: 7, .. })
        ));
    }

    #[test]
    fn rescale_uses_train_stats_and_clamps_test() {
        let ds = LabeledDataset::new(
            "x",
            array![[0.0], [2.0], [4.0], [8.0]],
            vec![0, 1, 0, 1],
            2,
        )
        .unwrap();
        let split = DataSplit {
            proper_train: vec![0, 1],
            calibration: vec![2],
            test: vec![3],
        };
        let out = rescale_for_split(&ds, &split);
        // train stats: min 0, max 4
        assert_eq!(out.features[[1, 0]], 0.5);
        assert_eq!(out.features[[2, 0]], 1.0);
        // test row 8.0 clamps to 1.0
        assert_eq!(out.features[[3, 0]], 1.0);
    }
}
