//! Train/calibration/test splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// How to partition a dataset.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    /// Fraction of all rows that become the test partition.
    pub test_fraction: f64,
    /// Fraction of the remaining training portion carved out for
    /// calibration. Zero means no calibration set (direct-NN mode).
    pub calibration_fraction: f64,
    /// Preserve per-class proportions in every partition.
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.33,
            calibration_fraction: 0.0,
            stratified: true,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "test_fraction must be in (0,1), got {}",
                self.test_fraction
            )));
        }
        if !(0.0..1.0).contains(&self.calibration_fraction) {
            return Err(Error::InvalidParameter(format!(
                "calibration_fraction must be in [0,1), got {}",
                self.calibration_fraction
            )));
        }
        Ok(())
    }
}

/// Disjoint row-index sets covering the dataset they were built from.
///
/// Index sets are kept sorted so equal seeds produce byte-identical splits.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DataSplit {
    pub proper_train: Vec<usize>,
    pub calibration: Vec<usize>,
    pub test: Vec<usize>,
}

impl DataSplit {
    /// Split for sources that distribute their own train/test files: the
    /// first `train_len` rows are training, the rest test, no calibration.
    pub fn predetermined(train_len: usize, total_len: usize) -> Result<Self> {
        if train_len == 0 || train_len >= total_len {
            return Err(Error::InvalidParameter(format!(
                "predetermined split needs 0 < train_len < total_len, got {train_len}/{total_len}"
            )));
        }
        Ok(Self {
            proper_train: (0..train_len).collect(),
            calibration: Vec::new(),
            test: (train_len..total_len).collect(),
        })
    }

    /// All non-test rows (proper-train plus calibration), sorted.
    pub fn training_pool(&self) -> Vec<usize> {
        let mut pool = self.proper_train.clone();
        pool.extend_from_slice(&self.calibration);
        pool.sort_unstable();
        pool
    }

    pub fn total_len(&self) -> usize {
        self.proper_train.len() + self.calibration.len() + self.test.len()
    }

    /// Re-divide the training pool into proper-train and calibration with a
    /// stratified draw, leaving the test partition untouched.
    ///
    /// Ensemble members call this with independent seeds to get their own
    /// calibration resamples of the same pool.
    pub fn carve_calibration(
        &self,
        labels: &[usize],
        fraction: f64,
        seed: u64,
    ) -> Result<DataSplit> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::InvalidParameter(format!(
                "calibration fraction must be in [0,1), got {fraction}"
            )));
        }
        let pool = self.training_pool();
        let (calibration, proper_train) =
            stratified_take(&pool, labels, fraction, true, seed)?;
        Ok(DataSplit {
            proper_train,
            calibration,
            test: self.test.clone(),
        })
    }
}

/// Partition a dataset per `spec`.
///
/// The test partition is drawn first from all rows, then the calibration
/// partition from what remains. Per-class test proportions stay within one
/// sample of `test_fraction` when stratified. Deterministic for a fixed
/// seed.
pub fn split(ds: &LabeledDataset, spec: &SplitSpec) -> Result<DataSplit> {
    spec.validate()?;
    let all: Vec<usize> = (0..ds.len()).collect();
    let (test, train_pool) = stratified_take(
        &all,
        &ds.labels,
        spec.test_fraction,
        spec.stratified,
        spec.seed,
    )?;
    let (calibration, proper_train) = stratified_take(
        &train_pool,
        &ds.labels,
        spec.calibration_fraction,
        spec.stratified,
        derive_seed(spec.seed, 1),
    )?;
    Ok(DataSplit {
        proper_train,
        calibration,
        test,
    })
}

/// Draw `ceil(fraction * pool)` rows from `pool`, returning
/// `(taken, remainder)` both sorted.
///
/// When stratified, the take is apportioned per class: each class
/// contributes `floor(fraction * n_c)` rows and the leftover goes to the
/// classes with the largest fractional remainders, so every class lands
/// within one sample of the target fraction.
fn stratified_take(
    pool: &[usize],
    labels: &[usize],
    fraction: f64,
    stratified: bool,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if fraction == 0.0 {
        return Ok((Vec::new(), pool.to_vec()));
    }
    let total_take = (fraction * pool.len() as f64).ceil() as usize;
    if total_take >= pool.len() {
        return Err(Error::InvalidParameter(format!(
            "fraction {fraction} would take all {} rows",
            pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    if !stratified {
        let mut shuffled = pool.to_vec();
        shuffled.shuffle(&mut rng);
        let mut taken: Vec<usize> = shuffled[..total_take].to_vec();
        let mut rest: Vec<usize> = shuffled[total_take..].to_vec();
        taken.sort_unstable();
        rest.sort_unstable();
        return Ok((taken, rest));
    }

    let max_class = pool.iter().map(|&r| labels[r]).max().unwrap_or(0);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); max_class + 1];
    for &r in pool {
        by_class[labels[r]].push(r);
    }

    // floor quota per class, then largest-remainder apportionment
    let mut quotas: Vec<usize> = Vec::with_capacity(by_class.len());
    let mut remainders: Vec<(usize, f64)> = Vec::new();
    for (c, rows) in by_class.iter().enumerate() {
        if rows.is_empty() {
            quotas.push(0);
            continue;
        }
        if rows.len() < 2 {
            return Err(Error::Stratification {
                class: c,
                count: rows.len(),
            });
        }
        let exact = fraction * rows.len() as f64;
        let floor = exact.floor() as usize;
        quotas.push(floor);
        remainders.push((c, exact - floor as f64));
    }
    let mut leftover = total_take.saturating_sub(quotas.iter().sum::<usize>());
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for &(c, _) in remainders.iter().cycle().take(remainders.len() * 2) {
        if leftover == 0 {
            break;
        }
        if quotas[c] + 1 < by_class[c].len() {
            quotas[c] += 1;
            leftover -= 1;
        }
    }
    if leftover > 0 {
        return Err(Error::InvalidParameter(format!(
            "cannot take {total_take} rows while leaving every class non-empty"
        )));
    }

    let mut taken = Vec::with_capacity(total_take);
    let mut rest = Vec::with_capacity(pool.len() - total_take);
    for (c, rows) in by_class.iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rng);
        taken.extend_from_slice(&shuffled[..quotas[c]]);
        rest.extend_from_slice(&shuffled[quotas[c]..]);
    }
    taken.sort_unstable();
    rest.sort_unstable();
    Ok((taken, rest))
}
