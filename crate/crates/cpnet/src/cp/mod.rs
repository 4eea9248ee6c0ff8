//! Exact conformal prediction around the network: margin nonconformity,
//! label-conditional ICP p-values, the ACP ensemble, and the direct-NN
//! adapter that reads sigmoid outputs as p-values.

mod acp;
mod icp;
mod ncm;
mod sets;

pub use acp::{acp_member_run, acp_pvalues, AcpConfig, AcpOutput};
pub use icp::{icp_pvalues, nn_pvalues, CalibrationScores};
pub use ncm::margin_ncm;
pub use sets::{prediction_sets, PredictionSet};

use std::io::Write;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Where a p-value matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PValueSource {
    Icp,
    /// Mean over this many ICP ensemble members.
    Acp(usize),
    DirectNn,
}

impl std::fmt::Display for PValueSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PValueSource::Icp => write!(f, "ICP"),
            PValueSource::Acp(n) => write!(f, "ACP({n})"),
            PValueSource::DirectNn => write!(f, "directNN"),
        }
    }
}

/// `N_test x C` conformal p-values, exact or approximated.
///
/// Rank-based sources live in `(0, 1]` (the `+1` smoothing forbids 0);
/// direct-NN values live in `(0, 1)` (sigmoid range).
#[derive(Debug, Clone)]
pub struct PValueMatrix {
    pub values: Array2<f64>,
    pub source: PValueSource,
}

impl PValueMatrix {
    pub fn n_test(&self) -> usize {
        self.values.nrows()
    }

    pub fn class_count(&self) -> usize {
        self.values.ncols()
    }

    /// True-class p-value per row.
    pub fn true_class(&self, labels: &[usize]) -> Result<Vec<f64>> {
        self.check_labels(labels)?;
        Ok(labels
            .iter()
            .enumerate()
            .map(|(i, &y)| self.values[[i, y]])
            .collect())
    }

    /// All false-class p-values in row-major order.
    pub fn false_class(&self, labels: &[usize]) -> Result<Vec<f64>> {
        self.check_labels(labels)?;
        let mut out = Vec::with_capacity(self.n_test() * (self.class_count() - 1));
        for (i, &y) in labels.iter().enumerate() {
            for (c, &p) in self.values.row(i).iter().enumerate() {
                if c != y {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }

    fn check_labels(&self, labels: &[usize]) -> Result<()> {
        if labels.len() != self.n_test() {
            return Err(Error::Shape(format!(
                "{} labels for {} test rows",
                labels.len(),
                self.n_test()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.class_count()) {
            return Err(Error::UnknownLabel {
                label: bad,
                class_count: self.class_count(),
            });
        }
        Ok(())
    }

    /// Export as `row,class,p_value,source` CSV with deterministic row-major
    /// ordering.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row,class,p_value,source")?;
        for row in 0..self.n_test() {
            for class in 0..self.class_count() {
                writeln!(
                    w,
                    "{row},{class},{},{}",
                    self.values[[row, class]],
                    self.source
                )?;
            }
        }
        Ok(())
    }
}
