//! The per-run evaluation report and its file exports.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cp::{prediction_sets, PValueMatrix};
use crate::error::{Error, Result};
use crate::metrics::{
    avg_set_size, calibration_curve, fuzziness, ks_uniformity, miscalibration, set_rates,
    SignificanceGrid,
};

/// Prediction-set rates and mean set size at one significance level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub epsilon: f64,
    pub error: f64,
    pub empty: f64,
    pub single: f64,
    pub multi: f64,
    pub avg_set_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epsilon: f64,
    pub error: f64,
}

/// Everything measured on one run: per-level rates, the mean set size at
/// the comparison level, KS uniformity of the true-class p-values,
/// miscalibration over the grid, fuzziness, the calibration curve, and the
/// wall-clock training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub model: String,
    pub rates: Vec<RateRow>,
    /// Mean set size at the comparison level (0.1 when reported, otherwise
    /// the middle level).
    pub avg_set_size: f64,
    pub ks_statistic: f64,
    pub ks_pvalue: f64,
    /// Percentage points.
    pub miscalibration: f64,
    pub fuzziness: f64,
    pub calibration_curve: Vec<CurvePoint>,
    pub training_seconds: f64,
}

/// Score a p-value matrix against the test labels.
///
/// `levels` are the reported significance levels (the comparison tables use
/// 0.05/0.1/0.2); `grid` drives miscalibration and the calibration curve.
pub fn evaluate(
    p: &PValueMatrix,
    labels: &[usize],
    levels: &[f64],
    grid: &SignificanceGrid,
    dataset: impl Into<String>,
    model: impl Into<String>,
    training_seconds: f64,
) -> Result<EvaluationReport> {
    if levels.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one significance level required".into(),
        ));
    }
    let mut rates = Vec::with_capacity(levels.len());
    for &eps in levels {
        let sets = prediction_sets(p, eps)?;
        let r = set_rates(&sets, labels)?;
        let row = RateRow {
            epsilon: eps,
            error: r.error,
            empty: r.empty,
            single: r.single,
            multi: r.multi,
            avg_set_size: avg_set_size(&sets),
        };
        check_rate_identities(&row)?;
        rates.push(row);
    }

    let comparison = rates
        .iter()
        .find(|r| (r.epsilon - 0.1).abs() < 1e-12)
        .copied()
        .unwrap_or(rates[rates.len() / 2]);

    let true_p = p.true_class(labels)?;
    let ks = ks_uniformity(&true_p)?;
    let curve = calibration_curve(p, labels, grid)?;
    for w in curve.windows(2) {
        if w[1].1 < w[0].1 {
            return Err(Error::InvalidParameter(format!(
                "calibration curve decreased between eps {} and {}",
                w[0].0, w[1].0
            )));
        }
    }

    Ok(EvaluationReport {
        dataset: dataset.into(),
        model: model.into(),
        rates,
        avg_set_size: comparison.avg_set_size,
        ks_statistic: ks.statistic,
        ks_pvalue: ks.p_value,
        miscalibration: miscalibration(p, labels, grid)?,
        fuzziness: fuzziness(p),
        calibration_curve: curve
            .into_iter()
            .map(|(epsilon, error)| CurvePoint { epsilon, error })
            .collect(),
        training_seconds,
    })
}

fn check_rate_identities(r: &RateRow) -> Result<()> {
    if (r.empty + r.single + r.multi - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "set-size rates do not sum to 1 at eps {}",
            r.epsilon
        )));
    }
    if r.error < r.empty - 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "error {} below empty rate {} at eps {}",
            r.error, r.empty, r.epsilon
        )));
    }
    Ok(())
}

impl EvaluationReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let json =
            serde_json::to_string_pretty(self).map_err(|e| Error::Checkpoint(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    /// Plot-ready `epsilon,error` CSV of the calibration curve.
    pub fn write_curve_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        writeln!(buf, "epsilon,error").expect("vec write");
        for pt in &self.calibration_curve {
            writeln!(buf, "{},{}", pt.epsilon, pt.error).expect("vec write");
        }
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    /// The rate row at a given level, if reported.
    pub fn rate_at(&self, epsilon: f64) -> Option<&RateRow> {
        self.rates
            .iter()
            .find(|r| (r.epsilon - epsilon).abs() < 1e-12)
    }
}
