//! Side-by-side comparison tables from stored reports.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use cpnet::EvaluationReport;

use crate::error::{CliError, CliResult};

const METRIC_ROWS: [&str; 8] = [
    "Error", "Empty", "Single", "Multi", "Avg.", "Miscal.", "Fuzz.", "Time",
];

/// Build the comparison table at one significance level: one row block per
/// model (Error/Empty/Single/Multi/Avg./Miscal./Fuzz./Time), one column per
/// dataset; missing (model, dataset) cells are dashed.
pub struct ComparisonTable {
    pub epsilon: f64,
    pub datasets: Vec<String>,
    pub models: Vec<String>,
    /// `(model, dataset) -> formatted metric values`, aligned with
    /// `METRIC_ROWS`.
    cells: BTreeMap<(String, String), [String; 8]>,
}

pub fn build_table(reports: &[EvaluationReport], epsilon: f64) -> CliResult<ComparisonTable> {
    if reports.len() < 2 {
        return Err(CliError::config(format!(
            "compare needs at least 2 reports, got {}",
            reports.len()
        )));
    }
    // every report must carry the comparison level and the same curve grid
    let reference_grid: Vec<f64> = reports[0]
        .calibration_curve
        .iter()
        .map(|p| p.epsilon)
        .collect();
    for r in reports {
        if r.rate_at(epsilon).is_none() {
            return Err(CliError::config(format!(
                "report for {} / {} has no rates at epsilon {epsilon}",
                r.model, r.dataset
            )));
        }
        let grid: Vec<f64> = r.calibration_curve.iter().map(|p| p.epsilon).collect();
        if grid != reference_grid {
            return Err(CliError::config(format!(
                "report for {} / {} uses a different significance grid",
                r.model, r.dataset
            )));
        }
    }

    let mut datasets = Vec::new();
    let mut models = Vec::new();
    let mut cells = BTreeMap::new();
    for r in reports {
        if !datasets.contains(&r.dataset) {
            datasets.push(r.dataset.clone());
        }
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
        let row = r.rate_at(epsilon).expect("checked above");
        let values = [
            format!("{:.2}%", 100.0 * row.error),
            format!("{:.2}%", 100.0 * row.empty),
            format!("{:.2}%", 100.0 * row.single),
            format!("{:.2}%", 100.0 * row.multi),
            format!("{:.2}", row.avg_set_size),
            format!("{:.2}", r.miscalibration),
            format!("{:.2}", r.fuzziness),
            format!("{:.2}s", r.training_seconds),
        ];
        let key = (r.model.clone(), r.dataset.clone());
        if let Some(existing) = cells.get(&key) {
            if existing != &values {
                return Err(CliError::config(format!(
                    "conflicting reports for {} / {}",
                    r.model, r.dataset
                )));
            }
        }
        cells.insert(key, values);
    }
    Ok(ComparisonTable {
        epsilon,
        datasets,
        models,
        cells,
    })
}

impl ComparisonTable {
    fn cell(&self, model: &str, dataset: &str, metric_idx: usize) -> &str {
        self.cells
            .get(&(model.to_owned(), dataset.to_owned()))
            .map(|v| v[metric_idx].as_str())
            .unwrap_or("-")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,metric");
        for d in &self.datasets {
            out.push(',');
            out.push_str(d);
        }
        out.push('\n');
        for model in &self.models {
            for (mi, metric) in METRIC_ROWS.iter().enumerate() {
                out.push_str(model);
                out.push(',');
                out.push_str(metric);
                for d in &self.datasets {
                    out.push(',');
                    out.push_str(self.cell(model, d, mi));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let model_w = self
            .models
            .iter()
            .map(|m| m.len())
            .max()
            .unwrap_or(5)
            .max("model".len());
        let metric_w = 7;
        let col_w = self
            .datasets
            .iter()
            .map(|d| d.len())
            .max()
            .unwrap_or(6)
            .max(8);
        let mut out = format!(
            "comparison at epsilon = {} (rates in %, time in seconds)\n",
            self.epsilon
        );
        out.push_str(&format!("{:<model_w$}  {:<metric_w$}", "model", "metric"));
        for d in &self.datasets {
            out.push_str(&format!("  {d:>col_w$}"));
        }
        out.push('\n');
        for model in &self.models {
            for (mi, metric) in METRIC_ROWS.iter().enumerate() {
                let shown_model = if mi == 0 { model.as_str() } else { "" };
                out.push_str(&format!("{shown_model:<model_w$}  {metric:<metric_w$}"));
                for d in &self.datasets {
                    out.push_str(&format!("  {:>col_w$}", self.cell(model, d, mi)));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn write(&self, out_dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| CliError::config(format!("cannot create {}: {e}", out_dir.display())))?;
        let csv_path = out_dir.join("comparison.csv");
        std::fs::write(&csv_path, self.to_csv())
            .map_err(|e| CliError::runtime(format!("{}: {e}", csv_path.display())))?;
        let txt_path = out_dir.join("comparison.txt");
        let mut f = std::fs::File::create(&txt_path)
            .map_err(|e| CliError::runtime(format!("{}: {e}", txt_path.display())))?;
        f.write_all(self.to_text().as_bytes())
            .map_err(|e| CliError::runtime(format!("{}: {e}", txt_path.display())))?;
        Ok(())
    }
}
