//! The experiment config file (TOML) and its validation.

use std::path::{Path, PathBuf};

use cpnet::{LossWeights, SignificanceGrid, TrainingConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub master_seed: u64,
    /// Default output directory; `--out` and `CPNET_OUT_DIR` override it.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub loss: LossWeights,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default)]
    pub gridsearch: Option<GridSearchSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetConfig {
    /// Paired IDX image/label files with a predetermined train/test split.
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        keep_classes: Option<Vec<usize>>,
    },
    /// One tabular CSV, randomly split per `[split]`.
    Csv {
        path: PathBuf,
        label_column: String,
        #[serde(default)]
        dummy_encode: Vec<String>,
        #[serde(default)]
        drop: Vec<String>,
        /// Single-character field delimiter, e.g. ";" for the UCI exports.
        #[serde(default)]
        delimiter: Option<String>,
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        keep_classes: Option<Vec<usize>>,
    },
    /// Flattened-image CSV export; a test file makes the split
    /// predetermined, otherwise `[split]` applies.
    ImageCsv {
        train_path: PathBuf,
        #[serde(default)]
        test_path: Option<PathBuf>,
        label_column: String,
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        keep_classes: Option<Vec<usize>>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub test_fraction: f64,
    /// Fraction of the training pool carved out for calibration in the ICP
    /// and ACP scenarios.
    pub calibration_fraction: f64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.33,
            calibration_fraction: 1.0 / 3.0,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingSection {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub hidden: Vec<usize>,
    pub shuffle: bool,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = TrainingConfig::default();
        Self {
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            epochs: t.epochs,
            hidden: vec![128, 64],
            shuffle: t.shuffle,
            adam_beta1: t.adam_beta1,
            adam_beta2: t.adam_beta2,
            adam_epsilon: t.adam_epsilon,
        }
    }
}

impl TrainingSection {
    pub fn to_training_config(&self, seed: u64) -> TrainingConfig {
        TrainingConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_epsilon: self.adam_epsilon,
            seed,
            shuffle: self.shuffle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    #[value(alias = "direct_nn")]
    DirectNn,
    Icp,
    Acp,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScenarioKind::DirectNn => write!(f, "direct-nn"),
            ScenarioKind::Icp => write!(f, "icp"),
            ScenarioKind::Acp => write!(f, "acp"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Independent runs for direct-nn and icp.
    pub iterations: usize,
    /// Ensemble-size sweep bounds for acp.
    pub ensemble_min: usize,
    pub ensemble_max: usize,
    /// Train ACP members on a thread pool (identical outputs either way).
    pub parallel: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::DirectNn,
            iterations: 10,
            ensemble_min: 2,
            ensemble_max: 10,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    pub significance_levels: Vec<f64>,
    /// Miscalibration/curve grid; the 99-point percent grid when omitted.
    pub grid: Option<Vec<f64>>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            significance_levels: vec![0.05, 0.1, 0.2],
            grid: None,
        }
    }
}

impl ReportConfig {
    pub fn grid(&self) -> CliResult<SignificanceGrid> {
        match &self.grid {
            None => Ok(SignificanceGrid::default()),
            Some(values) => SignificanceGrid::new(values.clone())
                .map_err(|e| CliError::config(e.to_string())),
        }
    }
}

/// Candidate lists for the loss grid search; omitted weights keep their
/// `[loss]` value.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSearchSpec {
    pub w_false: Option<Vec<f64>>,
    pub w_true: Option<Vec<f64>>,
    pub w_mean: Option<Vec<f64>>,
    pub w_var: Option<Vec<f64>>,
    pub w_l2: Option<Vec<f64>>,
    pub w_huber: Option<Vec<f64>>,
    pub huber_delta: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.name.is_empty() {
            return Err(CliError::config("experiment name is empty"));
        }
        for path in self.dataset.paths() {
            if !path.exists() {
                return Err(CliError::config(format!(
                    "dataset file {} does not exist",
                    path.display()
                )));
            }
        }
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return Err(CliError::config(format!(
                "split.test_fraction must be in (0,1), got {}",
                self.split.test_fraction
            )));
        }
        if !(0.0..1.0).contains(&self.split.calibration_fraction) {
            return Err(CliError::config(format!(
                "split.calibration_fraction must be in [0,1), got {}",
                self.split.calibration_fraction
            )));
        }
        self.training
            .to_training_config(0)
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        self.loss
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        if self.scenario.iterations == 0 {
            return Err(CliError::config("scenario.iterations must be >= 1"));
        }
        if self.scenario.ensemble_min < 1 || self.scenario.ensemble_min > self.scenario.ensemble_max
        {
            return Err(CliError::config(format!(
                "invalid ensemble range {}..={}",
                self.scenario.ensemble_min, self.scenario.ensemble_max
            )));
        }
        if self.report.significance_levels.is_empty()
            || self
                .report
                .significance_levels
                .iter()
                .any(|e| !(*e > 0.0 && *e < 1.0))
        {
            return Err(CliError::config(
                "report.significance_levels must be non-empty values in (0,1)",
            ));
        }
        self.report.grid()?;
        if let Some(gs) = &self.gridsearch {
            for (name, list) in [
                ("w_false", &gs.w_false),
                ("w_true", &gs.w_true),
                ("w_mean", &gs.w_mean),
                ("w_var", &gs.w_var),
                ("w_l2", &gs.w_l2),
                ("w_huber", &gs.w_huber),
                ("huber_delta", &gs.huber_delta),
            ] {
                if let Some(list) = list {
                    if list.is_empty() {
                        return Err(CliError::config(format!(
                            "gridsearch.{name} candidate list is empty"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl DatasetConfig {
    pub fn paths(&self) -> Vec<&PathBuf> {
        match self {
            DatasetConfig::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                ..
            } => vec![train_images, train_labels, test_images, test_labels],
            DatasetConfig::Csv { path, .. } => vec![path],
            DatasetConfig::ImageCsv {
                train_path,
                test_path,
                ..
            } => match test_path {
                Some(t) => vec![train_path, t],
                None => vec![train_path],
            },
        }
    }

    pub fn display_name(&self) -> Option<&str> {
        match self {
            DatasetConfig::Idx { name, .. }
            | DatasetConfig::Csv { name, .. }
            | DatasetConfig::ImageCsv { name, .. } => name.as_deref(),
        }
    }
}
