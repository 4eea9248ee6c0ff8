//! Turning a dataset config into a loaded dataset plus its base split.
//!
//! The base split fixes the test partition and leaves calibration empty;
//! scenarios carve calibration out of the training pool per iteration.

use cpnet::{
    filter_classes, load_csv, load_idx_images, load_image_csv, rescale_for_split, split,
    CsvOptions, DataSplit, LabeledDataset, SplitSpec,
};

use crate::config::{DatasetConfig, ExperimentConfig, SplitConfig};
use crate::error::{CliError, CliResult};

pub struct PreparedData {
    pub ds: LabeledDataset,
    pub split: DataSplit,
}

pub fn load_dataset(config: &ExperimentConfig) -> CliResult<PreparedData> {
    let prepared = match &config.dataset {
        DatasetConfig::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
            keep_classes,
            ..
        } => {
            let mut train = load_idx_images(train_images, train_labels).map_err(runtime)?;
            let mut test = load_idx_images(test_images, test_labels).map_err(runtime)?;
            if let Some(keep) = keep_classes {
                train = filter_classes(&train, keep).map_err(runtime)?;
                test = filter_classes(&test, keep).map_err(runtime)?;
            }
            let train_len = train.len();
            let ds = train.concat(&test).map_err(runtime)?;
            let split = DataSplit::predetermined(train_len, ds.len()).map_err(runtime)?;
            PreparedData { ds, split }
        }
        DatasetConfig::Csv {
            path,
            label_column,
            dummy_encode,
            drop,
            delimiter,
            keep_classes,
            ..
        } => {
            let delimiter = match delimiter {
                None => b',',
                Some(s) if s.len() == 1 => s.as_bytes()[0],
                Some(s) => {
                    return Err(CliError::config(format!(
                        "delimiter must be one character, got {s:?}"
                    )))
                }
            };
            let opts = CsvOptions {
                dummy_encode: dummy_encode.clone(),
                drop: drop.clone(),
                delimiter,
            };
            let mut ds = load_csv(path, label_column, &opts).map_err(runtime)?;
            if let Some(keep) = keep_classes {
                ds = filter_classes(&ds, keep).map_err(runtime)?;
            }
            let base = random_split(&ds, &config.split, config.master_seed)?;
            // scale from the training portion only, then clamp the rest
            let ds = rescale_for_split(&ds, &base);
            PreparedData { ds, split: base }
        }
        DatasetConfig::ImageCsv {
            train_path,
            test_path,
            label_column,
            keep_classes,
            ..
        } => {
            let mut train = load_image_csv(train_path, label_column).map_err(runtime)?;
            if let Some(keep) = keep_classes {
                train = filter_classes(&train, keep).map_err(runtime)?;
            }
            match test_path {
                Some(test_path) => {
                    let mut test = load_image_csv(test_path, label_column).map_err(runtime)?;
                    if let Some(keep) = keep_classes {
                        test = filter_classes(&test, keep).map_err(runtime)?;
                    }
                    let train_len = train.len();
                    let ds = train.concat(&test).map_err(runtime)?;
                    let split = DataSplit::predetermined(train_len, ds.len()).map_err(runtime)?;
                    PreparedData { ds, split }
                }
                None => {
                    let split = random_split(&train, &config.split, config.master_seed)?;
                    PreparedData { ds: train, split }
                }
            }
        }
    };

    let mut prepared = prepared;
    if let Some(name) = config.dataset.display_name() {
        prepared.ds.name = name.to_owned();
    }
    Ok(prepared)
}

fn random_split(ds: &LabeledDataset, cfg: &SplitConfig, seed: u64) -> CliResult<DataSplit> {
    let spec = SplitSpec {
        test_fraction: cfg.test_fraction,
        calibration_fraction: 0.0,
        stratified: cfg.stratified,
        seed,
    };
    split(ds, &spec).map_err(runtime)
}

fn runtime(e: cpnet::Error) -> CliError {
    CliError::runtime(e.to_string())
}
