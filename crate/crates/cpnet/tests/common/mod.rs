//! Shared fixtures for the integration suites.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use cpnet::{filter_classes, load_idx_images, load_image_csv, DataSplit, LabeledDataset};

/// Dataset directory: `CPNET_DATA_DIR` when set, else `<workspace>/data`.
pub fn data_dir() -> PathBuf {
    if let Ok(dir) = std::env::var("CPNET_DATA_DIR") {
        return PathBuf::from(dir);
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn require(file: &str) -> PathBuf {
    let path = data_dir().join(file);
    assert!(
        path.exists(),
        "dataset file {} not found; fetch the benchmark data first \
         (see README: scripts/fetch_data.py --dest data/) or point \
         CPNET_DATA_DIR at it",
        path.display()
    );
    path
}

/// MNIST with its predetermined train/test split: train rows first, then
/// the t10k rows.
pub fn load_mnist10() -> (LabeledDataset, DataSplit) {
    let train = load_idx_images(
        &require("train-images-idx3-ubyte"),
        &require("train-labels-idx1-ubyte"),
    )
    .expect("load MNIST train");
    let test = load_idx_images(
        &require("t10k-images-idx3-ubyte"),
        &require("t10k-labels-idx1-ubyte"),
    )
    .expect("load MNIST test");
    let train_len = train.len();
    let mut ds = train.concat(&test).expect("concat");
    ds.name = "MNIST10".into();
    let split = DataSplit::predetermined(train_len, ds.len()).expect("split");
    (ds, split)
}

/// MNIST restricted to digits 0 and 1, keeping the predetermined split.
pub fn load_mnist2() -> (LabeledDataset, DataSplit) {
    let train = load_idx_images(
        &require("train-images-idx3-ubyte"),
        &require("train-labels-idx1-ubyte"),
    )
    .expect("load MNIST train");
    let test = load_idx_images(
        &require("t10k-images-idx3-ubyte"),
        &require("t10k-labels-idx1-ubyte"),
    )
    .expect("load MNIST test");
    let train = filter_classes(&train, &[0, 1]).expect("filter train");
    let test = filter_classes(&test, &[0, 1]).expect("filter test");
    let train_len = train.len();
    let mut ds = train.concat(&test).expect("concat");
    ds.name = "MNIST2".into();
    let split = DataSplit::predetermined(train_len, ds.len()).expect("split");
    (ds, split)
}

/// USPS from its CSV export, predetermined split.
pub fn load_usps10() -> (LabeledDataset, DataSplit) {
    let train = load_image_csv(&require("usps_train.csv"), "label").expect("load USPS train");
    let test = load_image_csv(&require("usps_test.csv"), "label").expect("load USPS test");
    let train_len = train.len();
    let mut ds = train.concat(&test).expect("concat");
    ds.name = "USPS10".into();
    let split = DataSplit::predetermined(train_len, ds.len()).expect("split");
    (ds, split)
}
