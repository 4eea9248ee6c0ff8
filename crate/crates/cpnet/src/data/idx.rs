//! IDX image/label file ingestion (the MNIST container format).
//!
//! Big-endian throughout: images carry magic `0x00000803` followed by
//! `count`, `rows`, `cols` as `u32` and then unsigned bytes; labels carry
//! magic `0x00000801`, a `u32` count, and unsigned bytes.

use std::fs;
use std::path::Path;

use byteorder::{BigEndian, ByteOrder};
use ndarray::Array2;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// Load a paired IDX image/label file set.
///
/// Each image is flattened row-major to a `rows * cols` vector with pixels
/// scaled from `[0, 255]` to `[0, 1]`. Labels are paired by index.
pub fn load_idx_images(image_path: &Path, label_path: &Path) -> Result<LabeledDataset> {
    let (features, n_images) = read_images(image_path)?;
    let labels = read_labels(label_path)?;
    if labels.len() != n_images {
        return Err(Error::CountMismatch {
            images: n_images,
            labels: labels.len(),
        });
    }
    let class_count = labels.iter().copied().max().map_or(0, |m| m + 1);
    let name = image_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".to_owned());
    LabeledDataset::new(name, features, labels, class_count)
}

fn read_images(path: &Path) -> Result<(Array2<f64>, usize)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 {
        return Err(Error::IdxTruncated {
            path: path.into(),
            expected: 16,
            found: bytes.len(),
        });
    }
    let magic = BigEndian::read_u32(&bytes[0..4]);
    if magic != IMAGE_MAGIC {
        return Err(Error::IdxMagic {
            path: path.into(),
            found: magic,
            expected: IMAGE_MAGIC,
        });
    }
    let count = BigEndian::read_u32(&bytes[4..8]) as usize;
    let rows = BigEndian::read_u32(&bytes[8..12]) as usize;
    let cols = BigEndian::read_u32(&bytes[12..16]) as usize;
    let d = rows * cols;
    let expected = 16 + count * d;
    if bytes.len() < expected {
        return Err(Error::IdxTruncated {
            path: path.into(),
            expected,
            found: bytes.len(),
        });
    }
    let pixels: Vec<f64> = bytes[16..expected]
        .iter()
        .map(|&b| f64::from(b) / 255.0)
        .collect();
    let features = Array2::from_shape_vec((count, d), pixels)
        .map_err(|e| Error::Shape(e.to_string()))?;
    Ok((features, count))
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 {
        return Err(Error::IdxTruncated {
            path: path.into(),
            expected: 8,
            found: bytes.len(),
        });
    }
    let magic = BigEndian::read_u32(&bytes[0..4]);
    if magic != LABEL_MAGIC {
        return Err(Error::IdxMagic {
            path: path.into(),
            found: magic,
            expected: LABEL_MAGIC,
        });
    }
    let count = BigEndian::read_u32(&bytes[4..8]) as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(Error::IdxTruncated {
            path: path.into(),
            expected,
            found: bytes.len(),
        });
    }
    Ok(bytes[8..expected].iter().map(|&b| b as usize).collect())
}
