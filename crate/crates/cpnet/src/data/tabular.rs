//! CSV ingestion for tabular and image-export datasets.

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::Array2;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};

/// Options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// Categorical columns to expand into one dummy column per distinct
    /// value (sorted lexicographically).
    pub dummy_encode: Vec<String>,
    /// Columns to discard entirely.
    pub drop: Vec<String>,
    /// Field delimiter; the UCI exports use `b';'`.
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            dummy_encode: Vec::new(),
            drop: Vec::new(),
            delimiter: b',',
        }
    }
}

/// Load a tabular CSV with a header row.
///
/// Listed categorical columns are one-hot expanded, dropped columns are
/// removed, and the remaining numeric columns are min-max scaled to
/// `[0, 1]`. The label column may hold integers or category strings; string
/// labels map to `0..C` in sorted order. Missing values are rejected.
pub fn load_csv(path: &Path, label_column: &str, opts: &CsvOptions) -> Result<LabeledDataset> {
    let (header, records) = read_records(path, opts.delimiter)?;

    let label_idx = find_column(&header, label_column)?;
    for col in opts.dummy_encode.iter().chain(opts.drop.iter()) {
        find_column(&header, col)?;
    }

    let mut feature_cols: Vec<usize> = Vec::new();
    for (i, name) in header.iter().enumerate() {
        if i == label_idx || opts.drop.iter().any(|d| d == name) {
            continue;
        }
        feature_cols.push(i);
    }
    if feature_cols.is_empty() {
        return Err(Error::Shape("no feature columns left".into()));
    }

    let labels = parse_labels(&records, label_idx, &header)?;
    let class_count = labels.iter().copied().max().map_or(0, |m| m + 1);

    // per-column plan: numeric, or dummy with its sorted category list
    enum Plan {
        Numeric,
        Dummy(Vec<String>),
    }
    let mut plans: Vec<Plan> = Vec::with_capacity(feature_cols.len());
    for &ci in &feature_cols {
        if opts.dummy_encode.iter().any(|d| d == &header[ci]) {
            let mut cats = BTreeSet::new();
            for (r, rec) in records.iter().enumerate() {
                let cell = cell_value(rec, ci, r, &header)?;
                cats.insert(cell.to_owned());
            }
            plans.push(Plan::Dummy(cats.into_iter().collect()));
        } else {
            plans.push(Plan::Numeric);
        }
    }

    let width: usize = plans
        .iter()
        .map(|p| match p {
            Plan::Numeric => 1,
            Plan::Dummy(cats) => cats.len(),
        })
        .sum();

    let mut features = Array2::zeros((records.len(), width));
    for (r, rec) in records.iter().enumerate() {
        let mut j = 0;
        for (&ci, plan) in feature_cols.iter().zip(&plans) {
            let cell = cell_value(rec, ci, r, &header)?;
            match plan {
                Plan::Numeric => {
                    features[[r, j]] = parse_numeric(cell, r, &header[ci])?;
                    j += 1;
                }
                Plan::Dummy(cats) => {
                    let hit = cats.binary_search_by(|c| c.as_str().cmp(cell)).ok();
                    for (k, _) in cats.iter().enumerate() {
                        features[[r, j + k]] = if hit == Some(k) { 1.0 } else { 0.0 };
                    }
                    j += cats.len();
                }
            }
        }
    }

    minmax_scale(&mut features);

    let name = file_stem(path);
    LabeledDataset::new(name, features, labels, class_count)
}

/// Load a CSV export of flattened images (one row per image, one label
/// column, remaining columns pixels).
///
/// Pixel scale is auto-detected: values above 1.5 anywhere mean a `[0, 255]`
/// export and everything is divided by 255; otherwise values are taken as
/// already in `[0, 1]`.
pub fn load_image_csv(path: &Path, label_column: &str) -> Result<LabeledDataset> {
    let (header, records) = read_records(path, b',')?;
    let label_idx = find_column(&header, label_column)?;

    let labels = parse_labels(&records, label_idx, &header)?;
    let class_count = labels.iter().copied().max().map_or(0, |m| m + 1);

    let pixel_cols: Vec<usize> = (0..header.len()).filter(|&i| i != label_idx).collect();
    if pixel_cols.is_empty() {
        return Err(Error::Shape("no pixel columns".into()));
    }

    let mut features = Array2::zeros((records.len(), pixel_cols.len()));
    for (r, rec) in records.iter().enumerate() {
        for (j, &ci) in pixel_cols.iter().enumerate() {
            let cell = cell_value(rec, ci, r, &header)?;
            features[[r, j]] = parse_numeric(cell, r, &header[ci])?;
        }
    }

    let max = features.iter().fold(0.0_f64, |m, &v| m.max(v));
    if max > 1.5 {
        features.mapv_inplace(|v| v / 255.0);
    }
    features.mapv_inplace(|v| v.clamp(0.0, 1.0));

    LabeledDataset::new(file_stem(path), features, labels, class_count)
}

fn read_records(path: &Path, delimiter: u8) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(delimiter)
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?
        .iter()
        .map(|h| h.trim().trim_matches('"').to_owned())
        .collect();
    let mut records = Vec::new();
    for rec in reader.records() {
        records.push(rec.map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?);
    }
    if records.is_empty() {
        return Err(Error::Shape(format!("{} has no data rows", path.display())));
    }
    Ok((header, records))
}

fn find_column(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn { name: name.into() })
}

/// Cell lookup with 1-based data-row indices in errors.
fn cell_value<'a>(
    rec: &'a csv::StringRecord,
    col: usize,
    row: usize,
    header: &[String],
) -> Result<&'a str> {
    let cell = rec.get(col).unwrap_or("").trim();
    if cell.is_empty() {
        return Err(Error::MissingValue {
            row: row + 1,
            column: header[col].clone(),
        });
    }
    Ok(cell)
}

fn parse_numeric(cell: &str, row: usize, column: &str) -> Result<f64> {
    let cell = cell.trim_matches('"');
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::BadNumericCell {
            row: row + 1,
            column: column.into(),
            value: cell.into(),
        }),
    }
}

fn parse_labels(
    records: &[csv::StringRecord],
    label_idx: usize,
    header: &[String],
) -> Result<Vec<usize>> {
    let mut raw = Vec::with_capacity(records.len());
    for (r, rec) in records.iter().enumerate() {
        raw.push(cell_value(rec, label_idx, r, header)?.trim_matches('"'));
    }
    // integer labels pass through; otherwise categories map in sorted order
    let as_ints: Option<Vec<usize>> = raw.iter().map(|s| s.parse::<usize>().ok()).collect();
    if let Some(ints) = as_ints {
        return Ok(ints);
    }
    let cats: Vec<&str> = {
        let set: BTreeSet<&str> = raw.iter().copied().collect();
        set.into_iter().collect()
    };
    Ok(raw
        .iter()
        .map(|s| cats.binary_search(s).expect("label in category set"))
        .collect())
}

fn minmax_scale(features: &mut Array2<f64>) {
    let d = features.ncols();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in features.rows() {
        for (j, &v) in row.iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    for mut row in features.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            let range = hi[j] - lo[j];
            *v = if range > 0.0 { (*v - lo[j]) / range } else { 0.0 };
        }
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_owned())
}
