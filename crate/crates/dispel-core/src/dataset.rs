//! CSV ingestion, label encoding, and deterministic splits and folds.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Maps raw class strings to consecutive integer labels `1..=n_classes`.
///
/// The mapping order is the lexicographic sort of the distinct raw strings,
/// so loading the same file twice always yields the same encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEncoding {
    class_names: Vec<String>,
}

impl LabelEncoding {
    /// Build from the distinct raw strings; sorts and deduplicates.
    pub fn from_raw<S: AsRef<str>>(raw: &[S]) -> Result<Self> {
        let names: BTreeSet<&str> = raw.iter().map(AsRef::as_ref).collect();
        if names.len() < 2 {
            return Err(Error::Schema(format!(
                "need at least 2 classes, found {}",
                names.len()
            )));
        }
        Ok(LabelEncoding {
            class_names: names.into_iter().map(str::to_owned).collect(),
        })
    }

    /// Encoding for synthetic data: class names "1".."n".
    pub fn numeric(n_classes: usize) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Schema(format!(
                "need at least 2 classes, got {n_classes}"
            )));
        }
        Ok(LabelEncoding {
            class_names: (1..=n_classes).map(|c| c.to_string()).collect(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Integer label in `1..=n_classes` for a raw class string.
    pub fn encode(&self, raw: &str) -> Option<u32> {
        self.class_names
            .binary_search_by(|n| n.as_str().cmp(raw))
            .ok()
            .map(|i| (i + 1) as u32)
    }

    /// Raw class string for an integer label.
    pub fn decode(&self, label: u32) -> Option<&str> {
        self.class_names
            .get((label as usize).wrapping_sub(1))
            .map(String::as_str)
    }
}

/// An immutable feature matrix with aligned integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Mat,
    labels: Vec<u32>,
    encoding: LabelEncoding,
}

impl Dataset {
    /// Validates the full container invariants: at least 2 samples and 2
    /// classes, labels exactly covering `1..=n_classes`, finite features.
    pub fn new(
        name: impl Into<String>,
        features: Mat,
        labels: Vec<u32>,
        encoding: LabelEncoding,
    ) -> Result<Self> {
        let name = name.into();
        if features.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.nrows() < 2 {
            return Err(Error::Schema(format!(
                "dataset {name:?} has {} samples, need at least 2",
                features.nrows()
            )));
        }
        if features.ncols() < 1 {
            return Err(Error::Schema(format!(
                "dataset {name:?} has no feature columns"
            )));
        }
        let nc = encoding.n_classes() as u32;
        let mut seen = vec![false; nc as usize];
        for &l in &labels {
            if l < 1 || l > nc {
                return Err(Error::Schema(format!(
                    "label {l} outside 1..={nc} in dataset {name:?}"
                )));
            }
            seen[(l - 1) as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Schema(format!(
                "class {:?} (label {}) has no samples in dataset {name:?}",
                encoding.decode(missing as u32 + 1).unwrap_or("?"),
                missing + 1
            )));
        }
        if let Some(bad) = features.as_slice().iter().position(|v| !v.is_finite()) {
            let (r, c) = (bad / features.ncols(), bad % features.ncols());
            return Err(Error::Schema(format!(
                "non-finite feature value at row {}, column {} of dataset {name:?}",
                r + 1,
                c + 1
            )));
        }
        Ok(Dataset {
            name,
            features,
            labels,
            encoding,
        })
    }

    /// Synthetic constructor: labels must lie in `1..=n_classes` and cover it.
    pub fn from_parts(name: impl Into<String>, features: Mat, labels: Vec<u32>) -> Result<Self> {
        let nc = labels.iter().copied().max().unwrap_or(0) as usize;
        Dataset::new(name, features, labels, LabelEncoding::numeric(nc.max(2))?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &Mat {
        &self.features
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn encoding(&self) -> &LabelEncoding {
        &self.encoding
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Number of classes in the encoding (a subset may not represent all).
    pub fn n_classes(&self) -> usize {
        self.encoding.n_classes()
    }

    /// Count of samples per label, indexed by `label - 1`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes()];
        for &l in &self.labels {
            counts[(l - 1) as usize] += 1;
        }
        counts
    }

    /// Row subset sharing this dataset's name and encoding. Subsets skip the
    /// coverage invariant: a validation fold may hold a single class.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            encoding: self.encoding.clone(),
        }
    }

    /// Replace the feature matrix; shape must be unchanged.
    pub fn with_features(&self, features: Mat) -> Result<Dataset> {
        if features.nrows() != self.features.nrows() || features.ncols() != self.features.ncols() {
            return Err(Error::Shape(format!(
                "replacement features are {}x{}, expected {}x{}",
                features.nrows(),
                features.ncols(),
                self.features.nrows(),
                self.features.ncols()
            )));
        }
        Ok(Dataset {
            name: self.name.clone(),
            features,
            labels: self.labels.clone(),
            encoding: self.encoding.clone(),
        })
    }

    /// Z-score each column in place; zero-variance columns are only centered.
    pub fn standardize(&mut self) {
        let means = self.features.col_means();
        let stds = self.features.col_stds();
        let cols = self.features.ncols();
        for i in 0..self.features.nrows() {
            let row = self.features.row_mut(i);
            for j in 0..cols {
                row[j] -= means[j];
                if stds[j] > 0.0 {
                    row[j] /= stds[j];
                }
            }
        }
    }
}

/// How to handle rows with unparseable or missing cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Silently drop the offending row (count is reported).
    #[default]
    DropRow,
    /// Fail with a parse error naming the row and column.
    Error,
}

/// A CSV column, by 1-based position or by header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Index(i) => write!(f, "column {i}"),
            ColumnRef::Name(n) => write!(f, "column {n:?}"),
        }
    }
}

/// Options for [`load_csv_with`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadOptions {
    pub label_column: ColumnRef,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
    #[serde(default)]
    pub has_header: bool,
    /// Columns excluded from the feature matrix (1-based or by name).
    #[serde(default)]
    pub drop_columns: Vec<ColumnRef>,
    /// Dataset name; defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
}

impl LoadOptions {
    pub fn new(label_column: ColumnRef) -> Self {
        LoadOptions {
            label_column,
            missing_policy: MissingPolicy::default(),
            has_header: false,
            drop_columns: Vec::new(),
            name: None,
        }
    }
}

/// What `load_csv_with` observed while ingesting, for report metadata.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LoadLog {
    pub rows_read: usize,
    pub rows_dropped: usize,
}

/// Load a comma-separated UTF-8 file into a [`Dataset`].
///
/// `label_column` is 1-based when given by index. Every non-label,
/// non-dropped column must parse as a finite real number; offending rows
/// follow `missing_policy`. Row order is preserved from the file.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: ColumnRef,
    missing_policy: MissingPolicy,
) -> Result<Dataset> {
    let mut opts = LoadOptions::new(label_column);
    opts.missing_policy = missing_policy;
    load_csv_with(path, &opts).map(|(d, _)| d)
}

/// [`load_csv`] with header, drop-column, and naming options, returning the
/// ingestion log alongside the dataset.
pub fn load_csv_with(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<(Dataset, LoadLog)> {
    let path = path.as_ref();
    let name = opts.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_owned())
    });

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io {
                path: path.to_owned(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => Error::Schema(format!("cannot open {}: {e}", path.display())),
        })?;

    let headers: Vec<String> = if opts.has_header {
        reader
            .headers()
            .map_err(|e| Error::Schema(format!("bad header in {}: {e}", path.display())))?
            .iter()
            .map(str::to_owned)
            .collect()
    } else {
        Vec::new()
    };

    let resolve = |col: &ColumnRef, width: usize| -> Result<usize> {
        match col {
            ColumnRef::Index(i) => {
                if *i >= 1 && *i <= width {
                    Ok(i - 1)
                } else {
                    Err(Error::Schema(format!(
                        "{col} out of range for a {width}-column file"
                    )))
                }
            }
            ColumnRef::Name(n) => headers
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| Error::Schema(format!("{col} not found in header"))),
        }
    };

    let mut records: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        let rec =
            rec.map_err(|e| Error::Schema(format!("read error in {}: {e}", path.display())))?;
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::Schema(format!(
            "{} has no data rows",
            path.display()
        )));
    }

    let width = if opts.has_header {
        headers.len()
    } else {
        records[0].len()
    };
    let label_idx = resolve(&opts.label_column, width)?;
    let mut drop_idx: Vec<usize> = opts
        .drop_columns
        .iter()
        .map(|c| resolve(c, width))
        .collect::<Result<_>>()?;
    drop_idx.push(label_idx);
    drop_idx.sort_unstable();
    drop_idx.dedup();

    let feature_cols: Vec<usize> = (0..width).filter(|c| !drop_idx.contains(c)).collect();
    if feature_cols.is_empty() {
        return Err(Error::Schema(
            "no feature columns remain after dropping the label and configured columns".into(),
        ));
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(records.len());
    let mut raw_labels: Vec<String> = Vec::with_capacity(records.len());
    let mut log = LoadLog::default();

    'rows: for (ri, rec) in records.iter().enumerate() {
        log.rows_read += 1;
        let row_no = ri + 1; // 1-based data row, header excluded
        if rec.len() != width {
            match opts.missing_policy {
                MissingPolicy::DropRow => {
                    log.rows_dropped += 1;
                    continue;
                }
                MissingPolicy::Error => {
                    return Err(Error::Parse {
                        name: name.clone(),
                        row: row_no,
                        column: rec.len().min(width).max(1),
                        message: format!("expected {width} fields, found {}", rec.len()),
                    });
                }
            }
        }
        let mut row = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let cell = rec.get(c).unwrap_or("");
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => match opts.missing_policy {
                    MissingPolicy::DropRow => {
                        log.rows_dropped += 1;
                        continue 'rows;
                    }
                    MissingPolicy::Error => {
                        return Err(Error::Parse {
                            name: name.clone(),
                            row: row_no,
                            column: c + 1,
                            message: format!("cannot parse {cell:?} as a finite real number"),
                        });
                    }
                },
            }
        }
        let label = rec.get(label_idx).unwrap_or("").to_owned();
        if label.is_empty() {
            match opts.missing_policy {
                MissingPolicy::DropRow => {
                    log.rows_dropped += 1;
                    continue;
                }
                MissingPolicy::Error => {
                    return Err(Error::Parse {
                        name: name.clone(),
                        row: row_no,
                        column: label_idx + 1,
                        message: "empty class label".into(),
                    });
                }
            }
        }
        rows.push(row);
        raw_labels.push(label);
    }

    if rows.len() < 2 {
        return Err(Error::Schema(format!(
            "{} usable rows after applying the missing-value policy; need at least 2",
            rows.len()
        )));
    }

    let encoding = LabelEncoding::from_raw(&raw_labels)?;
    let labels: Vec<u32> = raw_labels
        .iter()
        .map(|r| {
            encoding
                .encode(r)
                .expect("encoding built from these labels")
        })
        .collect();
    let features = Mat::from_rows(&rows)?;
    let dataset = Dataset::new(name, features, labels, encoding)?;
    Ok((dataset, log))
}

/// Train/test split parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64, stratified: bool) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must be in (0, 1), got {train_fraction}"
            )));
        }
        Ok(SplitSpec {
            train_fraction,
            seed,
            stratified,
        })
    }
}

/// Indices per label value, in ascending label order.
fn indices_by_class(d: &Dataset) -> Vec<(u32, Vec<usize>)> {
    let mut by_class: Vec<(u32, Vec<usize>)> = Vec::new();
    for label in 1..=d.n_classes() as u32 {
        let idx: Vec<usize> = d
            .labels()
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect();
        if !idx.is_empty() {
            by_class.push((label, idx));
        }
    }
    by_class
}

/// Deterministic train/test partition; per-class proportions hold within
/// one sample when `stratified` is set.
pub fn stratified_split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train_idx, test_idx) = stratified_split_indices(d, spec)?;
    Ok((d.subset(&train_idx), d.subset(&test_idx)))
}

/// Index-level variant of [`stratified_split`]; both index lists come back
/// sorted ascending, so each side preserves the original row order.
pub fn stratified_split_indices(d: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = d.n_samples();
    let mut train: Vec<usize> = Vec::new();
    let mut test: Vec<usize> = Vec::new();

    if spec.stratified {
        for (label, mut idx) in indices_by_class(d) {
            if idx.len() < 2 {
                return Err(Error::Stratification(format!(
                    "class {:?} (label {label}) has {} sample(s); stratified splitting needs 2",
                    d.encoding().decode(label).unwrap_or("?"),
                    idx.len()
                )));
            }
            idx.shuffle(&mut rng);
            let want = (spec.train_fraction * idx.len() as f64).round() as usize;
            let take = want.min(idx.len());
            train.extend_from_slice(&idx[..take]);
            test.extend_from_slice(&idx[take..]);
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let take = ((spec.train_fraction * n as f64).round() as usize).min(n);
        train.extend_from_slice(&idx[..take]);
        test.extend_from_slice(&idx[take..]);
    }

    // Rounding can empty one side; move a single row so both sides exist.
    if train.is_empty() {
        train.push(test.remove(0));
    } else if test.is_empty() {
        test.push(train.remove(0));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Deterministic stratified k-fold partition: `k` (train, validation) pairs
/// whose validation sets are disjoint and exhaustive.
pub fn k_folds(d: &Dataset, k: usize, seed: u64) -> Result<Vec<(Dataset, Dataset)>> {
    let folds = k_fold_indices(d, k, seed)?;
    let all: Vec<usize> = (0..d.n_samples()).collect();
    Ok(folds
        .into_iter()
        .map(|val| {
            let train: Vec<usize> = all.iter().copied().filter(|i| !val.contains(i)).collect();
            (d.subset(&train), d.subset(&val))
        })
        .collect())
}

/// Validation index sets for [`k_folds`], sorted ascending within each fold.
///
/// Classes are dealt round-robin with a running cursor across classes, so
/// fold sizes differ by at most one overall and per class.
pub fn k_fold_indices(d: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = d.n_samples();
    if k < 2 {
        return Err(Error::Fold(format!("k must be at least 2, got {k}")));
    }
    if k > n {
        return Err(Error::Fold(format!(
            "k = {k} exceeds the {n} samples available"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut cursor = 0usize;
    for (_, mut idx) in indices_by_class(d) {
        idx.shuffle(&mut rng);
        for i in idx {
            folds[cursor % k].push(i);
            cursor += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}
