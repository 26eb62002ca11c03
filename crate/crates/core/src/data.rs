//! Datasets, CSV ingestion, seeded splitting and folding, standardization.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Standard deviations below this are replaced by 1.0 when standardizing.
pub const STD_FLOOR: f64 = 1e-8;

/// A dense feature matrix (row-major) with integer class labels in `[0, n_classes)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    n_classes: usize,
    feature_names: Option<Vec<String>>,
    label_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from rows, validating every invariant.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let n_features = rows.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        if let Some(bad) = rows.iter().find(|r| r.len() != n_features) {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                actual: bad.len(),
            });
        }
        let features = rows.into_iter().flatten().collect();
        Self::from_flat(features, n_features, labels, n_classes)
    }

    pub fn from_flat(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if n_features == 0 {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * n_features,
                actual: features.len(),
            });
        }
        if n_classes < 2 {
            return Err(Error::InvalidDataset(format!(
                "n_classes must be at least 2, got {n_classes}"
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidDataset(format!(
                "label {l} outside [0, {n_classes})"
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature {
                row: pos / n_features,
                column: pos % n_features,
            });
        }
        Ok(Dataset {
            features,
            n_features,
            labels,
            n_classes,
            feature_names: None,
            label_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn with_label_names(mut self, names: Vec<String>) -> Self {
        self.label_names = Some(names);
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features)
    }

    pub fn feature(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.n_features + j]
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Original label strings, indexed by class id.
    pub fn label_names(&self) -> Option<&[String]> {
        self.label_names.as_deref()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Number of classes with at least one example.
    pub fn distinct_classes(&self) -> usize {
        self.class_counts().iter().filter(|&&c| c > 0).count()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            features,
            n_features: self.n_features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
        }
    }

    /// Same features with new labels (used when relabeling by a teacher model).
    pub fn relabeled(&self, labels: Vec<usize>) -> Result<Dataset> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: labels.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= self.n_classes) {
            return Err(Error::InvalidDataset(format!(
                "label {l} outside [0, {})",
                self.n_classes
            )));
        }
        Ok(Dataset {
            labels,
            ..self.clone()
        })
    }

    /// Repeats row `i` `counts[i]` times, in row order.
    pub fn replicate(&self, counts: &[usize]) -> Dataset {
        let indices: Vec<usize> = counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i, c))
            .collect();
        self.subset(&indices)
    }

    fn map_features(&self, f: impl Fn(usize, f64) -> f64) -> Dataset {
        let d = self.n_features;
        let features = self
            .features
            .iter()
            .enumerate()
            .map(|(k, &v)| f(k % d, v))
            .collect();
        Dataset {
            features,
            ..self.clone()
        }
    }
}

/// Which CSV column carries the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(if s.eq_ignore_ascii_case("last") {
            LabelColumn::Last
        } else if let Ok(i) = s.parse() {
            LabelColumn::Index(i)
        } else {
            LabelColumn::Name(s.to_string())
        })
    }
}

fn parse_cell(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

/// Loads a comma-separated file with an optional header row.
///
/// A header is assumed when the label column is selected by name, or when the
/// first row contains a non-numeric cell outside the label column. Labels that
/// are all non-negative integers are used as class ids directly; otherwise
/// they are mapped to `0..C` in order of first appearance.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &LabelColumn,
    n_classes: Option<usize>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(file);
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        records.push(rec);
    }
    let first = records.first().ok_or(Error::EmptyDataset)?;
    let n_cols = first.len();
    if n_cols < 2 {
        return Err(Error::InvalidDataset(
            "need at least one feature column and a label column".into(),
        ));
    }

    let (label_idx, has_header) = match label_column {
        LabelColumn::Index(i) if *i < n_cols => (*i, None),
        LabelColumn::Index(i) => return Err(Error::MissingLabelColumn(i.to_string())),
        LabelColumn::Last => (n_cols - 1, None),
        LabelColumn::Name(name) => {
            let idx = first
                .iter()
                .position(|c| c.trim() == name)
                .ok_or_else(|| Error::MissingLabelColumn(name.clone()))?;
            (idx, Some(true))
        }
    };
    let has_header = has_header.unwrap_or_else(|| {
        first
            .iter()
            .enumerate()
            .any(|(j, c)| j != label_idx && parse_cell(c).is_none())
    });

    let (feature_names, body) = if has_header {
        let names = first
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != label_idx)
            .map(|(_, c)| c.trim().to_string())
            .collect();
        (Some(names), &records[1..])
    } else {
        (None, &records[..])
    };
    if body.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let d = n_cols - 1;
    let mut features = Vec::with_capacity(body.len() * d);
    let mut raw_labels = Vec::with_capacity(body.len());
    for (row, rec) in body.iter().enumerate() {
        for (column, cell) in rec.iter().enumerate() {
            if column == label_idx {
                raw_labels.push(cell.trim().to_string());
                continue;
            }
            let v = parse_cell(cell).ok_or_else(|| Error::NonNumericFeature {
                row,
                column,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { row, column });
            }
            features.push(v);
        }
    }

    let (labels, label_names) = map_labels(&raw_labels);
    let distinct = {
        let mut seen = labels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    };
    if distinct < 2 {
        return Err(Error::SingleClass);
    }
    let needed = labels.iter().max().map_or(0, |m| m + 1);
    let n_classes = match n_classes {
        Some(c) if c < needed => {
            return Err(Error::InvalidDataset(format!(
                "n_classes {c} is smaller than max label + 1 = {needed}"
            )))
        }
        Some(c) => c,
        None => needed,
    };
    let mut label_names = label_names;
    while label_names.len() < n_classes {
        label_names.push(label_names.len().to_string());
    }

    let ds = Dataset::from_flat(features, d, labels, n_classes)?.with_label_names(label_names);
    match feature_names {
        Some(names) => ds.with_feature_names(names),
        None => Ok(ds),
    }
}

fn map_labels(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let numeric: Option<Vec<usize>> = raw.iter().map(|s| s.parse::<usize>().ok()).collect();
    if let Some(labels) = numeric {
        let max = labels.iter().copied().max().unwrap_or(0);
        return (labels, (0..=max).map(|c| c.to_string()).collect());
    }
    let mut mapping: HashMap<&str, usize> = HashMap::new();
    let mut names = Vec::new();
    let labels = raw
        .iter()
        .map(|s| {
            *mapping.entry(s.as_str()).or_insert_with(|| {
                names.push(s.clone());
                names.len() - 1
            })
        })
        .collect();
    (labels, names)
}

/// Writes features then an integer `label` column, with a header row.
/// Columns are named by the feature names when present, else `f0, f1, ...`.
pub fn save_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = match ds.feature_names() {
        Some(names) => names.to_vec(),
        None => (0..ds.n_features()).map(|j| format!("f{j}")).collect(),
    };
    header.push("label".to_string());
    w.write_record(&header)?;
    for (x, y) in ds.rows().zip(ds.labels()) {
        w.write_record(x.iter().map(|v| v.to_string()).chain([y.to_string()]))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// How to split a dataset into train and test parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Self {
        SplitSpec {
            train_fraction,
            seed,
            stratified: true,
        }
    }
}

/// Sorted train and test index sets for `spec`.
///
/// When stratified, class `c` contributes `round(n_c * fraction)` examples to
/// the train side.
pub fn split_indices(ds: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = ds.len();
    let frac = spec.train_fraction;
    let degenerate = Error::DegenerateFraction { fraction: frac, n };
    if !(frac > 0.0 && frac < 1.0) {
        return Err(degenerate);
    }
    let mut rng = seed::rng(spec.seed);
    let groups: Vec<Vec<usize>> = if spec.stratified {
        let mut groups = vec![Vec::new(); ds.n_classes()];
        for (i, &l) in ds.labels().iter().enumerate() {
            groups[l].push(i);
        }
        groups
    } else {
        vec![(0..n).collect()]
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut group in groups {
        let n_train = (group.len() as f64 * frac).round() as usize;
        group.shuffle(&mut rng);
        train.extend_from_slice(&group[..n_train]);
        test.extend_from_slice(&group[n_train..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(degenerate);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn train_test_split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds, spec)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Assignment of every example to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub k: usize,
}

impl FoldAssignment {
    /// `(train, held_out)` index sets for fold `f`.
    pub fn indices(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.fold_of.len()).partition(|&i| self.fold_of[i] != f)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

pub fn kfold(ds: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    let n = ds.len();
    if k < 2 || k > n {
        return Err(Error::InvalidFolds { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % k;
    }
    Ok(FoldAssignment { fold_of, k })
}

/// Per-column centering and scaling fit on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl ScalerParams {
    /// Population mean and standard deviation per column, floored.
    pub fn fit(ds: &Dataset) -> Self {
        let n = ds.len() as f64;
        let d = ds.n_features();
        let mut means = vec![0.0; d];
        for row in ds.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; d];
        for row in ds.rows() {
            for ((s, v), m) in vars.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let stds = vars
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd < STD_FLOOR {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        ScalerParams { means, stds }
    }

    pub fn transform(&self, ds: &Dataset) -> Dataset {
        ds.map_features(|j, v| (v - self.means[j]) / self.stds[j])
    }

    pub fn inverse_transform(&self, ds: &Dataset) -> Dataset {
        ds.map_features(|j, v| v * self.stds[j] + self.means[j])
    }

    pub fn transform_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, v)| (v - self.means[j]) / self.stds[j])
            .collect()
    }
}

/// Standardizes both sets with parameters estimated on `train` only.
pub fn standardize(train: &Dataset, test: &Dataset) -> (Dataset, Dataset, ScalerParams) {
    let params = ScalerParams::fit(train);
    (params.transform(train), params.transform(test), params)
}
