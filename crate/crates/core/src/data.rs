//! Datasets, CSV ingestion, stratified splitting, class weights and scaling.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Dense binary classification data; labels are `+1` or `−1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<F> {
    pub features: Matrix<F>,
    pub labels: Vec<i8>,
    pub feature_names: Vec<String>,
    pub source_id: String,
    /// Raw label value mapped to `+1`.
    pub positive_label_name: String,
    /// Raw label value mapped to `−1`.
    pub negative_label_name: String,
}

impl<F: Scalar> Dataset<F> {
    /// Builds a dataset with generated feature names.
    pub fn new(features: Matrix<F>, labels: Vec<i8>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                found: labels.len(),
            });
        }
        if labels.iter().any(|&y| y != 1 && y != -1) {
            return Err(Error::InvalidInput("labels must be +1 or -1".into()));
        }
        if features.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("features must be finite".into()));
        }
        let feature_names = (0..features.ncols()).map(|j| format!("x{j}")).collect();
        Ok(Dataset {
            features,
            labels,
            feature_names,
            source_id: String::from("memory"),
            positive_label_name: String::from("+1"),
            negative_label_name: String::from("-1"),
        })
    }

    pub fn from_rows<R: AsRef<[F]>>(rows: &[R], labels: Vec<i8>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn count(&self, label: i8) -> usize {
        self.labels.iter().filter(|&&y| y == label).count()
    }

    pub fn has_both_classes(&self) -> bool {
        self.count(1) > 0 && self.count(-1) > 0
    }

    /// Rows `idx` in the given order, metadata preserved.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Dataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            source_id: self.source_id.clone(),
            positive_label_name: self.positive_label_name.clone(),
            negative_label_name: self.negative_label_name.clone(),
        }
    }

    pub fn with_features(&self, features: Matrix<F>) -> Self {
        Dataset {
            features,
            ..self.clone()
        }
    }
}

/// Per-class weights `w_{+1}`, `w_{−1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ClassWeights<F> {
    pub positive: F,
    pub negative: F,
}

impl<F: Scalar> ClassWeights<F> {
    pub fn uniform() -> Self {
        ClassWeights {
            positive: F::one(),
            negative: F::one(),
        }
    }

    #[inline]
    pub fn get(&self, label: i8) -> F {
        if label > 0 {
            self.positive
        } else {
            self.negative
        }
    }

    pub fn max(&self) -> F {
        self.positive.max(self.negative)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |w: F| w > F::zero() && w.is_finite();
        if ok(self.positive) && ok(self.negative) {
            Ok(())
        } else {
            Err(Error::InvalidInput("class weights must be positive".into()))
        }
    }
}

/// Balanced class weights `w_c = n / (2·n_c)`.
pub fn class_weights<F: Scalar>(dataset: &Dataset<F>) -> Result<ClassWeights<F>> {
    let n = dataset.len();
    let (pos, neg) = (dataset.count(1), dataset.count(-1));
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let weight = |nc: usize| F::from_count(n) / (F::lit(2.0) * F::from_count(nc));
    Ok(ClassWeights {
        positive: weight(pos),
        negative: weight(neg),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Drop rows with any missing feature value.
    #[default]
    Drop,
    /// Fill numeric cells with the column mean, symbolic cells with the mode.
    Impute,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingPolicy {
    /// Symbolic columns become one binary column per category.
    #[default]
    Onehot,
    /// Any non-numeric feature cell is an error.
    Strict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Label column name; the last column when absent.
    #[serde(default)]
    pub label_column: Option<String>,
    /// Raw label mapped to `+1`; the minority class when absent.
    #[serde(default)]
    pub positive_label: Option<String>,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
    #[serde(default)]
    pub encoding_policy: EncodingPolicy,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_delimiter() -> char {
    ','
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            label_column: None,
            positive_label: None,
            missing_policy: MissingPolicy::Drop,
            encoding_policy: EncodingPolicy::Onehot,
            delimiter: ',',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric { fill: f64 },
    Categorical { categories: Vec<String>, fill: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

/// Raw-column layout of a CSV file, enough to encode new files identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<ColumnSchema>,
    pub label_column: String,
    pub positive_label: String,
    pub negative_label: String,
}

impl FeatureSchema {
    pub fn encoded_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for col in &self.columns {
            match &col.kind {
                ColumnKind::Numeric { .. } => names.push(col.name.clone()),
                ColumnKind::Categorical { categories, .. } => {
                    names.extend(categories.iter().map(|c| format!("{}={}", col.name, c)))
                }
            }
        }
        names
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn read_table(path: &Path, delimiter: char) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    if !delimiter.is_ascii() {
        return Err(Error::InvalidInput("delimiter must be an ASCII character".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Schema(format!("{} has no header row", path.display())));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

/// Reads a CSV file into a dataset, returning the inferred column schema.
pub fn load_csv_with_schema<F: Scalar>(
    path: impl AsRef<Path>,
    options: &LoadOptions,
) -> Result<(Dataset<F>, FeatureSchema)> {
    let path = path.as_ref();
    let (header, rows) = read_table(path, options.delimiter)?;
    let label_idx = match &options.label_column {
        Some(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("label column {name:?} not found")))?,
        None => header.len() - 1,
    };
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&j| j != label_idx).collect();

    // rows without a label carry no training signal
    let mut rows: Vec<Vec<String>> = rows
        .into_iter()
        .filter(|r| !is_missing(&r[label_idx]))
        .collect();

    let distinct: BTreeSet<&str> = rows.iter().map(|r| r[label_idx].as_str()).collect();
    if distinct.len() != 2 {
        if rows.is_empty() {
            return Err(Error::EmptyDataset(format!("{} has no labelled rows", path.display())));
        }
        return Err(Error::ClassCount(distinct.len()));
    }
    let values: Vec<String> = distinct.iter().map(|s| s.to_string()).collect();

    if options.missing_policy == MissingPolicy::Drop {
        rows.retain(|r| feature_cols.iter().all(|&j| !is_missing(&r[j])));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "{} has no complete rows",
            path.display()
        )));
    }

    let count = |v: &str| rows.iter().filter(|r| r[label_idx] == v).count();
    let positive = match &options.positive_label {
        Some(p) => {
            if !values.contains(p) {
                return Err(Error::Schema(format!(
                    "positive label {p:?} is not one of {values:?}"
                )));
            }
            p.clone()
        }
        // minority class; the lexicographically larger value on a tie
        None => {
            if count(&values[0]) < count(&values[1]) {
                values[0].clone()
            } else {
                values[1].clone()
            }
        }
    };
    let negative = values.iter().find(|v| **v != positive).cloned().unwrap_or_default();
    if count(&positive) == 0 || count(&negative) == 0 {
        return Err(Error::SingleClass);
    }

    let mut columns = Vec::with_capacity(feature_cols.len());
    for &j in &feature_cols {
        let present: Vec<&str> = rows
            .iter()
            .map(|r| r[j].as_str())
            .filter(|c| !is_missing(c))
            .collect();
        let numeric: Option<Vec<f64>> = present.iter().map(|c| parse_number(c)).collect();
        let kind = match numeric {
            Some(vals) => {
                let fill = if vals.is_empty() {
                    0.0
                } else {
                    vals.iter().sum::<f64>() / vals.len() as f64
                };
                ColumnKind::Numeric { fill }
            }
            None => {
                if options.encoding_policy == EncodingPolicy::Strict {
                    let (row, value) = rows
                        .iter()
                        .enumerate()
                        .find(|(_, r)| !is_missing(&r[j]) && parse_number(&r[j]).is_none())
                        .map(|(i, r)| (i, r[j].clone()))
                        .unwrap_or_default();
                    return Err(Error::Parse {
                        row,
                        column: header[j].clone(),
                        value,
                    });
                }
                let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
                for c in &present {
                    *freq.entry(c).or_default() += 1;
                }
                // mode; BTreeMap order makes the smallest value win ties
                let fill = freq
                    .iter()
                    .fold(None::<(&str, usize)>, |best, (&k, &v)| match best {
                        Some((_, bv)) if bv >= v => best,
                        _ => Some((k, v)),
                    })
                    .map(|(k, _)| k.to_string())
                    .unwrap_or_default();
                ColumnKind::Categorical {
                    categories: freq.keys().map(|s| s.to_string()).collect(),
                    fill,
                }
            }
        };
        columns.push(ColumnSchema {
            name: header[j].clone(),
            kind,
        });
    }

    let schema = FeatureSchema {
        columns,
        label_column: header[label_idx].clone(),
        positive_label: positive.clone(),
        negative_label: negative.clone(),
    };
    let cells: Vec<Vec<&str>> = rows
        .iter()
        .map(|r| feature_cols.iter().map(|&j| r[j].as_str()).collect())
        .collect();
    let features = encode_rows::<F>(&schema, &cells)?;
    let labels = rows
        .iter()
        .map(|r| if r[label_idx] == positive { 1 } else { -1 })
        .collect();
    let mut dataset = Dataset::new(features, labels)?;
    dataset.feature_names = schema.encoded_names();
    dataset.source_id = path.display().to_string();
    dataset.positive_label_name = positive;
    dataset.negative_label_name = negative;
    Ok((dataset, schema))
}

/// Reads a CSV file into a dataset.
pub fn load_csv<F: Scalar>(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Dataset<F>> {
    load_csv_with_schema(path, options).map(|(d, _)| d)
}

fn encode_rows<F: Scalar>(schema: &FeatureSchema, cells: &[Vec<&str>]) -> Result<Matrix<F>> {
    let width = schema.encoded_names().len();
    let mut out = Matrix::zeros(cells.len(), width);
    for (i, row) in cells.iter().enumerate() {
        let mut k = 0;
        let dst = out.row_mut(i);
        for (col, &cell) in schema.columns.iter().zip(row) {
            match &col.kind {
                ColumnKind::Numeric { fill } => {
                    let v = if is_missing(cell) {
                        *fill
                    } else {
                        parse_number(cell).ok_or_else(|| Error::Parse {
                            row: i,
                            column: col.name.clone(),
                            value: cell.to_string(),
                        })?
                    };
                    dst[k] = F::lit(v);
                    k += 1;
                }
                ColumnKind::Categorical { categories, fill } => {
                    let value = if is_missing(cell) { fill.as_str() } else { cell };
                    // unseen categories encode as all zeros
                    if let Some(pos) = categories.iter().position(|c| c == value) {
                        dst[k + pos] = F::one();
                    }
                    k += categories.len();
                }
            }
        }
    }
    Ok(out)
}

/// Encodes a feature CSV with a previously inferred schema.
///
/// The header must list the schema's columns in the same order; the label
/// column may additionally appear anywhere, in which case its values are
/// returned as `±1` labels.
pub fn read_features<F: Scalar>(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
    delimiter: char,
) -> Result<(Matrix<F>, Option<Vec<i8>>)> {
    let (header, rows) = read_table(path.as_ref(), delimiter)?;
    let label_idx = header.iter().position(|h| *h == schema.label_column);
    let feature_header: Vec<&String> = header
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != label_idx)
        .map(|(_, h)| h)
        .collect();
    let expected: Vec<&String> = schema.columns.iter().map(|c| &c.name).collect();
    if feature_header != expected {
        return Err(Error::Schema(format!(
            "expected feature columns {expected:?} in this order, found {feature_header:?}"
        )));
    }
    let cells: Vec<Vec<&str>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| Some(*j) != label_idx)
                .map(|(_, c)| c.as_str())
                .collect()
        })
        .collect();
    let features = encode_rows(schema, &cells)?;
    let labels = match label_idx {
        None => None,
        Some(j) => Some(
            rows.iter()
                .enumerate()
                .map(|(i, r)| {
                    if r[j] == schema.positive_label {
                        Ok(1)
                    } else if r[j] == schema.negative_label {
                        Ok(-1)
                    } else {
                        Err(Error::Parse {
                            row: i,
                            column: schema.label_column.clone(),
                            value: r[j].clone(),
                        })
                    }
                })
                .collect::<Result<Vec<i8>>>()?,
        ),
    };
    Ok((features, labels))
}

/// `floor(x + ½)`
fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Per-class shuffled index split. Each class contributes
/// `round_half_up(ratio · n_class)` rows to the first part.
pub fn stratified_indices(labels: &[i8], ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidInput(format!("split ratio {ratio} not in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first = Vec::new();
    let mut second = Vec::new();
    for class in [1i8, -1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < 2 {
            return Err(Error::ClassTooSmall {
                label: class,
                count: idx.len(),
                required: 2,
            });
        }
        idx.shuffle(&mut rng);
        let take = round_half_up(ratio * idx.len() as f64).min(idx.len());
        first.extend_from_slice(&idx[..take]);
        second.extend_from_slice(&idx[take..]);
    }
    first.sort_unstable();
    second.sort_unstable();
    Ok((first, second))
}

/// Stratified `ratio : 1 − ratio` split, deterministic in `seed`.
pub fn stratified_split<F: Scalar>(
    dataset: &Dataset<F>,
    ratio: f64,
    seed: u64,
) -> Result<(Dataset<F>, Dataset<F>)> {
    let (a, b) = stratified_indices(&dataset.labels, ratio, seed)?;
    Ok((dataset.subset(&a), dataset.subset(&b)))
}

/// Per-feature affine map fitted on training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Scaler<F> {
    pub mean: Vec<F>,
    /// Sample standard deviation; `None` for constant columns, which pass
    /// through untouched.
    pub std: Vec<Option<F>>,
}

impl<F: Scalar> Scaler<F> {
    pub fn fit(x: &Matrix<F>) -> Self {
        let (n, d) = (x.nrows(), x.ncols());
        let mut mean = vec![F::zero(); d];
        let mut std = vec![None; d];
        if n == 0 {
            return Scaler { mean, std };
        }
        for j in 0..d {
            let m = (0..n).map(|i| x.get(i, j)).sum::<F>() / F::from_count(n);
            mean[j] = m;
            if n > 1 {
                let ss = (0..n).map(|i| (x.get(i, j) - m).powi(2)).sum::<F>();
                let s = (ss / F::from_count(n - 1)).sqrt();
                if s > F::zero() && s.is_finite() {
                    std[j] = Some(s);
                }
            }
        }
        Scaler { mean, std }
    }

    pub fn transform(&self, x: &Matrix<F>) -> Result<Matrix<F>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: x.ncols(),
            });
        }
        let mut out = x.clone();
        for i in 0..out.nrows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                if let Some(s) = self.std[j] {
                    *v = (*v - self.mean[j]) / s;
                }
            }
        }
        Ok(out)
    }
}

/// Standardizes both sets with statistics from `train` only.
pub fn standardize<F: Scalar>(
    train: &Dataset<F>,
    test: &Dataset<F>,
) -> Result<(Dataset<F>, Dataset<F>, Scaler<F>)> {
    if train.is_empty() {
        return Err(Error::EmptyDataset("cannot fit scaler on empty training set".into()));
    }
    let scaler = Scaler::fit(&train.features);
    let tr = train.with_features(scaler.transform(&train.features)?);
    let te = test.with_features(scaler.transform(&test.features)?);
    Ok((tr, te, scaler))
}
