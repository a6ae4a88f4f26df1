//! Tabular data: ingestion, categorical coding, scaling, splitting and
//! projection onto feature masks.

mod encode;
mod load;
mod normalize;
mod split;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use encode::{numericalize, CodeMap};
pub use load::{load_csv, load_csv_with, write_csv, CsvOptions, Loaded};
pub use normalize::{apply_norm, fit_minmax, fit_zscore, MinMaxRange, NormParams, Scaling, ZScoreStats};
pub use split::{stratified_folds, stratified_split, stratified_split_indices, stratified_subsample};

/// Dense row-major matrix of feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Matrix {
    pub fn new(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { data, rows, cols })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::ShapeMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            data,
            rows: rows.len(),
            cols,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            data,
            rows: idx.len(),
            cols: self.cols,
        }
    }

    pub fn select_cols(&self, cols: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(cols.iter().map(|&j| row[j]));
        }
        Matrix {
            data,
            rows: self.rows,
            cols: cols.len(),
        }
    }

    /// Rows of `self` followed by `extra` as one more column.
    pub fn with_column(&self, extra: &[f64]) -> Result<Matrix> {
        if extra.len() != self.rows {
            return Err(Error::ShapeMismatch {
                expected: self.rows,
                found: extra.len(),
            });
        }
        let mut data = Vec::with_capacity(self.rows * (self.cols + 1));
        for (i, &x) in extra.iter().enumerate() {
            data.extend_from_slice(self.row(i));
            data.push(x);
        }
        Ok(Matrix {
            data,
            rows: self.rows,
            cols: self.cols + 1,
        })
    }

    pub(crate) fn map_columns(&self, mut f: impl FnMut(usize, f64) -> f64) -> Matrix {
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(k, &x)| f(k % self.cols, x))
            .collect();
        Matrix {
            data,
            rows: self.rows,
            cols: self.cols,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codes: Option<CodeMap>,
}

impl ColumnSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Numeric,
            codes: None,
        }
    }

    pub fn categorical(name: impl Into<String>, codes: CodeMap) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Categorical,
            codes: Some(codes),
        }
    }

    pub fn label(name: impl Into<String>, codes: CodeMap) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Label,
            codes: Some(codes),
        }
    }
}

/// Immutable numeric table with one coded label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Matrix,
    labels: Vec<u32>,
    features: Vec<ColumnSchema>,
    label: ColumnSchema,
    norm: Option<NormParams>,
}

impl Dataset {
    pub fn new(
        values: Matrix,
        labels: Vec<u32>,
        features: Vec<ColumnSchema>,
        label: ColumnSchema,
    ) -> Result<Self> {
        if values.rows() == 0 {
            return Err(Error::EmptyDataset("no rows".into()));
        }
        if values.cols() == 0 {
            return Err(Error::EmptyDataset("no feature columns".into()));
        }
        if labels.len() != values.rows() {
            return Err(Error::ShapeMismatch {
                expected: values.rows(),
                found: labels.len(),
            });
        }
        if features.len() != values.cols() {
            return Err(Error::ShapeMismatch {
                expected: values.cols(),
                found: features.len(),
            });
        }
        Ok(Dataset {
            values,
            labels,
            features,
            label,
            norm: None,
        })
    }

    /// Numeric-only dataset with features named `f0..` and labels named by
    /// their integer id.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u32>) -> Result<Self> {
        let values = Matrix::from_rows(rows)?;
        let features = (0..values.cols())
            .map(|j| ColumnSchema::numeric(format!("f{j}")))
            .collect();
        let n_classes = labels.iter().max().map_or(0, |&c| c + 1);
        let codes = CodeMap::from_ordered((0..n_classes).map(|c| c.to_string()).collect())?;
        Dataset::new(values, labels, features, ColumnSchema::label("label", codes))
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_features(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn features(&self) -> &[ColumnSchema] {
        &self.features
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn label_schema(&self) -> &ColumnSchema {
        &self.label
    }

    pub fn norm_params(&self) -> Option<&NormParams> {
        self.norm.as_ref()
    }

    /// Display name of a class id, falling back to the id itself.
    pub fn class_name(&self, class: u32) -> String {
        self.label
            .codes
            .as_ref()
            .and_then(|c| c.decode(class))
            .map_or_else(|| class.to_string(), str::to_owned)
    }

    pub fn class_counts(&self) -> Vec<(u32, usize)> {
        let mut counts = std::collections::BTreeMap::new();
        for &y in &self.labels {
            *counts.entry(y).or_insert(0usize) += 1;
        }
        counts.into_iter().collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            values: self.values.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            features: self.features.clone(),
            label: self.label.clone(),
            norm: self.norm.clone(),
        }
    }

    /// Keeps the columns whose mask bit is set, in original order.
    pub fn project(&self, mask: &FeatureMask) -> Result<Dataset> {
        if mask.len() != self.n_features() {
            return Err(Error::ShapeMismatch {
                expected: self.n_features(),
                found: mask.len(),
            });
        }
        let cols = mask.selected();
        if cols.is_empty() {
            return Err(Error::EmptyMask);
        }
        Ok(Dataset {
            values: self.values.select_cols(&cols),
            labels: self.labels.clone(),
            features: cols.iter().map(|&j| self.features[j].clone()).collect(),
            label: self.label.clone(),
            norm: self.norm.as_ref().map(|n| n.select(&cols)),
        })
    }

    pub fn with_column(&self, schema: ColumnSchema, column: &[f64]) -> Result<Dataset> {
        let mut features = self.features.clone();
        features.push(schema);
        Ok(Dataset {
            values: self.values.with_column(column)?,
            labels: self.labels.clone(),
            features,
            label: self.label.clone(),
            norm: None,
        })
    }

    /// Same rows with labels replaced.
    pub fn relabel(&self, labels: Vec<u32>, label: ColumnSchema) -> Result<Dataset> {
        if labels.len() != self.n_rows() {
            return Err(Error::ShapeMismatch {
                expected: self.n_rows(),
                found: labels.len(),
            });
        }
        Ok(Dataset {
            labels,
            label,
            ..self.clone()
        })
    }

    /// Collapses labels to `normal` (0) versus `attack` (1).
    pub fn binarize(&self, normal_label: &str) -> Result<Dataset> {
        let codes = self
            .label
            .codes
            .as_ref()
            .ok_or_else(|| Error::Config("label column has no code map".into()))?;
        let normal = codes.code(normal_label);
        let labels = self
            .labels
            .iter()
            .map(|&y| u32::from(Some(y) != normal))
            .collect();
        let schema = ColumnSchema::label(
            self.label.name.clone(),
            CodeMap::from_ordered(vec![normal_label.to_owned(), "attack".to_owned()])?,
        );
        self.relabel(labels, schema)
    }

    pub(crate) fn with_values(&self, values: Matrix, norm: Option<NormParams>) -> Dataset {
        Dataset {
            values,
            norm,
            ..self.clone()
        }
    }
}

/// Binary selection vector over the original features.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask(Vec<bool>);

impl FeatureMask {
    pub fn new(bits: Vec<bool>) -> Self {
        FeatureMask(bits)
    }

    pub fn ones(m: usize) -> Self {
        FeatureMask(vec![true; m])
    }

    pub fn zeros(m: usize) -> Self {
        FeatureMask(vec![false; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, j: usize) -> bool {
        self.0[j]
    }

    pub fn set(&mut self, j: usize, value: bool) {
        self.0[j] = value;
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn selected(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
            .collect()
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for FeatureMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .enumerate()
            .map(|(offset, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse {
                    offset,
                    message: format!("unexpected `{other}` in mask"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(FeatureMask)
    }
}

impl Serialize for FeatureMask {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureMask {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
