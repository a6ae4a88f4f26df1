use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{numericalize, ColumnKind, ColumnSchema, Dataset, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvOptions {
    pub label_column: String,
    #[serde(default)]
    pub categorical: Vec<String>,
    /// Whether the first row holds column names.
    #[serde(default = "default_true")]
    pub header: bool,
    /// Column names for headerless files, or overrides for the header row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_names: Option<Vec<String>>,
    #[serde(default)]
    pub ignore_columns: Vec<String>,
}

fn default_true() -> bool {
    true
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        CsvOptions {
            label_column: label_column.into(),
            categorical: Vec::new(),
            header: true,
            column_names: None,
            ignore_columns: Vec::new(),
        }
    }

    pub fn categorical<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.categorical = names.into_iter().map(Into::into).collect();
        self
    }
}

/// A parsed table plus the number of cells per column whose category was
/// not known to the reference schema.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    pub unseen: BTreeMap<String, usize>,
}

impl Loaded {
    pub fn unseen_total(&self) -> usize {
        self.unseen.values().sum()
    }
}

/// Reads a headed CSV file into a raw (unscaled) dataset.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, categorical: &[&str]) -> Result<Dataset> {
    let opts = CsvOptions::new(label_column).categorical(categorical.iter().copied());
    load_csv_with(path, &opts, None).map(|l| l.dataset)
}

enum Column {
    Numeric(Vec<f64>),
    Text(Vec<String>),
}

/// Reads a CSV file. With `reference`, category and label codes are reused
/// from that dataset's schema and unseen values are counted.
pub fn load_csv_with(path: impl AsRef<Path>, opts: &CsvOptions, reference: Option<&Dataset>) -> Result<Loaded> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_owned(),
        message: e.to_string(),
    };

    let mut records = reader.records();
    let mut names: Vec<String> = Vec::new();
    if opts.header {
        match records.next() {
            Some(r) => names = r.map_err(csv_err)?.iter().map(str::to_owned).collect(),
            None => return Err(Error::EmptyDataset(format!("{}: no header row", path.display()))),
        }
    }
    if let Some(override_names) = &opts.column_names {
        if opts.header && override_names.len() != names.len() {
            return Err(Error::Config(format!(
                "{} column names given but header has {}",
                override_names.len(),
                names.len()
            )));
        }
        names = override_names.clone();
    }
    if names.is_empty() {
        return Err(Error::Config(format!(
            "{}: no column names (headerless files need column_names)",
            path.display()
        )));
    }

    let position = |name: &str| names.iter().position(|n| n == name);
    let label_at = position(&opts.label_column).ok_or_else(|| Error::MissingColumn(opts.label_column.clone()))?;
    for name in opts.categorical.iter().chain(&opts.ignore_columns) {
        if position(name).is_none() {
            return Err(Error::MissingColumn(name.clone()));
        }
    }

    // Column kinds come from the reference when there is one.
    let feature_cols: Vec<usize> = (0..names.len())
        .filter(|&j| j != label_at && !opts.ignore_columns.contains(&names[j]))
        .collect();
    if let Some(reference) = reference {
        let expected = reference.feature_names();
        let found: Vec<&str> = feature_cols.iter().map(|&j| names[j].as_str()).collect();
        if expected != found {
            return Err(Error::Config(format!(
                "{}: feature columns differ from the reference dataset",
                path.display()
            )));
        }
    }
    let is_categorical = |k: usize, j: usize| match reference {
        Some(r) => r.features()[k].kind == ColumnKind::Categorical,
        None => opts.categorical.contains(&names[j]),
    };
    let mut columns: Vec<Column> = feature_cols
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            if is_categorical(k, j) {
                Column::Text(Vec::new())
            } else {
                Column::Numeric(Vec::new())
            }
        })
        .collect();
    let mut label_text = Vec::new();

    for record in records {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != names.len() {
            return Err(Error::RaggedRow {
                path: path.to_owned(),
                line,
                expected: names.len(),
                found: record.len(),
            });
        }
        for (col, &j) in columns.iter_mut().zip(&feature_cols) {
            let cell = &record[j];
            match col {
                Column::Text(v) => v.push(cell.to_owned()),
                Column::Numeric(v) => {
                    let x = cell
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::BadNumber {
                            path: path.to_owned(),
                            line,
                            column: names[j].clone(),
                            value: cell.to_owned(),
                        })?;
                    v.push(x);
                }
            }
        }
        label_text.push(record[label_at].to_owned());
    }
    if label_text.is_empty() {
        return Err(Error::EmptyDataset(format!("{}: no data rows", path.display())));
    }

    let n = label_text.len();
    let mut unseen = BTreeMap::new();
    let mut schema = Vec::with_capacity(columns.len());
    let mut dense: Vec<Vec<f64>> = Vec::with_capacity(columns.len());
    for (k, (col, &j)) in columns.into_iter().zip(&feature_cols).enumerate() {
        let name = names[j].clone();
        match col {
            Column::Numeric(v) => {
                schema.push(ColumnSchema::numeric(name));
                dense.push(v);
            }
            Column::Text(v) => {
                let (codes, map) = match reference.and_then(|r| r.features()[k].codes.clone()) {
                    Some(map) => {
                        let mut missing = 0;
                        let codes = v
                            .iter()
                            .map(|s| {
                                let (c, new) = map.encode(s);
                                missing += usize::from(new);
                                c
                            })
                            .collect::<Vec<_>>();
                        if missing > 0 {
                            unseen.insert(name.clone(), missing);
                        }
                        (codes, map)
                    }
                    None => numericalize(&v),
                };
                dense.push(codes.into_iter().map(f64::from).collect());
                schema.push(ColumnSchema::categorical(name, map));
            }
        }
    }

    let label_name = names[label_at].clone();
    let (labels, label_map) = match reference.and_then(|r| r.label_schema().codes.clone()) {
        Some(map) => {
            let mut missing = 0;
            let labels = label_text
                .iter()
                .map(|s| {
                    let (c, new) = map.encode(s);
                    missing += usize::from(new);
                    c
                })
                .collect();
            if missing > 0 {
                unseen.insert(label_name.clone(), missing);
            }
            (labels, map)
        }
        None => numericalize(&label_text),
    };

    let m = dense.len();
    let mut data = Vec::with_capacity(n * m);
    for i in 0..n {
        data.extend(dense.iter().map(|c| c[i]));
    }
    let dataset = Dataset::new(
        Matrix::new(data, n, m)?,
        labels,
        schema,
        ColumnSchema::label(label_name, label_map),
    )?;
    Ok(Loaded { dataset, unseen })
}

/// Writes feature values plus the label (as class names) with a header row.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path: PathBuf = path.as_ref().to_owned();
    let err = |e: csv::Error| Error::Csv {
        path: path.clone(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(&path).map_err(err)?;
    let mut header = data.feature_names();
    header.push(&data.label_schema().name);
    w.write_record(&header).map_err(err)?;
    for i in 0..data.n_rows() {
        let mut row: Vec<String> = data.values().row(i).iter().map(|x| x.to_string()).collect();
        row.push(data.class_name(data.labels()[i]));
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.clone(), source })
}
