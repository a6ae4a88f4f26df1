use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{wilcoxon_exact, PairedSample, Sidedness};
use crate::error::{Error, Result};

/// One method's averaged results on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub method: String,
    pub dataset: String,
    pub features: f64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub fpr: f64,
    #[serde(default)]
    pub time_seconds: Option<f64>,
}

impl BaselineRecord {
    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("accuracy", self.accuracy),
            ("sensitivity", self.sensitivity),
            ("specificity", self.specificity),
            ("fpr", self.fpr),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{} on {}: {name} = {v} is outside [0, 1]",
                    self.method, self.dataset
                )));
            }
        }
        Ok(())
    }
}

pub fn read_baselines_from<R: Read>(reader: R, source: &Path) -> Result<Vec<BaselineRecord>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for rec in r.deserialize::<BaselineRecord>() {
        let rec = rec.map_err(|e| Error::Csv {
            path: source.to_owned(),
            message: e.to_string(),
        })?;
        rec.check()?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset(format!("{}: no baseline records", source.display())));
    }
    Ok(out)
}

/// Reads `method,dataset,features,accuracy,sensitivity,specificity,fpr,time_seconds`
/// rows; `time_seconds` may be empty.
pub fn read_baselines(path: impl AsRef<Path>) -> Result<Vec<BaselineRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    read_baselines_from(file, path)
}

/// Performance measure entering the paired test, oriented so that larger
/// is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Accuracy,
    Sensitivity,
    Specificity,
    Fpr,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Measure::Accuracy, Measure::Sensitivity, Measure::Specificity, Measure::Fpr];

    pub fn value(self, r: &BaselineRecord) -> f64 {
        match self {
            Measure::Accuracy => r.accuracy,
            Measure::Sensitivity => r.sensitivity,
            Measure::Specificity => r.specificity,
            Measure::Fpr => r.fpr,
        }
    }

    pub fn oriented(self, r: &BaselineRecord) -> f64 {
        match self {
            Measure::Fpr => -r.fpr,
            _ => self.value(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    /// One record per dataset, in table order.
    pub records: Vec<BaselineRecord>,
    pub n: usize,
    pub p_value: f64,
    pub degenerate: bool,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub own_method: String,
    pub datasets: Vec<String>,
    pub measures: Vec<Measure>,
    pub sidedness: Sidedness,
    pub alpha: f64,
    pub own: Vec<BaselineRecord>,
    pub rows: Vec<ComparisonRow>,
}

fn pick<'a>(records: &'a [BaselineRecord], method: &str, dataset: &str) -> Result<&'a BaselineRecord> {
    records
        .iter()
        .find(|r| r.method == method && r.dataset == dataset)
        .ok_or_else(|| Error::InvalidArgument(format!("`{method}` has no record for dataset `{dataset}`")))
}

/// Pairs `own` with every baseline method over `datasets` x `measures`
/// and runs the exact signed-rank test on each pairing. A baseline is
/// rejected when its p-value is below `alpha`.
pub fn comparison_table(
    own: &[BaselineRecord],
    baselines: &[BaselineRecord],
    datasets: &[&str],
    measures: &[Measure],
    sidedness: Sidedness,
    alpha: f64,
) -> Result<ComparisonTable> {
    if baselines.is_empty() {
        return Err(Error::InvalidArgument("no baseline records".into()));
    }
    if datasets.is_empty() || measures.is_empty() {
        return Err(Error::InvalidArgument("comparison needs datasets and measures".into()));
    }
    let own_method = own
        .first()
        .map(|r| r.method.clone())
        .ok_or_else(|| Error::InvalidArgument("no records for the compared method".into()))?;
    let own: Vec<BaselineRecord> = datasets
        .iter()
        .map(|d| pick(own, &own_method, d).cloned())
        .collect::<Result<_>>()?;
    let mut methods: Vec<&str> = Vec::new();
    for r in baselines {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let oriented = |recs: &[BaselineRecord]| -> Vec<f64> {
        recs.iter()
            .flat_map(|r| measures.iter().map(move |m| m.oriented(r)))
            .collect()
    };
    let values_a = oriented(&own);
    let rows = methods
        .into_iter()
        .map(|method| {
            let records: Vec<BaselineRecord> = datasets
                .iter()
                .map(|d| pick(baselines, method, d).cloned())
                .collect::<Result<_>>()?;
            let pairs = PairedSample::new(&own_method, values_a.clone(), method, oriented(&records))?;
            let w = wilcoxon_exact(&pairs, sidedness)?;
            Ok(ComparisonRow {
                method: method.to_owned(),
                records,
                n: w.n,
                p_value: w.p_value,
                degenerate: w.degenerate,
                rejected: w.p_value < alpha,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ComparisonTable {
        own_method,
        datasets: datasets.iter().map(|d| (*d).to_owned()).collect(),
        measures: measures.to_vec(),
        sidedness,
        alpha,
        own,
        rows,
    })
}

impl ComparisonTable {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["method".to_owned()];
        for d in &self.datasets {
            for col in ["features", "accuracy", "sensitivity", "specificity", "fpr"] {
                h.push(format!("{d}_{col}"));
            }
        }
        h.extend(["p_value".to_owned(), "rejected".to_owned()]);
        h
    }

    fn cells(method: &str, records: &[BaselineRecord]) -> Vec<String> {
        let mut row = vec![method.to_owned()];
        for r in records {
            row.push(r.features.to_string());
            for v in [r.accuracy, r.sensitivity, r.specificity, r.fpr] {
                row.push(format!("{v:.4}"));
            }
        }
        row
    }

    fn body(&self) -> Vec<Vec<String>> {
        let mut out = Vec::with_capacity(self.rows.len() + 1);
        let mut own = Self::cells(&self.own_method, &self.own);
        own.extend([String::new(), String::new()]);
        out.push(own);
        for row in &self.rows {
            let mut cells = Self::cells(&row.method, &row.records);
            cells.push(format!("{:.6}", row.p_value));
            cells.push(if row.rejected { "yes" } else { "no" }.to_owned());
            out.push(cells);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let csv_err = |e: csv::Error| Error::Csv {
            path: path.to_owned(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(self.header()).map_err(csv_err)?;
        for row in self.body() {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }

    /// Column-aligned markdown table.
    pub fn to_markdown(&self) -> String {
        let header = self.header();
        let body = self.body();
        let widths: Vec<usize> = (0..header.len())
            .map(|j| body.iter().map(|r| r[j].len()).chain([header[j].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: &[String]| {
            let mut s = String::from("|");
            for (c, w) in cells.iter().zip(&widths) {
                let _ = write!(s, " {c:<w$} |");
            }
            s.push('\n');
            s
        };
        let mut out = line(&header);
        out.push('|');
        for w in &widths {
            out.push_str(&"-".repeat(w + 2));
            out.push('|');
        }
        out.push('\n');
        for row in &body {
            out.push_str(&line(row));
        }
        out
    }
}
