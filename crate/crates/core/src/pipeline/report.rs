use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineConfig;
use crate::dataset::{FeatureMask, NormParams};
use crate::error::{Error, Result};
use crate::gp::Expr;
use crate::metrics::{ConfusionCounts, Metrics};

/// Seeds handed to each stochastic component, all derived from `master`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub split: u64,
    pub subsample_train: u64,
    pub subsample_test: u64,
    pub fitness: u64,
    pub bqabc: u64,
    pub gp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub train_rows: usize,
    pub test_rows: usize,
    pub features: usize,
    pub classes: Vec<String>,
    pub positive_class: String,
    /// Test cells whose category was not seen in training, per column.
    pub unseen_test_values: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub mask: FeatureMask,
    pub count: usize,
    pub features: Vec<String>,
    pub fitness: f64,
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub scouts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub expression: Expr,
    /// Same expression with terminals replaced by column names.
    pub expression_named: String,
    pub fitness: f64,
    /// Internal fitness of the selected features without the new column.
    pub mask_only_fitness: f64,
    pub history: Vec<f64>,
    pub generations: usize,
    pub evaluations: usize,
    /// Non-finite values clamped when evaluating on train and test.
    pub clamped_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub features: usize,
    pub confusion: ConfusionCounts,
    pub metrics: Metrics,
    /// Accuracy over the original class labels.
    pub class_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub preprocess: f64,
    pub selection: f64,
    pub construction: f64,
    pub evaluation: f64,
    pub total: f64,
}

/// Run-dependent facts that are excluded from determinism comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Runtime {
    pub workers: usize,
    pub seconds: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub seeds: Seeds,
    pub data: DataSummary,
    pub normalization: NormParams,
    pub selection: SelectionReport,
    pub construction: ConstructionReport,
    pub augmented_count: usize,
    pub test: Evaluation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<Evaluation>,
    pub runtime: Runtime,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON text without the `runtime` block; equal for equal config and
    /// seed.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("runtime");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("report: {e}")))
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Writes `report.json`, `mask.txt`, `feature.sexp` and
/// `norm-params.json` into `dir`, creating it if needed.
pub fn write_run_outputs(report: &RunReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_owned(),
        source,
    })?;
    write(&dir.join("report.json"), &(report.to_json() + "\n"))?;
    write(&dir.join("mask.txt"), &format!("{}\n", report.selection.mask))?;
    write(&dir.join("feature.sexp"), &format!("{}\n", report.construction.expression))?;
    write(&dir.join("norm-params.json"), &(report.normalization.to_json() + "\n"))?;
    Ok(())
}

/// Outcome of one repetition; failed repetitions keep their error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    pub index: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<RunReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Means over successful repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub failed: usize,
    pub selected_features: f64,
    pub augmented_features: f64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub fpr: f64,
    pub class_accuracy: f64,
    pub selection_fitness: f64,
    pub construction_fitness: f64,
    pub total_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_accuracy: Option<f64>,
}

impl Aggregate {
    pub fn from_reps(reps: &[Repetition]) -> Aggregate {
        let ok: Vec<&RunReport> = reps.iter().filter_map(|r| r.report.as_ref()).collect();
        let n = ok.len();
        let mean = |f: &dyn Fn(&RunReport) -> f64| if n == 0 { f64::NAN } else { ok.iter().map(|r| f(r)).sum::<f64>() / n as f64 };
        let baseline_accuracy = if n > 0 && ok.iter().all(|r| r.baseline.is_some()) {
            Some(mean(&|r| r.baseline.as_ref().map_or(0.0, |b| b.metrics.accuracy)))
        } else {
            None
        };
        Aggregate {
            runs: n,
            failed: reps.len() - n,
            selected_features: mean(&|r| r.selection.count as f64),
            augmented_features: mean(&|r| r.augmented_count as f64),
            accuracy: mean(&|r| r.test.metrics.accuracy),
            sensitivity: mean(&|r| r.test.metrics.sensitivity),
            specificity: mean(&|r| r.test.metrics.specificity),
            fpr: mean(&|r| r.test.metrics.fpr),
            class_accuracy: mean(&|r| r.test.class_accuracy),
            selection_fitness: mean(&|r| r.selection.fitness),
            construction_fitness: mean(&|r| r.construction.fitness),
            total_seconds: mean(&|r| r.runtime.seconds.total),
            baseline_accuracy,
        }
    }
}

pub const METRICS_HEADER: [&str; 10] = [
    "run",
    "seed",
    "status",
    "selected",
    "augmented",
    "accuracy",
    "sensitivity",
    "specificity",
    "fpr",
    "time_seconds",
];

fn metrics_row(rep: &Repetition) -> Vec<String> {
    match &rep.report {
        Some(r) => vec![
            rep.index.to_string(),
            rep.seed.to_string(),
            "ok".into(),
            r.selection.count.to_string(),
            r.augmented_count.to_string(),
            r.test.metrics.accuracy.to_string(),
            r.test.metrics.sensitivity.to_string(),
            r.test.metrics.specificity.to_string(),
            r.test.metrics.fpr.to_string(),
            r.runtime.seconds.total.to_string(),
        ],
        None => {
            let mut row = vec![rep.index.to_string(), rep.seed.to_string(), "failed".into()];
            row.resize(METRICS_HEADER.len(), String::new());
            row
        }
    }
}

/// `metrics.csv`: one row per repetition and a final `mean` row.
pub fn write_metrics_csv(reps: &[Repetition], aggregate: &Aggregate, path: &Path) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_owned(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(METRICS_HEADER).map_err(csv_err)?;
    for rep in reps {
        w.write_record(metrics_row(rep)).map_err(csv_err)?;
    }
    let a = aggregate;
    w.write_record([
        "mean".to_owned(),
        String::new(),
        format!("{}/{}", a.runs, a.runs + a.failed),
        a.selected_features.to_string(),
        a.augmented_features.to_string(),
        a.accuracy.to_string(),
        a.sensitivity.to_string(),
        a.specificity.to_string(),
        a.fpr.to_string(),
        a.total_seconds.to_string(),
    ])
    .map_err(csv_err)?;
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Mean measures read back from the `mean` row of a `metrics.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanRow {
    pub selected: f64,
    pub augmented: f64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub fpr: f64,
    pub time_seconds: f64,
}

pub fn read_metrics_mean(path: &Path) -> Result<MeanRow> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_owned(),
        message: e.to_string(),
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let idx = [
        col("selected")?,
        col("augmented")?,
        col("accuracy")?,
        col("sensitivity")?,
        col("specificity")?,
        col("fpr")?,
        col("time_seconds")?,
    ];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.get(0) != Some("mean") {
            continue;
        }
        let mut v = [0.0; 7];
        for (slot, &j) in v.iter_mut().zip(&idx) {
            let cell = rec.get(j).unwrap_or("");
            *slot = cell.parse().map_err(|_| Error::BadNumber {
                path: path.to_owned(),
                line: line as u64 + 2,
                column: headers[j].to_owned(),
                value: cell.to_owned(),
            })?;
        }
        return Ok(MeanRow {
            selected: v[0],
            augmented: v[1],
            accuracy: v[2],
            sensitivity: v[3],
            specificity: v[4],
            fpr: v[5],
            time_seconds: v[6],
        });
    }
    Err(Error::EmptyDataset(format!("{}: no `mean` row", path.display())))
}
