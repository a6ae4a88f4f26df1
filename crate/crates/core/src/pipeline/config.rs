use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bqabc::BqabcConfig;
use crate::dataset::{CsvOptions, Scaling};
use crate::error::{Error, Result};
use crate::fitness::Validation;
use crate::gp::GpConfig;

/// Column layout of the NSL-KDD `KDDTrain+.txt` / `KDDTest+.txt` files.
pub const NSL_KDD_FEATURES: [&str; 41] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

pub const NSL_KDD_CATEGORICAL: [&str; 3] = ["protocol_type", "service", "flag"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Headerless NSL-KDD files: 41 features, label, difficulty.
    NslKdd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub train: PathBuf,
    /// Held-out file; when absent the training file is split.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    /// Share of rows held out when `test` is absent.
    pub test_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    pub categorical: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub header: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column_names: Option<Vec<String>>,
    pub ignore_columns: Vec<String>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            train: PathBuf::new(),
            test: None,
            test_fraction: 0.3,
            preset: None,
            label_column: None,
            categorical: Vec::new(),
            header: None,
            column_names: None,
            ignore_columns: Vec::new(),
        }
    }
}

impl DatasetConfig {
    pub fn is_split(&self) -> bool {
        self.test.is_none()
    }

    /// CSV options after applying the preset; explicit fields win.
    pub fn csv_options(&self) -> Result<CsvOptions> {
        let mut opts = match self.preset {
            Some(Preset::NslKdd) => {
                let mut names: Vec<String> = NSL_KDD_FEATURES.iter().map(|s| (*s).to_owned()).collect();
                names.push("label".into());
                names.push("difficulty".into());
                CsvOptions {
                    label_column: "label".into(),
                    categorical: NSL_KDD_CATEGORICAL.iter().map(|s| (*s).to_owned()).collect(),
                    header: false,
                    column_names: Some(names),
                    ignore_columns: vec!["difficulty".into()],
                }
            }
            None => {
                let label = self
                    .label_column
                    .clone()
                    .ok_or_else(|| Error::Config("dataset.label_column is required without a preset".into()))?;
                CsvOptions::new(label)
            }
        };
        if let Some(l) = &self.label_column {
            opts.label_column = l.clone();
        }
        if !self.categorical.is_empty() {
            opts.categorical = self.categorical.clone();
        }
        if let Some(h) = self.header {
            opts.header = h;
        }
        if self.column_names.is_some() {
            opts.column_names = self.column_names.clone();
        }
        if !self.ignore_columns.is_empty() {
            opts.ignore_columns = self.ignore_columns.clone();
        }
        Ok(opts)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub normalization: Scaling,
    /// When set, labels collapse to this class versus `attack`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_label: Option<String>,
    /// Class reported as positive in the test metrics. Defaults to
    /// `attack` after binarization, otherwise to class code 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive_label: Option<String>,
    /// Stratified fraction of both partitions kept before any fitting.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsample: Option<f64>,
    /// Stratified cap on training rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_limit: Option<usize>,
    /// Stratified cap on test rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Plain accuracy over all classes.
    #[default]
    Multiclass,
    /// Accuracy of the positive-versus-rest decision.
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessConfig {
    pub k: usize,
    pub validation: Validation,
    pub task: TaskKind,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        FitnessConfig {
            k: 5,
            validation: Validation::default(),
            task: TaskKind::Multiclass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Also score KNN on all features of the test set.
    pub evaluate_baseline: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            evaluate_baseline: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub preprocessing: PreprocessConfig,
    pub bqabc: BqabcConfig,
    pub gp: GpConfig,
    pub fitness: FitnessConfig,
    pub output: OutputConfig,
}

impl PipelineConfig {
    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<()> {
        self.bqabc.validate()?;
        self.gp.validate()?;
        if self.fitness.k == 0 {
            return Err(Error::Config("fitness.k must be positive".into()));
        }
        match self.fitness.validation {
            Validation::Holdout { fraction } if !(fraction > 0.0 && fraction < 1.0) => {
                return Err(Error::Config(format!("fitness holdout fraction {fraction} not in (0, 1)")));
            }
            Validation::KFold { folds } if folds < 2 => {
                return Err(Error::Config(format!("fitness k-fold needs at least 2 folds, got {folds}")));
            }
            _ => {}
        }
        if let Some(f) = self.preprocessing.subsample {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("preprocessing.subsample {f} not in (0, 1]")));
            }
        }
        if self.preprocessing.train_limit == Some(0) || self.preprocessing.test_limit == Some(0) {
            return Err(Error::Config("row limits must be positive".into()));
        }
        if self.dataset.is_split() && !(self.dataset.test_fraction > 0.0 && self.dataset.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "dataset.test_fraction {} not in (0, 1)",
                self.dataset.test_fraction
            )));
        }
        Ok(())
    }
}
