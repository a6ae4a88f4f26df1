//! Wrapper fitness: KNN accuracy on an internal validation split of the
//! training partition, restricted to the columns under evaluation.

use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_folds, stratified_split_indices, Dataset, FeatureMask, Matrix, MinMaxRange};
use crate::error::{Error, Result};
use crate::knn;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Validation {
    /// Stratified split; `fraction` of rows train the classifier.
    Holdout { fraction: f64 },
    /// Stratified k-fold; accuracy is pooled over all folds.
    KFold { folds: usize },
}

impl Default for Validation {
    fn default() -> Self {
        Validation::Holdout { fraction: 0.7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Task {
    /// A prediction counts as correct when it agrees with the truth on
    /// "is `positive_class`".
    Binary { positive_class: u32 },
    Multiclass,
}

impl Task {
    #[inline]
    fn correct(&self, pred: u32, truth: u32) -> bool {
        match *self {
            Task::Binary { positive_class } => (pred == positive_class) == (truth == positive_class),
            Task::Multiclass => pred == truth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessProtocol {
    pub k: usize,
    pub validation: Validation,
    pub task: Task,
    pub seed: u64,
}

impl Default for FitnessProtocol {
    fn default() -> Self {
        FitnessProtocol {
            k: 5,
            validation: Validation::default(),
            task: Task::Multiclass,
            seed: 0,
        }
    }
}

struct Split {
    fit_rows: Matrix,
    fit_labels: Vec<u32>,
    val_rows: Matrix,
    val_labels: Vec<u32>,
    fit_idx: Vec<usize>,
    val_idx: Vec<usize>,
}

/// Fitness evaluator bound to one training partition and a fixed split.
pub struct WrapperFitness<'a> {
    data: &'a Dataset,
    protocol: FitnessProtocol,
    splits: Vec<Split>,
}

impl<'a> WrapperFitness<'a> {
    pub fn new(data: &'a Dataset, protocol: FitnessProtocol) -> Result<Self> {
        let labels = data.labels();
        let parts: Vec<(Vec<usize>, Vec<usize>)> = match protocol.validation {
            Validation::Holdout { fraction } => {
                vec![stratified_split_indices(labels, fraction, protocol.seed, |c| data.class_name(c))?]
            }
            Validation::KFold { folds } => {
                let folds = stratified_folds(labels, folds, protocol.seed)?;
                (0..folds.len())
                    .map(|f| {
                        let fit = folds
                            .iter()
                            .enumerate()
                            .filter(|&(g, _)| g != f)
                            .flat_map(|(_, rows)| rows.iter().copied())
                            .collect::<std::collections::BTreeSet<_>>()
                            .into_iter()
                            .collect();
                        (fit, folds[f].clone())
                    })
                    .collect()
            }
        };
        let min_fit = parts.iter().map(|(a, _)| a.len()).min().unwrap_or(0);
        if protocol.k == 0 || protocol.k > min_fit {
            return Err(Error::Config(format!(
                "k = {} must be in 1..={min_fit} (internal training rows)",
                protocol.k
            )));
        }
        let splits = parts
            .into_iter()
            .map(|(fit, val)| Split {
                fit_rows: data.values().select_rows(&fit),
                fit_labels: fit.iter().map(|&i| labels[i]).collect(),
                val_rows: data.values().select_rows(&val),
                val_labels: val.iter().map(|&i| labels[i]).collect(),
                fit_idx: fit,
                val_idx: val,
            })
            .collect();
        Ok(WrapperFitness { data, protocol, splits })
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn protocol(&self) -> &FitnessProtocol {
        &self.protocol
    }

    /// Number of rows visible to the evaluator.
    pub fn rows(&self) -> usize {
        self.data.n_rows()
    }

    pub fn evaluate(&self, mask: &FeatureMask) -> Result<f64> {
        if mask.len() != self.data.n_features() {
            return Err(Error::ShapeMismatch {
                expected: self.data.n_features(),
                found: mask.len(),
            });
        }
        let cols = mask.selected();
        if cols.is_empty() {
            return Err(Error::EmptyMask);
        }
        self.evaluate_columns(&cols, None)
    }

    /// Accuracy on `cols`, optionally augmented by one extra column given
    /// for every row of the dataset. The extra column is min-max scaled on
    /// each split's training rows.
    pub fn evaluate_columns(&self, cols: &[usize], extra: Option<&[f64]>) -> Result<f64> {
        if cols.is_empty() && extra.is_none() {
            return Err(Error::EmptyMask);
        }
        if let Some(col) = extra {
            if col.len() != self.data.n_rows() {
                return Err(Error::ShapeMismatch {
                    expected: self.data.n_rows(),
                    found: col.len(),
                });
            }
        }
        let mut hits = 0usize;
        let mut total = 0usize;
        for s in &self.splits {
            let mut fit = s.fit_rows.select_cols(cols);
            let mut val = s.val_rows.select_cols(cols);
            if let Some(col) = extra {
                let fit_col: Vec<f64> = s.fit_idx.iter().map(|&i| col[i]).collect();
                let range = MinMaxRange::fit(&fit_col);
                let fit_scaled: Vec<f64> = fit_col.iter().map(|&x| range.scale(x)).collect();
                let val_scaled: Vec<f64> = s.val_idx.iter().map(|&i| range.scale(col[i])).collect();
                fit = fit.with_column(&fit_scaled)?;
                val = val.with_column(&val_scaled)?;
            }
            let pred = knn::predict(&fit, &s.fit_labels, &val, self.protocol.k)?;
            hits += pred
                .iter()
                .zip(&s.val_labels)
                .filter(|(&p, &t)| self.protocol.task.correct(p, t))
                .count();
            total += pred.len();
        }
        Ok(hits as f64 / total as f64)
    }
}

pub fn wrapper_fitness(data: &Dataset, mask: &FeatureMask, protocol: &FitnessProtocol) -> Result<f64> {
    WrapperFitness::new(data, *protocol)?.evaluate(mask)
}
