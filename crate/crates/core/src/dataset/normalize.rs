use serde::{Deserialize, Serialize};

use super::{Dataset, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    #[default]
    MinMax,
    ZScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxRange {
    pub min: f64,
    pub max: f64,
}

impl MinMaxRange {
    pub fn fit(values: &[f64]) -> Self {
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        MinMaxRange { min, max }
    }

    /// `(x - min) / (max - min)` clamped to `[0, 1]`; constant ranges map to 0.
    #[inline]
    pub fn scale(&self, x: f64) -> f64 {
        if self.max > self.min {
            ((x - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZScoreStats {
    pub mean: f64,
    pub std: f64,
}

impl ZScoreStats {
    pub fn fit(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        ZScoreStats { mean, std: var.sqrt() }
    }

    #[inline]
    pub fn scale(&self, x: f64) -> f64 {
        if self.std > 0.0 {
            (x - self.mean) / self.std
        } else {
            0.0
        }
    }
}

/// Per-column scaling parameters captured on the training partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum NormParams {
    MinMax { columns: Vec<String>, ranges: Vec<MinMaxRange> },
    ZScore { columns: Vec<String>, stats: Vec<ZScoreStats> },
}

impl NormParams {
    pub fn columns(&self) -> &[String] {
        match self {
            NormParams::MinMax { columns, .. } | NormParams::ZScore { columns, .. } => columns,
        }
    }

    pub(crate) fn select(&self, cols: &[usize]) -> NormParams {
        let names = cols.iter().map(|&j| self.columns()[j].clone()).collect();
        match self {
            NormParams::MinMax { ranges, .. } => NormParams::MinMax {
                columns: names,
                ranges: cols.iter().map(|&j| ranges[j]).collect(),
            },
            NormParams::ZScore { stats, .. } => NormParams::ZScore {
                columns: names,
                stats: cols.iter().map(|&j| stats[j]).collect(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("norm params: {e}")))
    }
}

fn columns_of(data: &Dataset) -> Vec<Vec<f64>> {
    (0..data.n_features()).map(|j| data.values().column(j)).collect()
}

pub fn fit_minmax(train: &Dataset) -> NormParams {
    NormParams::MinMax {
        columns: train.feature_names().into_iter().map(str::to_owned).collect(),
        ranges: columns_of(train).iter().map(|c| MinMaxRange::fit(c)).collect(),
    }
}

pub fn fit_zscore(train: &Dataset) -> NormParams {
    NormParams::ZScore {
        columns: train.feature_names().into_iter().map(str::to_owned).collect(),
        stats: columns_of(train).iter().map(|c| ZScoreStats::fit(c)).collect(),
    }
}

/// Scales `data` with parameters fitted elsewhere.
pub fn apply_norm(data: &Dataset, params: &NormParams) -> Result<Dataset> {
    let names = data.feature_names();
    if names.len() != params.columns().len() {
        return Err(Error::ShapeMismatch {
            expected: params.columns().len(),
            found: names.len(),
        });
    }
    if names.iter().zip(params.columns()).any(|(a, b)| *a != b.as_str()) {
        return Err(Error::Config("normalization columns do not match dataset columns".into()));
    }
    let values: Matrix = match params {
        NormParams::MinMax { ranges, .. } => data.values().map_columns(|j, x| ranges[j].scale(x)),
        NormParams::ZScore { stats, .. } => data.values().map_columns(|j, x| stats[j].scale(x)),
    };
    Ok(data.with_values(values, Some(params.clone())))
}
