//! Feature engineering for intrusion-detection style tabular data.
//!
//! The crate selects informative features with a binary quantum-inspired
//! artificial bee colony ([`bqabc`]), builds one extra feature with genetic
//! programming ([`gp`]) and scores everything with a KNN wrapper
//! ([`knn`], [`fitness`]). [`pipeline`] wires the phases together and
//! [`stats`] compares the outcome against published baselines with an exact
//! Wilcoxon signed-rank test.

pub mod bqabc;
pub mod dataset;
pub mod error;
pub mod fitness;
pub mod gp;
pub mod knn;
pub mod metrics;
pub mod pipeline;
pub mod seed;
pub mod stats;

pub use dataset::{Dataset, FeatureMask};
pub use error::{Error, ErrorKind, Result};
