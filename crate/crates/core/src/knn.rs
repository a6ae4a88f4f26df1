//! Brute-force k-nearest-neighbour classification.
//!
//! Neighbours are ranked by squared Euclidean distance, ties broken by the
//! lower training row. Class votes that tie go to whichever tied class owns
//! the nearest neighbour.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::dataset::{Dataset, Matrix};
use crate::error::{Error, Result};

const PARALLEL_QUERIES: usize = 64;

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn by_distance(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn vote(neighbours: &[(f64, usize)], labels: &[u32]) -> u32 {
    // (class, votes, rank of its nearest member)
    let mut tally: Vec<(u32, usize, usize)> = Vec::with_capacity(neighbours.len());
    for (rank, &(_, i)) in neighbours.iter().enumerate() {
        let y = labels[i];
        match tally.iter_mut().find(|t| t.0 == y) {
            Some(t) => t.1 += 1,
            None => tally.push((y, 1, rank)),
        }
    }
    tally
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)))
        .map(|t| t.0)
        .expect("k >= 1")
}

fn classify(train: &Matrix, labels: &[u32], query: &[f64], k: usize, scratch: &mut Vec<(f64, usize)>) -> u32 {
    scratch.clear();
    scratch.extend((0..train.rows()).map(|i| (sq_dist(train.row(i), query), i)));
    if k < scratch.len() {
        scratch.select_nth_unstable_by(k - 1, by_distance);
        scratch.truncate(k);
    }
    scratch.sort_unstable_by(by_distance);
    vote(scratch, labels)
}

/// Predicts a class for every row of `queries`.
pub fn predict(train: &Matrix, labels: &[u32], queries: &Matrix, k: usize) -> Result<Vec<u32>> {
    if train.cols() != queries.cols() {
        return Err(Error::ShapeMismatch {
            expected: train.cols(),
            found: queries.cols(),
        });
    }
    if labels.len() != train.rows() {
        return Err(Error::ShapeMismatch {
            expected: train.rows(),
            found: labels.len(),
        });
    }
    if k == 0 || k > train.rows() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={} (training rows)",
            train.rows()
        )));
    }
    let one = |scratch: &mut Vec<(f64, usize)>, q: usize| classify(train, labels, queries.row(q), k, scratch);
    let out = if queries.rows() >= PARALLEL_QUERIES {
        (0..queries.rows())
            .into_par_iter()
            .map_init(Vec::new, one)
            .collect()
    } else {
        let mut scratch = Vec::with_capacity(train.rows());
        (0..queries.rows()).map(|q| one(&mut scratch, q)).collect()
    };
    Ok(out)
}

pub fn knn_predict(train: &Dataset, queries: &Dataset, k: usize) -> Result<Vec<u32>> {
    predict(train.values(), train.labels(), queries.values(), k)
}
