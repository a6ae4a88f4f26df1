use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::seed;

fn by_class(labels: &[u32]) -> BTreeMap<u32, Vec<usize>> {
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        groups.entry(y).or_default().push(i);
    }
    groups
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("split fraction {fraction} not in (0, 1)")))
    }
}

/// Per-class shuffled split of row indices. Part A receives
/// `round(fraction * n_c)` rows of every class, kept within `[1, n_c - 1]`.
/// Both parts are returned in ascending row order.
pub fn stratified_split_indices(
    labels: &[u32],
    fraction: f64,
    seed: u64,
    class_name: impl Fn(u32) -> String,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check_fraction(fraction)?;
    let mut rng = seed::rng(seed);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (class, mut rows) in by_class(labels) {
        if rows.len() < 2 {
            return Err(Error::SingletonClass(class_name(class)));
        }
        rows.shuffle(&mut rng);
        let take = ((fraction * rows.len() as f64).round() as usize).clamp(1, rows.len() - 1);
        a.extend_from_slice(&rows[..take]);
        b.extend_from_slice(&rows[take..]);
    }
    a.sort_unstable();
    b.sort_unstable();
    Ok((a, b))
}

pub fn stratified_split(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (a, b) = stratified_split_indices(data.labels(), fraction, seed, |c| data.class_name(c))?;
    Ok((data.select_rows(&a), data.select_rows(&b)))
}

/// Stratified subset keeping `max(1, round(fraction * n_c))` rows per class.
pub fn stratified_subsample(data: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("subsample fraction {fraction} not in (0, 1]")));
    }
    if fraction == 1.0 {
        return Ok(data.clone());
    }
    let mut rng = seed::rng(seed);
    let mut keep = Vec::new();
    for (_, mut rows) in by_class(data.labels()) {
        rows.shuffle(&mut rng);
        let take = ((fraction * rows.len() as f64).round() as usize).max(1);
        keep.extend_from_slice(&rows[..take]);
    }
    keep.sort_unstable();
    Ok(data.select_rows(&keep))
}

/// Validation folds for stratified k-fold; each inner vector is one fold's
/// held-out rows in ascending order.
pub fn stratified_folds(labels: &[u32], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{folds} folds requested for {} rows",
            labels.len()
        )));
    }
    let mut rng = seed::rng(seed);
    let mut out = vec![Vec::new(); folds];
    for (offset, (_, mut rows)) in by_class(labels).into_iter().enumerate() {
        rows.shuffle(&mut rng);
        for (p, i) in rows.into_iter().enumerate() {
            out[(offset + p) % folds].push(i);
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labelled(counts: &[usize]) -> Dataset {
        let mut labels = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            labels.extend(std::iter::repeat_n(c as u32, n));
        }
        let rows: Vec<Vec<f64>> = (0..labels.len()).map(|i| vec![i as f64]).collect();
        Dataset::from_rows(&rows, labels).unwrap()
    }

    fn per_class(d: &Dataset) -> Vec<usize> {
        d.class_counts().into_iter().map(|(_, n)| n).collect()
    }

    #[test]
    fn seventy_thirty_on_balanced_classes() {
        let d = labelled(&[50, 50]);
        let (a, b) = stratified_split(&d, 0.7, 1).unwrap();
        assert_eq!((a.n_rows(), b.n_rows()), (70, 30));
        assert_eq!(per_class(&a), vec![35, 35]);
        assert_eq!(per_class(&b), vec![15, 15]);
    }

    #[test]
    fn half_split_rounds_within_one() {
        let d = labelled(&[6, 4]);
        let (a, b) = stratified_split(&d, 0.5, 3).unwrap();
        assert_eq!(per_class(&a), vec![3, 2]);
        assert_eq!(per_class(&b), vec![3, 2]);
    }

    #[test]
    fn same_seed_same_partition() {
        let d = labelled(&[30, 20]);
        assert_eq!(stratified_split(&d, 0.6, 9).unwrap(), stratified_split(&d, 0.6, 9).unwrap());
        assert_ne!(stratified_split(&d, 0.6, 9).unwrap().0, stratified_split(&d, 0.6, 10).unwrap().0);
    }

    #[test]
    fn singleton_class_is_named() {
        let d = labelled(&[5, 1]);
        match stratified_split(&d, 0.5, 0) {
            Err(Error::SingletonClass(name)) => assert_eq!(name, "1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn subsample_keeps_rare_classes() {
        let d = labelled(&[200, 3]);
        let s = stratified_subsample(&d, 0.05, 4).unwrap();
        assert_eq!(per_class(&s), vec![10, 1]);
    }

    #[test]
    fn folds_partition_rows() {
        let labels: Vec<u32> = (0..31).map(|i| (i % 3) as u32).collect();
        let folds = stratified_folds(&labels, 3, 2).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..31).collect::<Vec<_>>());
        for f in &folds {
            assert!((10..=11).contains(&f.len()));
        }
    }

    proptest! {
        #[test]
        fn split_is_disjoint_and_exhaustive(
            counts in proptest::collection::vec(2usize..40, 1..5),
            fraction in 0.05f64..0.95,
            seed in any::<u64>(),
        ) {
            let d = labelled(&counts);
            let (a, b) = stratified_split_indices(d.labels(), fraction, seed, |c| c.to_string()).unwrap();
            let mut all = [a.clone(), b.clone()].concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..d.n_rows()).collect::<Vec<_>>());
            let part_a = d.select_rows(&a);
            for ((_, n), (_, k)) in d.class_counts().into_iter().zip(part_a.class_counts()) {
                prop_assert!((k as f64 - fraction * n as f64).abs() <= 1.0);
            }
        }
    }
}
