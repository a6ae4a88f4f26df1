//! Exact Wilcoxon signed-rank test and comparison tables against published
//! baselines.

mod table;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use table::{
    comparison_table, read_baselines, read_baselines_from, ComparisonRow, ComparisonTable, Measure,
    BaselineRecord,
};

/// Largest number of non-zero differences handled exactly.
pub const MAX_EXACT_PAIRS: usize = 25;

/// Absolute differences closer than this (relative to their size) share a
/// rank; differences this small relative to the inputs count as zero.
const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sidedness {
    /// Alternative: the first sample tends to be larger.
    #[default]
    One,
    Two,
}

/// Paired observations of two methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub method_a: String,
    pub method_b: String,
    pub values_a: Vec<f64>,
    pub values_b: Vec<f64>,
}

impl PairedSample {
    pub fn new(
        method_a: impl Into<String>,
        values_a: Vec<f64>,
        method_b: impl Into<String>,
        values_b: Vec<f64>,
    ) -> Result<Self> {
        if values_a.len() != values_b.len() {
            return Err(Error::ShapeMismatch {
                expected: values_a.len(),
                found: values_b.len(),
            });
        }
        if values_a.is_empty() {
            return Err(Error::InvalidArgument("paired sample is empty".into()));
        }
        Ok(PairedSample {
            method_a: method_a.into(),
            method_b: method_b.into(),
            values_a,
            values_b,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Non-zero differences used.
    pub n: usize,
    pub zeros_dropped: usize,
    /// Sum of ranks of positive differences `a - b`.
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    /// All differences were zero; `p_value` is 1.
    pub degenerate: bool,
}

/// Doubled average ranks of `|d|`, so tied ranks stay integral.
fn doubled_ranks(abs: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&i, &j| abs[i].total_cmp(&abs[j]));
    let mut ranks = vec![0u64; abs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() {
            let (lo, hi) = (abs[order[start]], abs[order[end]]);
            if hi - lo > REL_TOL * hi {
                break;
            }
            end += 1;
        }
        // Positions start+1..=end share rank (start + 1 + end) / 2.
        let doubled = (start + 1 + end) as u64;
        for &i in &order[start..end] {
            ranks[i] = doubled;
        }
        start = end;
    }
    ranks
}

/// Number of sign assignments reaching each doubled positive-rank sum.
fn sum_distribution(ranks: &[u64]) -> Vec<u64> {
    let total: u64 = ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for w in (0..=reach).rev() {
            if counts[w] > 0 {
                counts[w + r] += counts[w];
            }
        }
        reach += r;
    }
    counts
}

/// Exact signed-rank test of `values_a` against `values_b`. Zero
/// differences are dropped and tied magnitudes get average ranks; the null
/// distribution of the positive rank sum is computed over all 2^n sign
/// assignments.
pub fn wilcoxon_exact(pairs: &PairedSample, sidedness: Sidedness) -> Result<WilcoxonResult> {
    if pairs.values_a.len() != pairs.values_b.len() {
        return Err(Error::ShapeMismatch {
            expected: pairs.values_a.len(),
            found: pairs.values_b.len(),
        });
    }
    let mut diffs = Vec::new();
    let mut zeros = 0;
    for (&a, &b) in pairs.values_a.iter().zip(&pairs.values_b) {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite paired value ({a}, {b})")));
        }
        let d = a - b;
        if d.abs() <= REL_TOL * a.abs().max(b.abs()) {
            zeros += 1;
        } else {
            diffs.push(d);
        }
    }
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            n,
            zeros_dropped: zeros,
            w_plus: 0.0,
            w_minus: 0.0,
            p_value: 1.0,
            degenerate: true,
        });
    }
    if n > MAX_EXACT_PAIRS {
        return Err(Error::TooManyPairs { n, max: MAX_EXACT_PAIRS });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_ranks(&abs);
    let plus: u64 = ranks.iter().zip(&diffs).filter(|(_, &d)| d > 0.0).map(|(&r, _)| r).sum();
    let total: u64 = ranks.iter().sum();
    let counts = sum_distribution(&ranks);
    let denom = 2f64.powi(n as i32);
    let upper = counts[plus as usize..].iter().sum::<u64>() as f64 / denom;
    let lower = counts[..=plus as usize].iter().sum::<u64>() as f64 / denom;
    let p_value = match sidedness {
        Sidedness::One => upper,
        Sidedness::Two => (2.0 * upper.min(lower)).min(1.0),
    };
    Ok(WilcoxonResult {
        n,
        zeros_dropped: zeros,
        w_plus: plus as f64 / 2.0,
        w_minus: (total - plus) as f64 / 2.0,
        p_value,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(a: Vec<f64>, b: Vec<f64>) -> PairedSample {
        PairedSample::new("a", a, "b", b).unwrap()
    }

    /// Direct enumeration of every sign vector with plain average ranks.
    fn oracle(d: &[i64], sidedness: Sidedness) -> f64 {
        let d: Vec<i64> = d.iter().copied().filter(|&x| x != 0).collect();
        if d.is_empty() {
            return 1.0;
        }
        let n = d.len();
        let mut ranks = vec![0.0; n];
        for i in 0..n {
            let less = d.iter().filter(|x| x.abs() < d[i].abs()).count();
            let equal = d.iter().filter(|x| x.abs() == d[i].abs()).count();
            ranks[i] = less as f64 + (equal as f64 + 1.0) / 2.0;
        }
        let observed: f64 = (0..n).filter(|&i| d[i] > 0).map(|i| ranks[i]).sum();
        let (mut ge, mut le) = (0u64, 0u64);
        for signs in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|&i| signs >> i & 1 == 1).map(|i| ranks[i]).sum();
            if w >= observed - 1e-9 {
                ge += 1;
            }
            if w <= observed + 1e-9 {
                le += 1;
            }
        }
        let total = (1u64 << n) as f64;
        match sidedness {
            Sidedness::One => ge as f64 / total,
            Sidedness::Two => (2.0 * (ge.min(le) as f64) / total).min(1.0),
        }
    }

    #[test]
    fn all_positive_eight() {
        let a: Vec<f64> = (1..=8).map(|i| 1.0 + i as f64 * 0.1).collect();
        let b = vec![1.0; 8];
        let r = wilcoxon_exact(&sample(a, b), Sidedness::One).unwrap();
        assert_eq!(r.p_value, 1.0 / 256.0);
        assert_eq!((r.w_plus, r.w_minus), (36.0, 0.0));
    }

    #[test]
    fn smallest_rank_opposing() {
        let mut a: Vec<f64> = (1..=8).map(|i| 1.0 + i as f64 * 0.1).collect();
        a[0] = 0.9;
        let r = wilcoxon_exact(&sample(a, vec![1.0; 8]), Sidedness::One).unwrap();
        assert_eq!(r.p_value, 2.0 / 256.0);
    }

    #[test]
    fn identical_samples_are_degenerate() {
        let r = wilcoxon_exact(&sample(vec![0.3, 0.5], vec![0.3, 0.5]), Sidedness::Two).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn too_many_pairs() {
        let a: Vec<f64> = (0..26).map(|i| i as f64 + 1.0).collect();
        let err = wilcoxon_exact(&sample(a, vec![0.0; 26]), Sidedness::One).unwrap_err();
        assert!(matches!(err, Error::TooManyPairs { n: 26, .. }));
        assert!(err.to_string().contains("normal approximation"));
    }

    #[test]
    fn length_mismatch() {
        assert!(PairedSample::new("a", vec![1.0], "b", vec![]).is_err());
    }

    #[test]
    fn ties_share_ranks() {
        assert_eq!(doubled_ranks(&[0.5, 0.1, 0.5, 0.2]), vec![7, 2, 7, 4]);
        let r = wilcoxon_exact(&sample(vec![1.0, 2.0, 3.0], vec![0.0, 0.0, 4.0]), Sidedness::One).unwrap();
        assert_eq!((r.w_plus, r.w_minus), (4.5, 1.5));
    }

    #[test]
    fn oracle_spot_checks() {
        for d in [vec![3, -1, 4, 1, -5, 9, 2, 6], vec![2, 2, -2, 0, 7], vec![-1, -2, -3]] {
            let a: Vec<f64> = d.iter().map(|&x| x as f64).collect();
            for s in [Sidedness::One, Sidedness::Two] {
                let got = wilcoxon_exact(&sample(a.clone(), vec![0.0; d.len()]), s).unwrap().p_value;
                assert!((got - oracle(&d, s)).abs() < 1e-12, "{d:?} {s:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn matches_enumeration(d in prop::collection::vec(-6i64..=6, 1..=12), two in any::<bool>()) {
            let s = if two { Sidedness::Two } else { Sidedness::One };
            let a: Vec<f64> = d.iter().map(|&x| x as f64).collect();
            let got = wilcoxon_exact(&sample(a, vec![0.0; d.len()]), s).unwrap().p_value;
            prop_assert!((got - oracle(&d, s)).abs() < 1e-12);
        }

        #[test]
        fn invariant_under_positive_rescaling(
            pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..=12),
            scale in 0.01f64..100.0,
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let sa: Vec<f64> = a.iter().map(|x| x * scale).collect();
            let sb: Vec<f64> = b.iter().map(|x| x * scale).collect();
            for s in [Sidedness::One, Sidedness::Two] {
                let p = wilcoxon_exact(&sample(a.clone(), b.clone()), s).unwrap().p_value;
                let q = wilcoxon_exact(&sample(sa.clone(), sb.clone()), s).unwrap().p_value;
                prop_assert!((p - q).abs() < 1e-12);
            }
        }

        // The one-sided tail is the upper one, so it can only be the
        // smaller tail when the observed sum is at or above the null mean.
        #[test]
        fn one_sided_not_above_two_sided(d in prop::collection::vec(-6i64..=6, 1..=12)) {
            let a: Vec<f64> = d.iter().map(|&x| x as f64).collect();
            let s = sample(a, vec![0.0; d.len()]);
            let one = wilcoxon_exact(&s, Sidedness::One).unwrap();
            let two = wilcoxon_exact(&s, Sidedness::Two).unwrap();
            if one.w_plus >= one.w_minus {
                prop_assert!(one.p_value <= two.p_value + 1e-15);
            }
        }
    }
}
