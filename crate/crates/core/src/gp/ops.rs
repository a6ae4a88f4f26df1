//! Tree generation, variation and selection.

use rand::seq::index;
use rand::Rng;

use super::tree::{BinaryOp, Expr, UnaryOp};

const N_FUNCTIONS: usize = UnaryOp::ALL.len() + BinaryOp::ALL.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Every branch reaches the maximum depth.
    Full,
    /// Functions and terminals mixed; branches stop anywhere between the
    /// minimum and maximum depth.
    Grow,
}

fn terminal<R: Rng + ?Sized>(terminals: usize, rng: &mut R) -> Expr {
    Expr::Feature(rng.gen_range(0..terminals))
}

fn build<R: Rng + ?Sized>(
    depth: usize,
    min: usize,
    max: usize,
    method: Method,
    terminals: usize,
    rng: &mut R,
) -> Expr {
    if depth >= max {
        return terminal(terminals, rng);
    }
    // Grow picks uniformly from the whole primitive set.
    if depth >= min
        && method == Method::Grow
        && rng.gen_range(0..terminals + N_FUNCTIONS) < terminals
    {
        return terminal(terminals, rng);
    }
    let f = rng.gen_range(0..N_FUNCTIONS);
    if f < UnaryOp::ALL.len() {
        let a = build(depth + 1, min, max, method, terminals, rng);
        Expr::unary(UnaryOp::ALL[f], a)
    } else {
        let a = build(depth + 1, min, max, method, terminals, rng);
        let b = build(depth + 1, min, max, method, terminals, rng);
        Expr::binary(BinaryOp::ALL[f - UnaryOp::ALL.len()], a, b)
    }
}

/// Tree with depth in `[min, max]` built by `method`.
pub fn build_tree<R: Rng + ?Sized>(
    (min, max): (usize, usize),
    method: Method,
    terminals: usize,
    rng: &mut R,
) -> Expr {
    assert!(terminals >= 1, "at least one terminal is required");
    assert!(min <= max, "empty depth range");
    build(0, min, max, method, terminals, rng)
}

/// Random tree with depth drawn uniformly from `depth_range`, built by full
/// or grow with equal probability.
pub fn random_tree<R: Rng + ?Sized>(depth_range: (usize, usize), terminals: usize, rng: &mut R) -> Expr {
    let (lo, hi) = depth_range;
    assert!(lo <= hi, "empty depth range");
    let d = rng.gen_range(lo..=hi);
    let method = if rng.gen_bool(0.5) { Method::Full } else { Method::Grow };
    build_tree((lo, d), method, terminals, rng)
}

/// Ramped half-and-half: depths cycle through `depth_range`, alternating
/// full and grow at each depth.
pub fn ramped_half_and_half<R: Rng + ?Sized>(
    size: usize,
    depth_range: (usize, usize),
    terminals: usize,
    rng: &mut R,
) -> Vec<Expr> {
    let (lo, hi) = depth_range;
    let span = hi - lo + 1;
    (0..size)
        .map(|i| {
            let d = lo + (i / 2) % span;
            let method = if i % 2 == 0 { Method::Full } else { Method::Grow };
            build_tree((lo, d), method, terminals, rng)
        })
        .collect()
}

/// Swaps a uniformly chosen subtree of `a` with one of `b`. An offspring
/// deeper than `max_depth` is replaced by its parent.
pub fn crossover<R: Rng + ?Sized>(a: &Expr, b: &Expr, max_depth: usize, rng: &mut R) -> (Expr, Expr) {
    let i = rng.gen_range(0..a.size());
    let j = rng.gen_range(0..b.size());
    let (sa, _) = a.node(i).expect("index within size");
    let (sb, _) = b.node(j).expect("index within size");
    let mut ca = a.replace(i, sb);
    let mut cb = b.replace(j, sa);
    if ca.depth() > max_depth {
        ca = a.clone();
    }
    if cb.depth() > max_depth {
        cb = b.clone();
    }
    (ca, cb)
}

/// Replaces a uniformly chosen subtree with a fresh random tree sized to
/// keep the result within `max_depth`.
pub fn mutate<R: Rng + ?Sized>(t: &Expr, terminals: usize, max_depth: usize, rng: &mut R) -> Expr {
    let i = rng.gen_range(0..t.size());
    let (_, site_depth) = t.node(i).expect("index within size");
    let room = max_depth.saturating_sub(site_depth);
    let fresh = random_tree((0, room), terminals, rng);
    t.replace(i, &fresh)
}

/// Index of the fittest member of a uniformly drawn subset of `size`
/// distinct individuals; ties go to the lower index. `size` is clamped to
/// the population.
pub fn tournament_select<R: Rng + ?Sized>(fitnesses: &[f64], size: usize, rng: &mut R) -> usize {
    assert!(!fitnesses.is_empty(), "empty population");
    let size = size.clamp(1, fitnesses.len());
    index::sample(rng, fitnesses.len(), size)
        .into_iter()
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if fitnesses[b] > fitnesses[i] || (fitnesses[b] == fitnesses[i] && b < i) => Some(b),
            _ => Some(i),
        })
        .expect("non-empty sample")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn arity_ok(e: &Expr, terminals: usize) -> bool {
        match e {
            Expr::Feature(j) => *j < terminals,
            Expr::Unary(_, a) => arity_ok(a, terminals),
            Expr::Binary(_, a, b) => arity_ok(a, terminals) && arity_ok(b, terminals),
        }
    }

    #[test]
    fn degenerate_depth_range_gives_a_terminal() {
        let mut rng = seed::rng(1);
        for _ in 0..50 {
            assert!(random_tree((0, 0), 5, &mut rng).is_terminal());
        }
    }

    #[test]
    fn random_trees_respect_depth_range() {
        let mut rng = seed::rng(2);
        for _ in 0..1000 {
            let t = random_tree((2, 6), 4, &mut rng);
            assert!((2..=6).contains(&t.depth()), "{t}");
            assert!(arity_ok(&t, 4));
        }
    }

    #[test]
    fn single_terminal_set() {
        let mut rng = seed::rng(3);
        for _ in 0..100 {
            assert_eq!(random_tree((1, 4), 1, &mut rng).max_feature(), 0);
        }
    }

    #[test]
    fn ramp_covers_every_depth_and_both_methods() {
        let mut rng = seed::rng(4);
        let pop = ramped_half_and_half(50, (2, 6), 6, &mut rng);
        assert_eq!(pop.len(), 50);
        for d in 2..=6 {
            assert!(pop.iter().any(|t| t.depth() == d));
        }
        // Full trees of depth d at even slots.
        for (i, t) in pop.iter().enumerate().step_by(2) {
            assert_eq!(t.depth(), 2 + (i / 2) % 5);
        }
    }

    #[test]
    fn terminal_crossover_swaps() {
        let mut rng = seed::rng(5);
        let (a, b) = crossover(&Expr::Feature(0), &Expr::Feature(3), 8, &mut rng);
        assert_eq!((a, b), (Expr::Feature(3), Expr::Feature(0)));
    }

    #[test]
    fn variation_preserves_arity_and_depth() {
        let mut rng = seed::rng(6);
        let (s, max_depth) = (5, 8);
        let mut pool = ramped_half_and_half(20, (2, 6), s, &mut rng);
        for step in 0..10_000 {
            let i = rng.gen_range(0..pool.len());
            if step % 2 == 0 {
                let j = rng.gen_range(0..pool.len());
                let (a, b) = crossover(&pool[i], &pool[j], max_depth, &mut rng);
                for c in [&a, &b] {
                    assert!(arity_ok(c, s) && c.depth() <= max_depth);
                }
                pool[i] = a;
                pool[j] = b;
            } else {
                let m = mutate(&pool[i], s, max_depth, &mut rng);
                assert!(arity_ok(&m, s) && m.depth() <= max_depth);
                pool[i] = m;
            }
        }
    }

    #[test]
    fn terminal_mutation_reaches_any_depth() {
        let mut rng = seed::rng(7);
        let mut seen = [false; 9];
        for _ in 0..5000 {
            let t = mutate(&Expr::Feature(0), 3, 8, &mut rng);
            seen[t.depth()] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn tournament_limits() {
        let mut rng = seed::rng(8);
        let fit = [0.3, 0.9, 0.1, 0.9, 0.5];
        for _ in 0..100 {
            assert_eq!(tournament_select(&fit, 5, &mut rng), 1);
        }
        let mut counts = [0usize; 5];
        for _ in 0..10_000 {
            counts[tournament_select(&fit, 1, &mut rng)] += 1;
        }
        assert!(counts.iter().all(|&c| (1800..=2200).contains(&c)), "{counts:?}");
    }

    #[test]
    fn tournament_frequency_follows_rank() {
        // Rank r (0 = worst) of n wins with probability C(r, k-1) / C(n, k).
        let mut rng = seed::rng(9);
        let n = 10;
        let fit: Vec<f64> = [3, 7, 1, 9, 0, 5, 8, 2, 6, 4].iter().map(|&v| v as f64).collect();
        let mut counts = vec![0usize; n];
        for _ in 0..10_000 {
            counts[tournament_select(&fit, 3, &mut rng)] += 1;
        }
        let mut by_rank: Vec<(f64, usize)> = fit.iter().copied().zip(counts).collect();
        by_rank.sort_by(|a, b| a.0.total_cmp(&b.0));
        let choose = |n: usize, k: usize| -> f64 {
            if k > n {
                0.0
            } else {
                (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
            }
        };
        for (r, &(_, c)) in by_rank.iter().enumerate() {
            let p = choose(r, 2) / choose(n, 3);
            let sd = (10_000.0 * p * (1.0 - p)).sqrt();
            assert!((c as f64 - 10_000.0 * p).abs() <= 4.0 * sd + 1.0, "rank {r}: {c} vs p={p}");
        }
        for w in by_rank.windows(2).skip(1) {
            assert!(w[1].1 > w[0].1);
        }
    }
}
