use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;

use crate::dataset::FeatureMask;

/// Amplitude pair whose `beta²` is the probability of observing a 1.
/// Amplitudes are kept in the closed first quadrant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qubit {
    pub alpha: f64,
    pub beta: f64,
}

impl Qubit {
    pub const ZERO: Qubit = Qubit { alpha: 1.0, beta: 0.0 };
    pub const ONE: Qubit = Qubit { alpha: 0.0, beta: 1.0 };

    pub fn superposition() -> Self {
        Qubit {
            alpha: FRAC_1_SQRT_2,
            beta: FRAC_1_SQRT_2,
        }
    }

    #[inline]
    pub fn prob_one(&self) -> f64 {
        self.beta * self.beta
    }

    pub fn norm_error(&self) -> f64 {
        (self.alpha * self.alpha + self.beta * self.beta - 1.0).abs()
    }

    /// Rotation by `angle` radians; positive angles raise `beta²`.
    pub fn rotate(&self, angle: f64) -> Qubit {
        let (s, c) = angle.sin_cos();
        let alpha = c * self.alpha - s * self.beta;
        let beta = s * self.alpha + c * self.beta;
        if alpha < 0.0 {
            return Qubit::ONE;
        }
        if beta < 0.0 {
            return Qubit::ZERO;
        }
        let n = alpha.hypot(beta);
        Qubit {
            alpha: alpha / n,
            beta: beta / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitString(Vec<Qubit>);

impl QubitString {
    pub fn new(qubits: Vec<Qubit>) -> Self {
        QubitString(qubits)
    }

    /// Every feature selected with probability 1/2.
    pub fn superposition(m: usize) -> Self {
        QubitString(vec![Qubit::superposition(); m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn qubits(&self) -> &[Qubit] {
        &self.0
    }

    pub fn max_norm_error(&self) -> f64 {
        self.0.iter().map(Qubit::norm_error).fold(0.0, f64::max)
    }

    /// Collapses every qubit independently.
    pub fn observe<R: Rng + ?Sized>(&self, rng: &mut R) -> FeatureMask {
        FeatureMask::new(self.0.iter().map(|q| rng.gen::<f64>() < q.prob_one()).collect())
    }

    /// Rotates each qubit by an angle drawn from `[theta_min, theta_max]`
    /// toward the corresponding bit of `target`.
    pub fn rotate_toward<R: Rng + ?Sized>(
        &self,
        target: &FeatureMask,
        theta_min: f64,
        theta_max: f64,
        rng: &mut R,
    ) -> QubitString {
        debug_assert_eq!(target.len(), self.len());
        let qubits = self
            .0
            .iter()
            .zip(target.bits())
            .map(|(q, &bit)| {
                let delta = if theta_max > theta_min {
                    rng.gen_range(theta_min..=theta_max)
                } else {
                    theta_min
                };
                q.rotate(if bit { delta } else { -delta })
            })
            .collect();
        QubitString(qubits)
    }
}

/// Guarantees at least one selected feature: an empty mask gets the bit with
/// the largest `beta²` (lowest index on ties).
pub fn repair(mut mask: FeatureMask, q: &QubitString) -> FeatureMask {
    if mask.count() == 0 && !mask.is_empty() {
        let mut best = 0;
        for (j, qb) in q.qubits().iter().enumerate() {
            if qb.prob_one() > q.qubits()[best].prob_one() {
                best = j;
            }
        }
        mask.set(best, true);
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn collapsed_states_observe_deterministically() {
        let mut rng = seed::rng(1);
        let q = QubitString::new(vec![Qubit::ONE, Qubit::ZERO]);
        for _ in 0..1000 {
            assert_eq!(q.observe(&mut rng).to_string(), "10");
        }
    }

    #[test]
    fn superposition_set_rate_within_four_sigma() {
        let mut rng = seed::rng(2);
        let q = QubitString::superposition(1);
        let n = 10_000;
        let ones = (0..n).filter(|_| q.observe(&mut rng).get(0)).count();
        let rate = ones as f64 / n as f64;
        assert!((rate - 0.5).abs() <= 0.02, "{rate}");
    }

    #[test]
    fn repair_leaves_nonempty_masks() {
        let q = QubitString::superposition(4);
        let m: FeatureMask = "0110".parse().unwrap();
        assert_eq!(repair(m.clone(), &q), m);
    }

    #[test]
    fn repair_picks_largest_probability_lowest_index() {
        let q = QubitString::new(
            [0.1f64, 0.7, 0.3, 0.7]
                .iter()
                .map(|&p| Qubit { alpha: (1.0 - p).sqrt(), beta: p.sqrt() })
                .collect(),
        );
        assert_eq!(repair(FeatureMask::zeros(4), &q).to_string(), "0100");
    }

    #[test]
    fn zero_angle_is_identity() {
        let mut rng = seed::rng(3);
        let q = QubitString::new(vec![Qubit::superposition(), Qubit { alpha: 0.6, beta: 0.8 }]);
        let r = q.rotate_toward(&"10".parse().unwrap(), 0.0, 0.0, &mut rng);
        for (a, b) in q.qubits().iter().zip(r.qubits()) {
            assert!((a.alpha - b.alpha).abs() < 1e-15 && (a.beta - b.beta).abs() < 1e-15);
        }
    }

    #[test]
    fn quarter_turn_reaches_one() {
        let q = Qubit::superposition().rotate(FRAC_PI_4);
        assert!(q.alpha.abs() < 1e-12 && (q.beta - 1.0).abs() < 1e-12, "{q:?}");
        let q = Qubit::superposition().rotate(-FRAC_PI_4);
        assert!((q.alpha - 1.0).abs() < 1e-12 && q.beta.abs() < 1e-12, "{q:?}");
    }

    #[test]
    fn rotation_clamps_to_first_quadrant() {
        assert_eq!(Qubit::superposition().rotate(FRAC_PI_2), Qubit::ONE);
        assert_eq!(Qubit::superposition().rotate(-FRAC_PI_2), Qubit::ZERO);
        let up = Qubit::superposition().rotate(0.05 * PI);
        assert!(up.prob_one() > 0.5);
    }

    #[test]
    fn rotations_preserve_normalisation() {
        let mut rng = seed::rng(4);
        let mut q = Qubit::superposition();
        for _ in 0..100_000 {
            let angle = rng.gen_range(-0.05 * PI..=0.05 * PI);
            q = q.rotate(angle);
            assert!(q.norm_error() <= 1e-12);
            assert!(q.alpha >= 0.0 && q.beta >= 0.0);
        }
    }
}
