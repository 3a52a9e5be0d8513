//! Bandit environments.
//!
//! Each round an environment names the serving user, emits `k` unit-norm
//! arm vectors, and provides a reward oracle: realized rewards per arm plus
//! the noise-free expected rewards used for regret accounting. Environments
//! also provide the warm-start pass (one observation per user before round
//! one) that policies rely on.
//!
//! Three families are implemented:
//! - [`synthetic::SyntheticEnv`]: group-structured worlds with a certified
//!   reward gap between the relative groups of every emitted arm.
//! - [`rating::RatingEnv`]: built from a rating matrix; item features come
//!   from a truncated SVD, and each round pairs one positively rated item
//!   with `k-1` zero-reward items rated by the serving user.
//! - [`classification::ClassificationEnv`]: classification rows turned into
//!   one-arm-per-class bandit rounds.

pub mod classification;
pub mod rating;
pub mod synthetic;

use alloc::collections::BTreeSet;
use alloc::string::ToString;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result, UserId};

/// Unit-norm tolerance enforced on every emitted arm.
pub const ARM_NORM_TOLERANCE: f64 = 1e-10;

/// The arms offered in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSet {
    pub round: u64,
    pub serving: UserId,
    arms: Vec<Vec<f64>>,
}

impl ArmSet {
    /// Validates `k >= 1`, equal dimensions, and unit norms.
    pub fn new(round: u64, serving: UserId, arms: Vec<Vec<f64>>) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::EmptyData("arm set"));
        }
        let dim = arms[0].len();
        for arm in &arms {
            if arm.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: arm.len(),
                });
            }
            let norm = arm.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > ARM_NORM_TOLERANCE {
                return Err(Error::InvalidConfig(
                    "arm vector is not unit norm".to_string(),
                ));
            }
        }
        Ok(Self {
            round,
            serving,
            arms,
        })
    }

    pub fn arms(&self) -> &[Vec<f64>] {
        &self.arms
    }

    pub fn arm(&self, i: usize) -> &[f64] {
        &self.arms[i]
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.arms[0].len()
    }
}

/// Reward oracle for one round: realized rewards (what the policy observes
/// for the arm it plays) plus the expected rewards behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct Feedback {
    /// Noise-free expected reward of each arm for the serving user.
    pub expected: Vec<f64>,
    /// Realized reward of each arm (expected plus truncated noise).
    pub realized: Vec<f64>,
    /// Best expected reward over the arm set.
    pub best: f64,
}

impl Feedback {
    pub fn new(expected: Vec<f64>, realized: Vec<f64>) -> Self {
        debug_assert_eq!(expected.len(), realized.len());
        let best = expected.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            expected,
            realized,
            best,
        }
    }
}

/// Expected-reward regret of playing `chosen`: `best - expected[chosen]`.
pub fn regret_of(feedback: &Feedback, chosen: usize) -> Result<f64> {
    let h = feedback
        .expected
        .get(chosen)
        .ok_or(Error::IndexOutOfRange {
            index: chosen,
            len: feedback.expected.len(),
        })?;
    Ok(feedback.best - h)
}

/// Everything an environment reveals about one round.
#[derive(Debug, Clone)]
pub struct Round {
    pub arms: ArmSet,
    pub feedback: Feedback,
    /// True relative group of the serving user for each arm, when the
    /// environment knows it (synthetic worlds only).
    pub true_groups: Option<Vec<BTreeSet<UserId>>>,
}

/// One pre-round observation per user.
pub type WarmStartData = Vec<(UserId, Vec<f64>, f64)>;

/// Single-consumer round generator. Distinct runs hold distinct instances;
/// determinism is owned by the instance's seed.
pub trait Environment {
    fn num_users(&self) -> usize;
    fn arm_dim(&self) -> usize;
    fn arms_per_round(&self) -> usize;
    /// One uniformly drawn observation per user, consumed before round 1.
    fn warm_start(&mut self) -> WarmStartData;
    fn step(&mut self, t: u64) -> Round;
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn armset_enforces_unit_norm_and_shape() {
        assert!(ArmSet::new(1, UserId(0), vec![]).is_err());
        assert!(ArmSet::new(1, UserId(0), vec![vec![0.5, 0.5]]).is_err());
        assert!(ArmSet::new(1, UserId(0), vec![vec![1.0, 0.0], vec![1.0]]).is_err());
        let ok = ArmSet::new(1, UserId(0), vec![vec![0.6, 0.8], vec![0.0, 1.0]]).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok.dim(), 2);
    }

    #[test]
    fn regret_examples() {
        let fb = Feedback::new(vec![0.9, 0.4], vec![0.9, 0.4]);
        assert_eq!(regret_of(&fb, 0).unwrap(), 0.0);
        assert!((regret_of(&fb, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            regret_of(&fb, 2),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn regret_matches_max_minus_element() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let k = rng.random_range(1..8);
            let h: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
            let fb = Feedback::new(h.clone(), h.clone());
            let chosen = rng.random_range(0..k);
            let expect = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - h[chosen];
            let got = regret_of(&fb, chosen).unwrap();
            assert!((got - expect).abs() < 1e-15);
            assert!(got >= 0.0);
            // Zero iff an optimal arm was chosen.
            let optimal = (h[chosen] - h.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
                .abs()
                < 1e-15;
            assert_eq!(got == 0.0, optimal);
        }
    }
}
