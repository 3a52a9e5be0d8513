//! Classification datasets as bandit rounds.
//!
//! A `d`-dimensional sample with `k` classes becomes `k` arms of dimension
//! `d + k - 1`: arm `i` carries the sample at offset `i`, zeros elsewhere.
//! Picking arm `i` means predicting class `i`; the reward is 1 exactly when
//! the prediction matches the ground-truth label. Classes double as users,
//! so the serving user of a round is the drawn sample's label.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ArmSet, Environment, Feedback, Round, WarmStartData};
use crate::{Error, Result, UserId};

/// Zero-padded arm construction: `k` vectors of dimension `d + k - 1`,
/// arm `i` holding `x` at offset `i`. Requires unit-norm `x` and `k >= 1`.
pub fn classification_arms(x: &[f64], k: usize) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(Error::InvalidConfig("need at least one arm".to_string()));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(
            "classification input must be unit norm".to_string(),
        ));
    }
    let d = x.len();
    let mut arms = Vec::with_capacity(k);
    for i in 0..k {
        let mut arm = vec![0.0; d + k - 1];
        arm[i..i + d].copy_from_slice(x);
        arms.push(arm);
    }
    Ok(arms)
}

/// Bandit environment over labeled unit-norm samples.
#[derive(Debug, Clone)]
pub struct ClassificationEnv {
    rows: Vec<(usize, Vec<f64>)>,
    by_class: Vec<Vec<usize>>,
    feature_dim: usize,
    rng: ChaCha8Rng,
}

impl ClassificationEnv {
    /// `rows` holds `(class index, unit feature)` pairs; every class in
    /// `0..class_count` needs at least one row.
    pub fn new(rows: Vec<(usize, Vec<f64>)>, class_count: usize, seed: u64) -> Result<Self> {
        if rows.is_empty() || class_count == 0 {
            return Err(Error::EmptyData("classification rows"));
        }
        let feature_dim = rows[0].1.len();
        let mut by_class = vec![Vec::new(); class_count];
        for (idx, (class, x)) in rows.iter().enumerate() {
            if *class >= class_count {
                return Err(Error::IndexOutOfRange {
                    index: *class,
                    len: class_count,
                });
            }
            if x.len() != feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: feature_dim,
                    actual: x.len(),
                });
            }
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(
                    "classification features must be unit norm".to_string(),
                ));
            }
            by_class[*class].push(idx);
        }
        if let Some(empty) = by_class.iter().position(|c| c.is_empty()) {
            return Err(Error::InvalidConfig(alloc::format!(
                "class {empty} has no samples"
            )));
        }
        Ok(Self {
            rows,
            by_class,
            feature_dim,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Same rows, fresh draw stream.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            ..self.clone()
        }
    }

    fn classes(&self) -> usize {
        self.by_class.len()
    }

    fn round_for(&self, t: u64, row: usize) -> Round {
        let (class, x) = &self.rows[row];
        let k = self.classes();
        let arms = classification_arms(x, k).expect("validated rows are unit norm");
        let expected: Vec<f64> = (0..k).map(|i| if i == *class { 1.0 } else { 0.0 }).collect();
        let arms = ArmSet::new(t, UserId(*class), arms).expect("zero padding preserves norm");
        Round {
            arms,
            feedback: Feedback::new(expected.clone(), expected),
            true_groups: None,
        }
    }
}

impl Environment for ClassificationEnv {
    fn num_users(&self) -> usize {
        self.classes()
    }

    fn arm_dim(&self) -> usize {
        self.feature_dim + self.classes() - 1
    }

    fn arms_per_round(&self) -> usize {
        self.classes()
    }

    fn warm_start(&mut self) -> WarmStartData {
        let k = self.classes();
        let mut out = Vec::with_capacity(k);
        for class in 0..k {
            let rows = &self.by_class[class];
            let row = rows[self.rng.random_range(0..rows.len())];
            let x = &self.rows[row].1;
            let arms = classification_arms(x, k).expect("validated rows are unit norm");
            let pick = self.rng.random_range(0..k);
            let reward = if pick == class { 1.0 } else { 0.0 };
            out.push((UserId(class), arms[pick].clone(), reward));
        }
        out
    }

    fn step(&mut self, t: u64) -> Round {
        let row = self.rng.random_range(0..self.rows.len());
        self.round_for(t, row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arm_construction_example() {
        let (a, b) = (0.6, 0.8);
        let arms = classification_arms(&[a, b], 3).unwrap();
        assert_eq!(arms[0], vec![a, b, 0.0, 0.0]);
        assert_eq!(arms[1], vec![0.0, a, b, 0.0]);
        assert_eq!(arms[2], vec![0.0, 0.0, a, b]);
        for arm in &arms {
            let n = arm.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_single_arm() {
        let arms = classification_arms(&[1.0, 0.0], 1).unwrap();
        assert_eq!(arms, vec![vec![1.0, 0.0]]);
    }

    #[test]
    fn non_unit_input_is_rejected() {
        assert!(classification_arms(&[0.5, 0.5], 2).is_err());
        assert!(classification_arms(&[1.0], 0).is_err());
    }

    fn rows() -> Vec<(usize, Vec<f64>)> {
        vec![
            (0, vec![1.0, 0.0]),
            (0, vec![0.0, 1.0]),
            (1, vec![0.6, 0.8]),
            (1, vec![0.8, 0.6]),
        ]
    }

    #[test]
    fn env_rewards_match_labels() {
        let mut env = ClassificationEnv::new(rows(), 2, 3).unwrap();
        assert_eq!(env.num_users(), 2);
        assert_eq!(env.arm_dim(), 3);
        for t in 1..=10 {
            let round = env.step(t);
            let class = round.arms.serving.0;
            assert_eq!(round.feedback.expected[class], 1.0);
            assert_eq!(round.feedback.expected.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn warm_start_gives_every_class_one_observation() {
        let mut env = ClassificationEnv::new(rows(), 2, 3).unwrap();
        let data = env.warm_start();
        assert_eq!(data.len(), 2);
        for (class, (u, x, r)) in data.iter().enumerate() {
            assert_eq!(u.0, class);
            assert_eq!(x.len(), 3);
            assert!(*r == 0.0 || *r == 1.0);
        }
    }

    #[test]
    fn missing_class_is_rejected() {
        let rows = vec![(0, vec![1.0, 0.0]), (2, vec![0.0, 1.0])];
        assert!(ClassificationEnv::new(rows, 3, 0).is_err());
    }
}
