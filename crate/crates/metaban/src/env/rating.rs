//! Environments built from a user x item rating matrix.
//!
//! Ingestion keeps the most-rated users and items, builds the dense rating
//! matrix, and extracts item features as the rows of `V * diag(sigma)` from
//! a rank-`d` truncated SVD, normalized to unit length. A rating below the
//! configured threshold is a positive signal (reward 1), anything else is
//! reward 0. Each round serves a random eligible user and offers one of
//! their positive items alongside `k - 1` of their zero-reward items, in
//! shuffled order.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ArmSet, Environment, Feedback, Round, WarmStartData};
use crate::svd::{truncated_svd, Matrix};
use crate::{Error, Result, UserId};

/// One parsed rating.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingRecord {
    pub user: String,
    pub item: String,
    pub rating: f64,
}

/// Ingestion and round parameters for a rating environment.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingSpec {
    /// Keep this many most-rated users (ties broken by key).
    pub top_users: usize,
    /// Keep this many most-rated items.
    pub top_items: usize,
    /// Feature dimension `d` extracted by the SVD.
    pub feature_dim: usize,
    /// Ratings strictly below this threshold yield reward 1.
    pub reward_threshold: f64,
    /// Arms per round: 1 positive + (arms - 1) zero-reward items.
    pub arms: usize,
    pub seed: u64,
}

impl RatingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.top_users == 0 || self.top_items == 0 || self.feature_dim == 0 || self.arms == 0 {
            return Err(Error::InvalidConfig(
                "rating spec needs top_users, top_items, feature_dim, arms >= 1".to_string(),
            ));
        }
        if self.feature_dim > self.top_users.min(self.top_items) {
            return Err(Error::InvalidConfig(
                "feature_dim must not exceed min(top_users, top_items)".to_string(),
            ));
        }
        Ok(())
    }
}

/// Non-fatal ingestion findings; the CLI surfaces them as warnings.
#[derive(Debug, Clone, PartialEq)]
pub enum IngestWarning {
    /// User kept by rating count but serving-ineligible: no positive item.
    UserWithoutPositive(String),
    /// User kept but with fewer than `arms - 1` zero-reward items.
    UserWithTooFewNegatives(String),
    /// Item kept by rating count but absent from the supplied feature file.
    ItemWithoutFeature(String),
    /// Item whose extracted feature vector is numerically zero.
    ItemWithZeroFeature(String),
}

impl core::fmt::Display for IngestWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            IngestWarning::UserWithoutPositive(u) => {
                write!(f, "user {u} skipped: no positive-reward item")
            }
            IngestWarning::UserWithTooFewNegatives(u) => {
                write!(f, "user {u} skipped: fewer than k-1 zero-reward items")
            }
            IngestWarning::ItemWithoutFeature(i) => {
                write!(f, "item {i} dropped: no feature row supplied")
            }
            IngestWarning::ItemWithZeroFeature(i) => {
                write!(f, "item {i} dropped: zero feature vector")
            }
        }
    }
}

#[derive(Debug, Clone)]
struct UserPool {
    key: String,
    /// Internal item indices with reward 1 / reward 0.
    positives: Vec<usize>,
    negatives: Vec<usize>,
}

/// Rating-matrix environment. Rewards are deterministic (1 for the positive
/// item, 0 otherwise); the regret oracle is exact.
#[derive(Debug, Clone)]
pub struct RatingEnv {
    arms: usize,
    dim: usize,
    users: Vec<UserPool>,
    item_keys: Vec<String>,
    item_features: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
}

impl RatingEnv {
    /// Build from raw records, extracting item features by truncated SVD of
    /// the kept rating matrix.
    pub fn from_records(
        records: &[RatingRecord],
        spec: &RatingSpec,
    ) -> Result<(Self, Vec<IngestWarning>)> {
        spec.validate()?;
        let kept = KeptMatrix::build(records, spec)?;
        let factors = truncated_svd(&kept.matrix, spec.feature_dim, spec.seed);
        let mut features = Vec::with_capacity(kept.item_keys.len());
        for j in 0..kept.item_keys.len() {
            let mut f: Vec<f64> = factors
                .iter()
                .map(|fac| fac.sigma * fac.v[j])
                .collect();
            f.resize(spec.feature_dim, 0.0);
            features.push(f);
        }
        Self::assemble(kept, features, spec)
    }

    /// Build from raw records plus precomputed item features, skipping the
    /// SVD entirely. Features are normalized on load.
    pub fn from_records_with_features(
        records: &[RatingRecord],
        features: &BTreeMap<String, Vec<f64>>,
        spec: &RatingSpec,
    ) -> Result<(Self, Vec<IngestWarning>)> {
        spec.validate()?;
        let kept = KeptMatrix::build(records, spec)?;
        let mut rows = Vec::with_capacity(kept.item_keys.len());
        let mut missing = Vec::new();
        for key in &kept.item_keys {
            match features.get(key) {
                Some(f) if f.len() == spec.feature_dim => rows.push(f.clone()),
                Some(f) => {
                    return Err(Error::DimensionMismatch {
                        expected: spec.feature_dim,
                        actual: f.len(),
                    })
                }
                None => {
                    missing.push(IngestWarning::ItemWithoutFeature(key.clone()));
                    rows.push(Vec::new());
                }
            }
        }
        let (env, mut warnings) = Self::assemble(kept, rows, spec)?;
        warnings.extend(missing);
        Ok((env, warnings))
    }

    fn assemble(
        kept: KeptMatrix,
        raw_features: Vec<Vec<f64>>,
        spec: &RatingSpec,
    ) -> Result<(Self, Vec<IngestWarning>)> {
        let mut warnings = Vec::new();
        // Normalize features; items without a usable vector are unusable as
        // arms and get dropped from every pool.
        let mut features = Vec::with_capacity(raw_features.len());
        let mut usable = Vec::with_capacity(raw_features.len());
        for (j, mut f) in raw_features.into_iter().enumerate() {
            let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ok = !f.is_empty() && norm > 1e-12;
            if ok {
                for v in f.iter_mut() {
                    *v /= norm;
                }
            } else if !f.is_empty() {
                warnings.push(IngestWarning::ItemWithZeroFeature(kept.item_keys[j].clone()));
            }
            usable.push(ok);
            features.push(f);
        }

        let mut users = Vec::new();
        for (u, key) in kept.user_keys.iter().enumerate() {
            let mut positives = Vec::new();
            let mut negatives = Vec::new();
            for &(item, rating) in &kept.ratings_by_user[u] {
                if !usable[item] {
                    continue;
                }
                if rating < spec.reward_threshold {
                    positives.push(item);
                } else {
                    negatives.push(item);
                }
            }
            if positives.is_empty() {
                warnings.push(IngestWarning::UserWithoutPositive(key.clone()));
                continue;
            }
            if negatives.len() < spec.arms - 1 {
                warnings.push(IngestWarning::UserWithTooFewNegatives(key.clone()));
                continue;
            }
            users.push(UserPool {
                key: key.clone(),
                positives,
                negatives,
            });
        }
        if users.is_empty() {
            return Err(Error::EmptyData("no serving-eligible users after ingestion"));
        }
        Ok((
            Self {
                arms: spec.arms,
                dim: spec.feature_dim,
                users,
                item_keys: kept.item_keys,
                item_features: features,
                rng: ChaCha8Rng::seed_from_u64(spec.seed),
            },
            warnings,
        ))
    }

    /// Same world (pools, features), fresh serving stream.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            ..self.clone()
        }
    }

    pub fn user_keys(&self) -> Vec<&str> {
        self.users.iter().map(|u| u.key.as_str()).collect()
    }

    pub fn item_keys(&self) -> &[String] {
        &self.item_keys
    }

    /// Unit-normalized item features, aligned with `item_keys` (empty vector
    /// for dropped items).
    pub fn item_features(&self) -> &[Vec<f64>] {
        &self.item_features
    }
}

impl Environment for RatingEnv {
    fn num_users(&self) -> usize {
        self.users.len()
    }

    fn arm_dim(&self) -> usize {
        self.dim
    }

    fn arms_per_round(&self) -> usize {
        self.arms
    }

    fn warm_start(&mut self) -> WarmStartData {
        let mut out = Vec::with_capacity(self.users.len());
        for u in 0..self.users.len() {
            let pool = &self.users[u];
            let total = pool.positives.len() + pool.negatives.len();
            let pick = self.rng.random_range(0..total);
            let (item, reward) = if pick < pool.positives.len() {
                (pool.positives[pick], 1.0)
            } else {
                (pool.negatives[pick - pool.positives.len()], 0.0)
            };
            out.push((UserId(u), self.item_features[item].clone(), reward));
        }
        out
    }

    fn step(&mut self, t: u64) -> Round {
        let u = self.rng.random_range(0..self.users.len());
        let pool = &self.users[u];
        let positive = pool.positives[self.rng.random_range(0..pool.positives.len())];
        let negatives =
            rand::seq::index::sample(&mut self.rng, pool.negatives.len(), self.arms - 1);
        let mut items: Vec<(usize, f64)> = negatives
            .into_iter()
            .map(|i| (pool.negatives[i], 0.0))
            .collect();
        // Insert the positive at a random slot so its index is not a tell.
        let slot = self.rng.random_range(0..=items.len());
        items.insert(slot, (positive, 1.0));

        let arms: Vec<Vec<f64>> = items
            .iter()
            .map(|(item, _)| self.item_features[*item].clone())
            .collect();
        let expected: Vec<f64> = items.iter().map(|(_, r)| *r).collect();
        let arms = ArmSet::new(t, UserId(u), arms).expect("item features are unit norm");
        Round {
            arms,
            feedback: Feedback::new(expected.clone(), expected),
            true_groups: None,
        }
    }
}

/// Dense kept matrix plus bookkeeping shared by both construction paths.
struct KeptMatrix {
    user_keys: Vec<String>,
    item_keys: Vec<String>,
    matrix: Matrix,
    /// Per kept user: (internal item index, mean rating).
    ratings_by_user: Vec<Vec<(usize, f64)>>,
}

impl KeptMatrix {
    fn build(records: &[RatingRecord], spec: &RatingSpec) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyData("rating records"));
        }
        let mut user_counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut item_counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in records {
            *user_counts.entry(&r.user).or_insert(0) += 1;
            *item_counts.entry(&r.item).or_insert(0) += 1;
        }
        let user_keys = top_keys(&user_counts, spec.top_users);
        let item_keys = top_keys(&item_counts, spec.top_items);
        if spec.feature_dim > user_keys.len().min(item_keys.len()) {
            return Err(Error::InvalidConfig(
                "feature_dim exceeds the kept matrix rank bound".to_string(),
            ));
        }
        let user_index: BTreeMap<&str, usize> = user_keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.as_str(), i))
            .collect();
        let item_index: BTreeMap<&str, usize> = item_keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.as_str(), i))
            .collect();

        // Duplicate (user, item) pairs average their ratings.
        let mut sums: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
        for r in records {
            if let (Some(&u), Some(&i)) = (user_index.get(r.user.as_str()), item_index.get(r.item.as_str())) {
                let e = sums.entry((u, i)).or_insert((0.0, 0));
                e.0 += r.rating;
                e.1 += 1;
            }
        }
        let mut matrix = Matrix::zeros(user_keys.len(), item_keys.len());
        let mut ratings_by_user = alloc::vec![Vec::new(); user_keys.len()];
        for ((u, i), (sum, count)) in sums {
            let mean = sum / count as f64;
            matrix.set(u, i, mean);
            ratings_by_user[u].push((i, mean));
        }
        Ok(Self {
            user_keys,
            item_keys,
            matrix,
            ratings_by_user,
        })
    }
}

/// Keys ranked by count (descending), ties by key (ascending); top `n`.
fn top_keys(counts: &BTreeMap<&str, usize>, n: usize) -> Vec<String> {
    let mut entries: Vec<(&str, usize)> = counts.iter().map(|(k, v)| (*k, *v)).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    entries
        .into_iter()
        .take(n)
        .map(|(k, _)| k.to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(user: &str, item: &str, rating: f64) -> RatingRecord {
        RatingRecord {
            user: user.to_string(),
            item: item.to_string(),
            rating,
        }
    }

    /// Small corpus: 3 users, 6 items; rating < 2.0 is a positive.
    fn corpus() -> Vec<RatingRecord> {
        let mut out = Vec::new();
        for (u, positive) in [("u0", "i0"), ("u1", "i1"), ("u2", "i2")] {
            out.push(rec(u, positive, 1.0));
            for neg in ["i3", "i4", "i5"] {
                out.push(rec(u, neg, 4.0));
            }
        }
        out
    }

    fn spec(arms: usize, dim: usize) -> RatingSpec {
        RatingSpec {
            top_users: 10,
            top_items: 10,
            feature_dim: dim,
            reward_threshold: 2.0,
            arms,
            seed: 5,
        }
    }

    #[test]
    fn builds_pools_and_unit_features() {
        let (env, warnings) = RatingEnv::from_records(&corpus(), &spec(3, 2)).unwrap();
        assert!(warnings.is_empty(), "{warnings:?}");
        assert_eq!(env.num_users(), 3);
        for f in env.item_features() {
            let n = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-10, "norm {n}");
        }
    }

    #[test]
    fn rounds_pair_one_positive_with_zero_reward_items() {
        let (mut env, _) = RatingEnv::from_records(&corpus(), &spec(3, 2)).unwrap();
        for t in 1..=20 {
            let round = env.step(t);
            assert_eq!(round.arms.len(), 3);
            let positives: usize = round
                .feedback
                .expected
                .iter()
                .filter(|r| **r == 1.0)
                .count();
            assert_eq!(positives, 1);
            assert_eq!(round.feedback.best, 1.0);
            assert_eq!(round.feedback.expected, round.feedback.realized);
        }
    }

    #[test]
    fn ineligible_users_are_skipped_with_warnings() {
        let mut records = corpus();
        // u3 has no positive; u4 has a positive but only one negative.
        records.push(rec("u3", "i3", 5.0));
        records.push(rec("u3", "i4", 5.0));
        records.push(rec("u3", "i5", 5.0));
        records.push(rec("u4", "i0", 1.0));
        records.push(rec("u4", "i3", 5.0));
        let (env, warnings) = RatingEnv::from_records(&records, &spec(3, 2)).unwrap();
        assert_eq!(env.num_users(), 3);
        assert!(warnings
            .iter()
            .any(|w| matches!(w, IngestWarning::UserWithoutPositive(u) if u == "u3")));
        assert!(warnings
            .iter()
            .any(|w| matches!(w, IngestWarning::UserWithTooFewNegatives(u) if u == "u4")));
    }

    #[test]
    fn same_seed_replays_identical_stream() {
        let (mut a, _) = RatingEnv::from_records(&corpus(), &spec(3, 2)).unwrap();
        let (mut b, _) = RatingEnv::from_records(&corpus(), &spec(3, 2)).unwrap();
        assert_eq!(a.warm_start(), b.warm_start());
        for t in 1..=10 {
            let ra = a.step(t);
            let rb = b.step(t);
            assert_eq!(ra.arms.serving, rb.arms.serving);
            assert_eq!(ra.arms.arms(), rb.arms.arms());
            assert_eq!(ra.feedback.expected, rb.feedback.expected);
        }
    }

    #[test]
    fn top_selection_ranks_by_count_then_key() {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        counts.insert("b", 3);
        counts.insert("a", 3);
        counts.insert("c", 5);
        counts.insert("d", 1);
        assert_eq!(top_keys(&counts, 3), vec!["c", "a", "b"]);
    }

    #[test]
    fn features_bypass_skips_svd() {
        let mut features = BTreeMap::new();
        for (i, key) in ["i0", "i1", "i2", "i3", "i4", "i5"].iter().enumerate() {
            // Deliberately unnormalized; ingestion must normalize.
            features.insert(key.to_string(), vec![2.0 + i as f64, 1.0]);
        }
        let (env, warnings) =
            RatingEnv::from_records_with_features(&corpus(), &features, &spec(3, 2)).unwrap();
        assert!(warnings.is_empty());
        for f in env.item_features() {
            let n = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-10);
        }
        // The supplied direction survives normalization.
        let idx = env.item_keys().iter().position(|k| k == "i0").unwrap();
        let f = &env.item_features()[idx];
        assert!((f[0] / f[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_ratings_average() {
        let mut records = corpus();
        records.push(rec("u0", "i0", 3.0)); // with the existing 1.0 -> mean 2.0, no longer positive
        let (env, warnings) = RatingEnv::from_records(&records, &spec(3, 2)).unwrap();
        // u0 lost its only positive and is skipped.
        assert_eq!(env.num_users(), 2);
        assert!(warnings
            .iter()
            .any(|w| matches!(w, IngestWarning::UserWithoutPositive(u) if u == "u0")));
    }
}
