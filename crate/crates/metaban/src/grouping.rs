//! Relative-group inference.
//!
//! For a given arm, the serving user's estimated group is every user whose
//! predicted reward sits within `(nu - 1)/nu * gamma` of the serving user's
//! own prediction. `gamma` is the assumed reward gap between groups; `nu > 1`
//! widens or narrows the net: larger `nu` admits more candidates (more
//! collaboration, more false positives early on).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::ToString;

use crate::{Error, Result, UserId};

/// Threshold parameters for group inference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupConfig {
    nu: f64,
    gamma: f64,
}

impl GroupConfig {
    /// Requires `nu > 1` and `0 <= gamma < 1`.
    pub fn new(nu: f64, gamma: f64) -> Result<Self> {
        if !(nu > 1.0) {
            return Err(Error::InvalidConfig("group parameter nu must be > 1".to_string()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidConfig("gamma must lie in [0, 1)".to_string()));
        }
        Ok(Self { nu, gamma })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Prediction-difference cutoff `(nu - 1)/nu * gamma`, in `[0, gamma)`.
    pub fn threshold(&self) -> f64 {
        (self.nu - 1.0) / self.nu * self.gamma
    }
}

/// An inferred group for one (round, arm) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    pub serving: UserId,
    pub arm_index: usize,
    pub members: BTreeSet<UserId>,
}

impl GroupAssignment {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Exact-match flag and Jaccard similarity of an inferred group against the
/// ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupAccuracy {
    pub exact: bool,
    pub jaccard: f64,
}

/// Infer the serving user's group w.r.t. one arm from per-user reward
/// predictions on that arm. Ties at exactly the threshold are included.
pub fn infer_group(
    predictions: &BTreeMap<UserId, f64>,
    serving: UserId,
    arm_index: usize,
    cfg: &GroupConfig,
) -> Result<GroupAssignment> {
    let center = *predictions
        .get(&serving)
        .ok_or(Error::MissingUser(serving, "predictions"))?;
    let tau = cfg.threshold();
    let members = predictions
        .iter()
        .filter(|(_, p)| (**p - center).abs() <= tau)
        .map(|(u, _)| *u)
        .collect();
    Ok(GroupAssignment {
        serving,
        arm_index,
        members,
    })
}

/// Compare an inferred member set against the true relative group.
pub fn group_accuracy(inferred: &GroupAssignment, truth: &BTreeSet<UserId>) -> GroupAccuracy {
    let exact = inferred.members == *truth;
    let intersection = inferred.members.intersection(truth).count();
    let union = inferred.members.union(truth).count();
    let jaccard = if union == 0 {
        1.0
    } else {
        intersection as f64 / union as f64
    };
    GroupAccuracy { exact, jaccard }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn preds(pairs: &[(usize, f64)]) -> BTreeMap<UserId, f64> {
        pairs.iter().map(|(u, p)| (UserId(*u), *p)).collect()
    }

    fn users(ids: &[usize]) -> BTreeSet<UserId> {
        ids.iter().map(|u| UserId(*u)).collect()
    }

    #[test]
    fn config_validates_ranges() {
        assert!(GroupConfig::new(1.0, 0.4).is_err());
        assert!(GroupConfig::new(5.0, 1.0).is_err());
        assert!(GroupConfig::new(5.0, -0.1).is_err());
        let cfg = GroupConfig::new(5.0, 0.4).unwrap();
        assert!((cfg.threshold() - 0.32).abs() < 1e-15);
    }

    #[test]
    fn serving_user_is_always_a_member() {
        let cfg = GroupConfig::new(1.5, 0.0).unwrap();
        let p = preds(&[(0, 0.3), (1, 0.9)]);
        let g = infer_group(&p, UserId(0), 0, &cfg).unwrap();
        assert!(g.members.contains(&UserId(0)));
    }

    #[test]
    fn threshold_example() {
        // nu=5, gamma=0.4 -> tau=0.32; 0.8 within, 0.83 outside.
        let cfg = GroupConfig::new(5.0, 0.4).unwrap();
        let p = preds(&[(0, 0.5), (1, 0.8), (2, 0.83)]);
        let g = infer_group(&p, UserId(0), 3, &cfg).unwrap();
        assert_eq!(g.members, users(&[0, 1]));
        assert_eq!(g.arm_index, 3);
    }

    #[test]
    fn boundary_ties_are_included() {
        let cfg = GroupConfig::new(2.0, 0.5).unwrap(); // tau = 0.25
        let p = preds(&[(0, 0.0), (1, 0.25)]);
        let g = infer_group(&p, UserId(0), 0, &cfg).unwrap();
        assert_eq!(g.members, users(&[0, 1]));
    }

    #[test]
    fn missing_serving_user_is_an_error() {
        let cfg = GroupConfig::new(5.0, 0.4).unwrap();
        let p = preds(&[(1, 0.8)]);
        assert!(matches!(
            infer_group(&p, UserId(0), 0, &cfg),
            Err(Error::MissingUser(UserId(0), _))
        ));
    }

    #[test]
    fn accuracy_examples() {
        let g = GroupAssignment {
            serving: UserId(0),
            arm_index: 0,
            members: users(&[0, 1]),
        };
        let acc = group_accuracy(&g, &users(&[0, 1]));
        assert!(acc.exact);
        assert_eq!(acc.jaccard, 1.0);
        // {a, b} vs {a, c}: Jaccard 1/3.
        let acc = group_accuracy(&g, &users(&[0, 2]));
        assert!(!acc.exact);
        assert!((acc.jaccard - 1.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn matches_bruteforce_pairwise_check(
            values in proptest::collection::vec(0.0f64..1.0, 2..50),
            nu in 1.01f64..10.0,
            gamma in 0.0f64..0.99,
            serving_pick in any::<prop::sample::Index>(),
        ) {
            let cfg = GroupConfig::new(nu, gamma).unwrap();
            let p: BTreeMap<UserId, f64> = values
                .iter()
                .enumerate()
                .map(|(i, v)| (UserId(i), *v))
                .collect();
            let serving = UserId(serving_pick.index(values.len()));
            let g = infer_group(&p, serving, 0, &cfg).unwrap();
            let tau = (nu - 1.0) / nu * gamma;
            let brute: BTreeSet<UserId> = values
                .iter()
                .enumerate()
                .filter(|(_, v)| (**v - values[serving.0]).abs() <= tau)
                .map(|(i, _)| UserId(i))
                .collect();
            prop_assert_eq!(g.members, brute);
        }

        #[test]
        fn member_set_grows_with_nu(
            values in proptest::collection::vec(0.0f64..1.0, 2..30),
            nu_low in 1.01f64..5.0,
            extra in 0.01f64..5.0,
            gamma in 0.0f64..0.99,
        ) {
            let serving = UserId(0);
            let p: BTreeMap<UserId, f64> = values
                .iter()
                .enumerate()
                .map(|(i, v)| (UserId(i), *v))
                .collect();
            let small = infer_group(&p, serving, 0, &GroupConfig::new(nu_low, gamma).unwrap()).unwrap();
            let big = infer_group(&p, serving, 0, &GroupConfig::new(nu_low + extra, gamma).unwrap()).unwrap();
            prop_assert!(small.members.is_subset(&big.members));
        }

        #[test]
        fn shift_invariance(
            values in proptest::collection::vec(0.0f64..1.0, 2..30),
            shift in -5.0f64..5.0,
            nu in 1.01f64..10.0,
            gamma in 0.0f64..0.99,
        ) {
            let cfg = GroupConfig::new(nu, gamma).unwrap();
            let base: BTreeMap<UserId, f64> = values
                .iter()
                .enumerate()
                .map(|(i, v)| (UserId(i), *v))
                .collect();
            let shifted: BTreeMap<UserId, f64> = values
                .iter()
                .enumerate()
                .map(|(i, v)| (UserId(i), *v + shift))
                .collect();
            let a = infer_group(&base, UserId(0), 0, &cfg).unwrap();
            let b = infer_group(&shifted, UserId(0), 0, &cfg).unwrap();
            prop_assert_eq!(a.members, b.members);
        }

        #[test]
        fn zero_gamma_keeps_exact_matches_only(
            values in proptest::collection::vec(-1.0f64..1.0, 2..20),
            nu in 1.01f64..10.0,
        ) {
            let cfg = GroupConfig::new(nu, 0.0).unwrap();
            let mut vals: Vec<f64> = values.clone();
            vals[1] = vals[0]; // guarantee at least one exact duplicate
            let p: BTreeMap<UserId, f64> = vals
                .iter()
                .enumerate()
                .map(|(i, v)| (UserId(i), *v))
                .collect();
            let g = infer_group(&p, UserId(0), 0, &cfg).unwrap();
            let expect: BTreeSet<UserId> = vals
                .iter()
                .enumerate()
                .filter(|(_, v)| **v == vals[0])
                .map(|(i, _)| UserId(i))
                .collect();
            prop_assert_eq!(g.members, expect);
        }
    }
}
