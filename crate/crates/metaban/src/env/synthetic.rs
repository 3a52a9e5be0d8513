//! Group-structured synthetic worlds with a certified reward gap.
//!
//! Users are statically split into `q` latent groups, each owning a unit
//! parameter vector `w_g`. An arm's expected reward for a user is a bounded
//! function of the inner product with that user's group vector. Per arm the
//! latent groups are tied into *cells*: groups in the same cell receive
//! exactly equal expected reward on that arm (the arm's relative groups),
//! and rewards of different cells are separated by at least the configured
//! gap. Cell structure is redrawn per arm, so relative groups change from
//! arm to arm while the gap certificate always holds.
//!
//! Arms are built constructively rather than by naked rejection: cell target
//! values are drawn with the required pairwise separation, translated into
//! per-group target inner products, and solved as a least-norm linear system
//! over the group vectors; leftover norm is padded in the orthogonal
//! complement. Infeasible draws (targets demanding more than unit norm) are
//! rejected and redrawn.

use alloc::collections::BTreeSet;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ArmSet, Environment, Feedback, Round, WarmStartData};
use crate::{Error, Result, UserId};

/// Slack kept between `(cells - 1) * gap` and the unit reward range so that
/// separated cell values retain sampling mass.
const CELL_SLACK: f64 = 0.05;
/// Exact-tie tolerance within a cell (floating error of the construction).
pub const CELL_TIE_TOLERANCE: f64 = 1e-9;

const PARTITION_ATTEMPTS: usize = 32;
const TARGET_ATTEMPTS: usize = 48;

/// Bounded reward families over the inner product `u = <x, w_g>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardFamily {
    /// `h = (u + 1) / 2`
    Linear,
    /// `h = u^2`
    Quadratic,
    /// `h = (cos(3u) + 1) / 2`
    Cosine,
}

impl RewardFamily {
    /// Expected reward for inner product `u in [-1, 1]`; always in `[0, 1]`.
    pub fn value(&self, u: f64) -> f64 {
        match self {
            RewardFamily::Linear => (u + 1.0) / 2.0,
            RewardFamily::Quadratic => u * u,
            RewardFamily::Cosine => ((3.0 * u).cos() + 1.0) / 2.0,
        }
    }

    /// Smallest representable value; targets below it have no preimage with
    /// `|u| <= 1`.
    fn min_value(&self) -> f64 {
        match self {
            RewardFamily::Linear | RewardFamily::Quadratic => 0.0,
            // cos(3) is the floor of cos(3u) over |u| <= 1.
            RewardFamily::Cosine => ((3.0f64).cos() + 1.0) / 2.0 + 1e-6,
        }
    }

    /// An inner product achieving value `v`, with a coin flip over the
    /// symmetric preimages where they exist.
    fn inner_product_for<R: Rng>(&self, v: f64, rng: &mut R) -> f64 {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        match self {
            RewardFamily::Linear => 2.0 * v - 1.0,
            RewardFamily::Quadratic => sign * v.sqrt(),
            RewardFamily::Cosine => sign * (2.0 * v - 1.0).clamp(-1.0, 1.0).acos() / 3.0,
        }
    }
}

/// Parameters of a synthetic world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    /// Number of users `n`.
    pub users: usize,
    /// Number of latent groups `q`; users are assigned round-robin.
    pub groups: usize,
    pub family: RewardFamily,
    /// Reward noise standard deviation; realized rewards are clamped to
    /// `[0, 1]` after adding the noise.
    pub noise: f64,
    /// Certified minimum expected-reward gap between distinct relative
    /// groups of every emitted arm, in `[0, 1)`.
    pub gap: f64,
    /// Arm dimension `d`; must exceed `groups` when `gap > 0` so the target
    /// system leaves room for unit-norm padding.
    pub dim: usize,
    /// Arms per round `k`.
    pub arms: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.groups == 0 || self.dim == 0 || self.arms == 0 {
            return Err(Error::InvalidConfig(
                "synthetic spec needs users, groups, dim, arms >= 1".to_string(),
            ));
        }
        if self.groups > self.users {
            return Err(Error::InvalidConfig(
                "cannot have more groups than users".to_string(),
            ));
        }
        if !(0.0..1.0).contains(&self.gap) {
            return Err(Error::InvalidConfig("gap must lie in [0, 1)".to_string()));
        }
        if self.gap > 0.0 && self.dim <= self.groups {
            return Err(Error::InvalidConfig(
                "gap-certified arms need dim > groups".to_string(),
            ));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::InvalidConfig("noise must be >= 0".to_string()));
        }
        Ok(())
    }

    /// Relative groups per arm: as many cells as the unit reward range can
    /// hold at the configured gap (with slack), capped at `groups`.
    pub fn cells_per_arm(&self) -> usize {
        if self.gap <= 0.0 {
            return self.groups;
        }
        let fit = ((1.0 - CELL_SLACK) / self.gap).floor() as usize + 1;
        fit.clamp(1, self.groups)
    }
}

/// One certified arm: the vector, the cell index of every latent group, and
/// the per-group expected rewards.
#[derive(Debug, Clone)]
struct CertifiedArm {
    x: Vec<f64>,
    cell_of_group: Vec<usize>,
    group_values: Vec<f64>,
}

/// Synthetic environment instance. Owns its RNG; a fresh instance with the
/// same spec replays the identical stream.
#[derive(Debug, Clone)]
pub struct SyntheticEnv {
    spec: SyntheticSpec,
    cells: usize,
    /// Latent group vectors, unit rows.
    w: Vec<Vec<f64>>,
    /// Orthonormalized group vectors (modified Gram-Schmidt of `w`).
    basis: Vec<Vec<f64>>,
    /// Lower-triangular coefficients: `w[g] = sum_{i<=g} coeff[g][i] basis[i]`.
    coeff: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
}

impl SyntheticEnv {
    pub fn new(spec: SyntheticSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let w = sample_group_vectors(spec.groups, spec.dim, &mut rng);
        let (basis, coeff) = gram_schmidt(&w).ok_or_else(|| {
            Error::InvalidConfig("degenerate group vectors; raise dim".to_string())
        })?;
        Ok(Self {
            cells: spec.cells_per_arm(),
            spec,
            w,
            basis,
            coeff,
            rng,
        })
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }

    /// Latent group of a user (static round-robin assignment).
    pub fn latent_group(&self, user: UserId) -> usize {
        user.0 % self.spec.groups
    }

    /// Noise-free expected reward of `x` for a user.
    pub fn expected_reward(&self, user: UserId, x: &[f64]) -> f64 {
        let g = self.latent_group(user);
        self.spec.family.value(dot(x, &self.w[g]))
    }

    fn users_in_group(&self, g: usize) -> Vec<UserId> {
        (0..self.spec.users)
            .filter(|u| u % self.spec.groups == g)
            .map(UserId)
            .collect()
    }

    /// Members of the serving user's relative group for one certified arm.
    fn relative_group(&self, serving: UserId, arm: &CertifiedArm) -> BTreeSet<UserId> {
        let cell = arm.cell_of_group[self.latent_group(serving)];
        (0..self.spec.users)
            .map(UserId)
            .filter(|u| arm.cell_of_group[self.latent_group(*u)] == cell)
            .collect()
    }

    fn realize(&mut self, h: f64) -> f64 {
        if self.spec.noise == 0.0 {
            return h;
        }
        let zeta: f64 = StandardNormal.sample(&mut self.rng);
        (h + self.spec.noise * zeta).clamp(0.0, 1.0)
    }

    /// Draw one arm with certified cell structure. Panics only if the spec
    /// is so over-constrained that thousands of redraws cannot satisfy it;
    /// `validate` screens out such configurations up front.
    fn sample_certified_arm(&mut self) -> CertifiedArm {
        let q = self.spec.groups;
        if self.spec.gap <= 0.0 {
            // No separation demanded: a plain uniform unit arm, each group
            // its own cell (values are almost surely distinct).
            let x = random_unit_vector(self.spec.dim, &mut self.rng);
            let group_values: Vec<f64> = (0..q)
                .map(|g| self.spec.family.value(dot(&x, &self.w[g])))
                .collect();
            return CertifiedArm {
                x,
                cell_of_group: (0..q).collect(),
                group_values,
            };
        }
        // The range cap is necessary but not sufficient: the per-group
        // target inner products must also fit inside the unit ball, which
        // depends on the family and the drawn partition. Fall back to fewer
        // cells whenever a level keeps rejecting.
        for cells in (1..=self.cells).rev() {
            for _ in 0..PARTITION_ATTEMPTS {
                let cell_of_group = sample_partition(q, cells, &mut self.rng);
                for _ in 0..TARGET_ATTEMPTS {
                    if let Some(arm) = self.try_targets(&cell_of_group) {
                        return arm;
                    }
                }
            }
        }
        panic!(
            "failed to synthesize a gap-certified arm for spec {:?}; \
             the (groups, gap, family) combination is over-constrained",
            self.spec
        );
    }

    fn try_targets(&mut self, cell_of_group: &[usize]) -> Option<CertifiedArm> {
        let q = self.spec.groups;
        let d = self.spec.dim;
        let family = self.spec.family;
        let lo = family.min_value();
        let cells = cell_of_group.iter().max().copied().unwrap_or(0) + 1;

        // Cell values with pairwise separation >= gap.
        let mut values = vec![0.0; cells];
        for v in values.iter_mut() {
            *v = self.rng.random_range(lo..=1.0);
        }
        for i in 0..cells {
            for j in 0..i {
                if (values[i] - values[j]).abs() < self.spec.gap {
                    return None;
                }
            }
        }

        // Per-group target inner products (independent branch choices keep
        // the geometry varied while the cell values stay exactly tied).
        let targets: Vec<f64> = (0..q)
            .map(|g| family.inner_product_for(values[cell_of_group[g]], &mut self.rng))
            .collect();

        // Least-norm x0 with <x0, w_g> = targets[g] via the stored
        // triangular factorization.
        let mut beta = vec![0.0; q];
        for g in 0..q {
            let mut rhs = targets[g];
            for i in 0..g {
                rhs -= self.coeff[g][i] * beta[i];
            }
            beta[g] = rhs / self.coeff[g][g];
        }
        let norm_sq: f64 = beta.iter().map(|b| b * b).sum();
        if norm_sq > 1.0 - 1e-12 {
            return None;
        }

        let mut x = vec![0.0; d];
        for (b, q_i) in beta.iter().zip(self.basis.iter()) {
            for (xv, qv) in x.iter_mut().zip(q_i.iter()) {
                *xv += b * qv;
            }
        }
        // Pad to unit norm in the orthogonal complement of the group span.
        let pad_norm = (1.0 - norm_sq).max(0.0).sqrt();
        if pad_norm > 0.0 {
            let z = self.complement_direction()?;
            for (xv, zv) in x.iter_mut().zip(z.iter()) {
                *xv += pad_norm * zv;
            }
        }
        let n = dot(&x, &x).sqrt();
        if n == 0.0 {
            return None;
        }
        for xv in x.iter_mut() {
            *xv /= n;
        }

        // Certify before emitting.
        let group_values: Vec<f64> = (0..q)
            .map(|g| family.value(dot(&x, &self.w[g])))
            .collect();
        for a in 0..q {
            for b in 0..a {
                let diff = (group_values[a] - group_values[b]).abs();
                if cell_of_group[a] == cell_of_group[b] {
                    if diff > CELL_TIE_TOLERANCE {
                        return None;
                    }
                } else if diff < self.spec.gap - CELL_TIE_TOLERANCE {
                    return None;
                }
            }
        }
        Some(CertifiedArm {
            x,
            cell_of_group: cell_of_group.to_vec(),
            group_values,
        })
    }

    /// Random unit vector orthogonal to every group vector.
    fn complement_direction(&mut self) -> Option<Vec<f64>> {
        for _ in 0..16 {
            let mut z = random_unit_vector(self.spec.dim, &mut self.rng);
            for q_i in &self.basis {
                let proj = dot(&z, q_i);
                for (zv, qv) in z.iter_mut().zip(q_i.iter()) {
                    *zv -= proj * qv;
                }
            }
            let n = dot(&z, &z).sqrt();
            if n > 1e-9 {
                for zv in z.iter_mut() {
                    *zv /= n;
                }
                return Some(z);
            }
        }
        None
    }
}

impl Environment for SyntheticEnv {
    fn num_users(&self) -> usize {
        self.spec.users
    }

    fn arm_dim(&self) -> usize {
        self.spec.dim
    }

    fn arms_per_round(&self) -> usize {
        self.spec.arms
    }

    fn warm_start(&mut self) -> WarmStartData {
        (0..self.spec.users)
            .map(|u| {
                let arm = self.sample_certified_arm();
                let h = arm.group_values[self.latent_group(UserId(u))];
                let r = self.realize(h);
                (UserId(u), arm.x, r)
            })
            .collect()
    }

    fn step(&mut self, t: u64) -> Round {
        let g = self.rng.random_range(0..self.spec.groups);
        let members = self.users_in_group(g);
        let serving = members[self.rng.random_range(0..members.len())];
        let latent = self.latent_group(serving);

        let k = self.spec.arms;
        let mut arms = Vec::with_capacity(k);
        let mut expected = Vec::with_capacity(k);
        let mut realized = Vec::with_capacity(k);
        let mut groups = Vec::with_capacity(k);
        for _ in 0..k {
            let arm = self.sample_certified_arm();
            let h = arm.group_values[latent];
            expected.push(h);
            realized.push(self.realize(h));
            groups.push(self.relative_group(serving, &arm));
            arms.push(arm.x);
        }
        let arms = ArmSet::new(t, serving, arms).expect("constructed arms are unit norm");
        Round {
            arms,
            feedback: Feedback::new(expected, realized),
            true_groups: Some(groups),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn random_unit_vector<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        let n = dot(&v, &v).sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Unit group vectors with pairwise |cos angle| <= 0.5 (rejection, capped).
fn sample_group_vectors<R: Rng>(q: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(q);
    while out.len() < q {
        let mut accepted = None;
        for _ in 0..256 {
            let cand = random_unit_vector(dim, rng);
            if out.iter().all(|w| dot(w, &cand).abs() <= 0.5) {
                accepted = Some(cand);
                break;
            }
        }
        match accepted {
            Some(v) => out.push(v),
            // Tight geometry (q close to dim): keep the best effort rather
            // than spinning forever; Gram-Schmidt still guards degeneracy.
            None => out.push(random_unit_vector(dim, rng)),
        }
    }
    out
}

/// Modified Gram-Schmidt. Returns `None` when the rows are numerically
/// dependent (pivot below 1e-9).
#[allow(clippy::type_complexity)]
fn gram_schmidt(rows: &[Vec<f64>]) -> Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    let mut coeff: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for row in rows {
        let mut v = row.clone();
        let mut cs = Vec::with_capacity(basis.len() + 1);
        for b in &basis {
            let c = dot(&v, b);
            cs.push(c);
            for (vv, bv) in v.iter_mut().zip(b.iter()) {
                *vv -= c * bv;
            }
        }
        let n = dot(&v, &v).sqrt();
        if n < 1e-9 {
            return None;
        }
        for vv in v.iter_mut() {
            *vv /= n;
        }
        cs.push(n);
        basis.push(v);
        coeff.push(cs);
    }
    Some((basis, coeff))
}

/// Random assignment of `q` groups to exactly `cells` nonempty cells.
fn sample_partition<R: Rng>(q: usize, cells: usize, rng: &mut R) -> Vec<usize> {
    debug_assert!(cells >= 1 && cells <= q);
    if cells == q {
        return (0..q).collect();
    }
    if cells == 1 {
        return vec![0; q];
    }
    loop {
        let assign: Vec<usize> = (0..q).map(|_| rng.random_range(0..cells)).collect();
        let mut seen = vec![false; cells];
        for &c in &assign {
            seen[c] = true;
        }
        if seen.iter().all(|s| *s) {
            return assign;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(users: usize, groups: usize, family: RewardFamily, gap: f64) -> SyntheticSpec {
        SyntheticSpec {
            users,
            groups,
            family,
            noise: 0.0,
            gap,
            dim: 10,
            arms: 4,
            seed: 42,
        }
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let mut s = spec(10, 2, RewardFamily::Linear, 0.5);
        s.groups = 11;
        assert!(s.validate().is_err());
        let mut s = spec(10, 2, RewardFamily::Linear, 0.5);
        s.gap = 1.0;
        assert!(s.validate().is_err());
        let mut s = spec(10, 2, RewardFamily::Linear, 0.5);
        s.dim = 2;
        assert!(s.validate().is_err());
        assert!(spec(10, 2, RewardFamily::Linear, 0.5).validate().is_ok());
    }

    #[test]
    fn cells_respect_unit_reward_range() {
        assert_eq!(spec(20, 4, RewardFamily::Quadratic, 0.5).cells_per_arm(), 2);
        assert_eq!(spec(20, 2, RewardFamily::Linear, 0.5).cells_per_arm(), 2);
        assert_eq!(spec(20, 4, RewardFamily::Linear, 0.2).cells_per_arm(), 4);
        assert_eq!(spec(20, 4, RewardFamily::Linear, 0.0).cells_per_arm(), 4);
    }

    #[test]
    fn noiseless_linear_reward_is_affine_inner_product() {
        let mut env = SyntheticEnv::new(spec(8, 2, RewardFamily::Linear, 0.3)).unwrap();
        let round = env.step(1);
        for (i, arm) in round.arms.arms().iter().enumerate() {
            let g = env.latent_group(round.arms.serving);
            let direct = (dot(arm, &env.w[g]) + 1.0) / 2.0;
            assert_eq!(round.feedback.realized[i], round.feedback.expected[i]);
            assert!((round.feedback.expected[i] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_replays_identical_stream() {
        let s = spec(12, 3, RewardFamily::Quadratic, 0.4);
        let mut a = SyntheticEnv::new(s).unwrap();
        let mut b = SyntheticEnv::new(s).unwrap();
        assert_eq!(a.warm_start(), b.warm_start());
        for t in 1..=5 {
            let ra = a.step(t);
            let rb = b.step(t);
            assert_eq!(ra.arms.serving, rb.arms.serving);
            assert_eq!(ra.arms.arms(), rb.arms.arms());
            assert_eq!(ra.feedback.realized, rb.feedback.realized);
        }
    }

    #[test]
    fn two_group_world_has_full_gap_on_every_arm() {
        let mut env = SyntheticEnv::new(spec(10, 2, RewardFamily::Linear, 0.5)).unwrap();
        let mut min_gap = f64::INFINITY;
        for _ in 0..250 {
            let arm = env.sample_certified_arm();
            min_gap = min_gap.min((arm.group_values[0] - arm.group_values[1]).abs());
        }
        assert!(min_gap >= 0.5 - 1e-9, "min gap {min_gap}");
    }

    #[test]
    fn four_group_quadratic_arms_are_certified() {
        let mut env = SyntheticEnv::new(spec(20, 4, RewardFamily::Quadratic, 0.5)).unwrap();
        for _ in 0..200 {
            let arm = env.sample_certified_arm();
            let norm = dot(&arm.x, &arm.x).sqrt();
            assert!((norm - 1.0).abs() <= 1e-10);
            for a in 0..4 {
                assert!((0.0..=1.0).contains(&arm.group_values[a]));
                for b in 0..a {
                    let diff = (arm.group_values[a] - arm.group_values[b]).abs();
                    if arm.cell_of_group[a] == arm.cell_of_group[b] {
                        assert!(diff <= CELL_TIE_TOLERANCE, "tie broken: {diff}");
                    } else {
                        assert!(diff >= 0.5 - 1e-9, "gap violated: {diff}");
                    }
                }
            }
        }
    }

    #[test]
    fn cosine_family_arms_are_certified() {
        let mut env = SyntheticEnv::new(spec(9, 3, RewardFamily::Cosine, 0.4)).unwrap();
        for _ in 0..100 {
            let arm = env.sample_certified_arm();
            for a in 0..3 {
                for b in 0..a {
                    let diff = (arm.group_values[a] - arm.group_values[b]).abs();
                    if arm.cell_of_group[a] == arm.cell_of_group[b] {
                        assert!(diff <= CELL_TIE_TOLERANCE);
                    } else {
                        assert!(diff >= 0.4 - 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn serving_user_belongs_to_reported_group() {
        let mut env = SyntheticEnv::new(spec(20, 4, RewardFamily::Quadratic, 0.5)).unwrap();
        for t in 1..=20 {
            let round = env.step(t);
            let groups = round.true_groups.as_ref().unwrap();
            assert_eq!(groups.len(), round.arms.len());
            for g in groups {
                assert!(g.contains(&round.arms.serving));
                assert!(!g.is_empty());
            }
        }
    }

    #[test]
    fn warm_start_covers_every_user_with_bounded_rewards() {
        let mut s = spec(13, 4, RewardFamily::Cosine, 0.3);
        s.noise = 0.2;
        let mut env = SyntheticEnv::new(s).unwrap();
        let data = env.warm_start();
        assert_eq!(data.len(), 13);
        for (i, (u, x, r)) in data.iter().enumerate() {
            assert_eq!(u.0, i);
            assert!((dot(x, x).sqrt() - 1.0).abs() < 1e-10);
            assert!((0.0..=1.0).contains(r));
        }
    }

    #[test]
    fn noisy_rewards_stay_in_unit_interval() {
        let mut s = spec(6, 2, RewardFamily::Linear, 0.5);
        s.noise = 0.5;
        let mut env = SyntheticEnv::new(s).unwrap();
        for t in 1..=50 {
            let round = env.step(t);
            for r in &round.feedback.realized {
                assert!((0.0..=1.0).contains(r));
            }
        }
    }
}
