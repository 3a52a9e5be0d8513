//! Baseline policies: neural UCB (shared or per-user networks) and the
//! classic disjoint linear UCB.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{argmax_lowest, take_pending, ArmScore, Decision, PendingRound, Policy};
use crate::env::{ArmSet, WarmStartData};
use crate::learners::Observation;
use crate::net::{NetScratch, NetworkConfig, NetworkParams};
use crate::{Error, Result, UserId};

/// Whether one network serves everyone or each user gets their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeuVariant {
    /// One network and one design matrix over all users' pooled data.
    One,
    /// A network and design matrix per user, trained on that user's data.
    Individual,
}

/// Configuration of the neural UCB baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuUcbConfig {
    pub net: NetworkConfig,
    /// Exploration scale alpha.
    pub exploration_scale: f64,
    /// Ridge initialization lambda of the diagonal design matrix.
    pub ridge: f64,
    /// Gradient steps per `learn`.
    pub train_steps: usize,
    /// Step size of those gradient steps.
    pub step_size: f64,
    /// Minibatch size cap per step; the full pool is used when smaller.
    pub batch_cap: usize,
    pub seed: u64,
}

impl NeuUcbConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.exploration_scale >= 0.0)
            || !(self.ridge > 0.0)
            || self.train_steps == 0
            || !(self.step_size >= 0.0)
            || self.batch_cap == 0
        {
            return Err(Error::InvalidConfig(
                "neural ucb needs alpha >= 0, ridge > 0, steps >= 1, batch cap >= 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Neural UCB with a diagonal approximation of the design matrix:
/// `A = lambda * 1 + sum over chosen arms of g^2` (elementwise), scoring
/// `f(x) + alpha * sqrt(sum_i g_i^2 / A_i)`. The full `p x p` matrix is
/// quadratic in the parameter count and unnecessary at this scale.
pub struct NeuUcb {
    variant: NeuVariant,
    cfg: NeuUcbConfig,
    /// One entry for `One`, one per user for `Individual`.
    nets: Vec<NetworkParams>,
    designs: Vec<Vec<f64>>,
    pools: Vec<Vec<Observation>>,
    rng: ChaCha8Rng,
    scratch: NetScratch,
    grad_buf: Vec<f64>,
    pending: Option<(PendingRound, Vec<f64>)>,
    warmed: bool,
}

impl NeuUcb {
    pub fn new(variant: NeuVariant, cfg: NeuUcbConfig, num_users: usize) -> Result<Self> {
        cfg.validate()?;
        if num_users == 0 {
            return Err(Error::EmptyData("user set"));
        }
        let models = match variant {
            NeuVariant::One => 1,
            NeuVariant::Individual => num_users,
        };
        let p = cfg.net.param_count();
        let init = NetworkParams::init(cfg.net);
        Ok(Self {
            variant,
            nets: vec![init; models],
            designs: vec![vec![cfg.ridge; p]; models],
            pools: vec![Vec::new(); models],
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            scratch: NetScratch::new(&cfg.net),
            grad_buf: vec![0.0; p],
            cfg,
            pending: None,
            warmed: false,
        })
    }

    fn model_of(&self, user: UserId) -> Result<usize> {
        match self.variant {
            NeuVariant::One => Ok(0),
            NeuVariant::Individual => {
                if user.0 < self.nets.len() {
                    Ok(user.0)
                } else {
                    Err(Error::MissingUser(user, "per-user networks"))
                }
            }
        }
    }

    /// `alpha * sqrt(sum_i g_i^2 / A_i)` for a gradient over a diagonal
    /// design matrix.
    fn bonus(&self, grad: &[f64], design: &[f64]) -> f64 {
        let mut s = 0.0;
        for (g, a) in grad.iter().zip(design.iter()) {
            s += g * g / a;
        }
        self.cfg.exploration_scale * s.sqrt()
    }

    fn train(&mut self, model: usize) -> Result<()> {
        let pool_len = self.pools[model].len();
        if pool_len == 0 {
            return Ok(());
        }
        let p = self.cfg.net.param_count();
        let mut grad = vec![0.0; p];
        for _ in 0..self.cfg.train_steps {
            let amount = self.cfg.batch_cap.min(pool_len);
            let mut batch = rand::seq::index::sample(&mut self.rng, pool_len, amount).into_vec();
            batch.sort_unstable();
            grad.fill(0.0);
            let net = &self.nets[model];
            for i in batch {
                let obs = &self.pools[model][i];
                let f = net.forward_with(&obs.x, &mut self.scratch)?;
                net.backward_from_forward(&obs.x, f - obs.reward, &mut self.scratch, &mut grad)?;
            }
            self.nets[model].axpy(-self.cfg.step_size, &grad)?;
        }
        Ok(())
    }
}

impl Policy for NeuUcb {
    fn name(&self) -> &str {
        match self.variant {
            NeuVariant::One => "neuucb-one",
            NeuVariant::Individual => "neuucb-ind",
        }
    }

    fn warm_start(&mut self, data: &WarmStartData) -> Result<()> {
        for (user, x, reward) in data {
            let model = self.model_of(*user)?;
            self.pools[model].push(Observation::new(x.clone(), *reward));
        }
        let models = self.nets.len();
        for model in 0..models {
            self.train(model)?;
        }
        self.warmed = true;
        Ok(())
    }

    fn choose(&mut self, arms: &ArmSet) -> Result<Decision> {
        if !self.warmed {
            return Err(Error::EmptyData("warm start has not run"));
        }
        let model = self.model_of(arms.serving)?;
        let mut scores = Vec::with_capacity(arms.len());
        let mut grads: Vec<Vec<f64>> = Vec::with_capacity(arms.len());
        for x in arms.arms() {
            let net = &self.nets[model];
            let exploit = net.forward_with(x, &mut self.scratch)?;
            self.grad_buf.fill(0.0);
            net.accumulate_gradient(x, 1.0, &mut self.scratch, &mut self.grad_buf)?;
            let bonus = self.bonus(&self.grad_buf, &self.designs[model]);
            scores.push(ArmScore {
                exploit,
                bonus,
                total: exploit + bonus,
            });
            grads.push(self.grad_buf.clone());
        }
        let chosen = argmax_lowest(scores.iter().map(|s| s.total));
        self.pending = Some((
            PendingRound {
                serving: arms.serving,
                chosen,
                x: arms.arm(chosen).to_vec(),
            },
            grads.swap_remove(chosen),
        ));
        Ok(Decision {
            chosen,
            scores,
            groups: Vec::new(),
            adapted_params: None,
        })
    }

    fn learn(&mut self, serving: UserId, chosen: usize, reward: f64) -> Result<()> {
        let (pending, grad) = match self.pending.take() {
            Some(p) => p,
            None => return Err(Error::NoPendingDecision),
        };
        let mut slot = Some(pending);
        let pending = take_pending(&mut slot, serving, chosen)?;
        let model = self.model_of(serving)?;
        // Accumulate the chosen arm's squared gradient into the design.
        for (a, g) in self.designs[model].iter_mut().zip(grad.iter()) {
            *a += g * g;
        }
        self.pools[model].push(Observation::new(pending.x, reward));
        self.train(model)
    }
}

/// Configuration of the per-user linear UCB baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinUcbConfig {
    pub dim: usize,
    /// Ridge regularization lambda (> 0).
    pub ridge: f64,
    /// Exploration scale alpha (>= 0).
    pub exploration_scale: f64,
}

impl LinUcbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || !(self.ridge > 0.0) || !(self.exploration_scale >= 0.0) {
            return Err(Error::InvalidConfig(
                "linucb needs dim >= 1, ridge > 0, alpha >= 0".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct RidgeState {
    /// Exact inverse of `A = lambda I + sum x x^T`, kept up to date by
    /// rank-one (Sherman-Morrison) updates.
    a_inv: Vec<f64>,
    b: Vec<f64>,
}

impl RidgeState {
    fn new(dim: usize, ridge: f64) -> Self {
        let mut a_inv = vec![0.0; dim * dim];
        for i in 0..dim {
            a_inv[i * dim + i] = 1.0 / ridge;
        }
        Self {
            a_inv,
            b: vec![0.0; dim],
        }
    }

    fn theta(&self, dim: usize) -> Vec<f64> {
        mat_vec(&self.a_inv, dim, &self.b)
    }

    fn update(&mut self, dim: usize, x: &[f64], reward: f64) {
        let ax = mat_vec(&self.a_inv, dim, x);
        let denom = 1.0 + dot(x, &ax);
        for i in 0..dim {
            for j in 0..dim {
                self.a_inv[i * dim + j] -= ax[i] * ax[j] / denom;
            }
        }
        for (b, xv) in self.b.iter_mut().zip(x.iter()) {
            *b += reward * xv;
        }
    }
}

/// Disjoint per-user ridge-regression UCB:
/// `score = theta_u^T x + alpha sqrt(x^T A_u^{-1} x)`.
pub struct LinUcbPolicy {
    cfg: LinUcbConfig,
    users: Vec<RidgeState>,
    pending: Option<PendingRound>,
    warmed: bool,
}

impl LinUcbPolicy {
    pub fn new(cfg: LinUcbConfig, num_users: usize) -> Result<Self> {
        cfg.validate()?;
        if num_users == 0 {
            return Err(Error::EmptyData("user set"));
        }
        Ok(Self {
            users: vec![RidgeState::new(cfg.dim, cfg.ridge); num_users],
            cfg,
            pending: None,
            warmed: false,
        })
    }

    fn state_of(&mut self, user: UserId) -> Result<&mut RidgeState> {
        let n = self.users.len();
        self.users
            .get_mut(user.0)
            .ok_or(Error::IndexOutOfRange { index: user.0, len: n })
    }
}

impl Policy for LinUcbPolicy {
    fn name(&self) -> &str {
        "linucb"
    }

    fn warm_start(&mut self, data: &WarmStartData) -> Result<()> {
        let dim = self.cfg.dim;
        for (user, x, reward) in data {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: x.len(),
                });
            }
            self.state_of(*user)?.update(dim, x, *reward);
        }
        self.warmed = true;
        Ok(())
    }

    fn choose(&mut self, arms: &ArmSet) -> Result<Decision> {
        if !self.warmed {
            return Err(Error::EmptyData("warm start has not run"));
        }
        if arms.dim() != self.cfg.dim {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.dim,
                actual: arms.dim(),
            });
        }
        let dim = self.cfg.dim;
        let n = self.users.len();
        let state = self
            .users
            .get(arms.serving.0)
            .ok_or(Error::IndexOutOfRange {
                index: arms.serving.0,
                len: n,
            })?;
        let theta = state.theta(dim);
        let mut scores = Vec::with_capacity(arms.len());
        for x in arms.arms() {
            let exploit = dot(&theta, x);
            let ax = mat_vec(&state.a_inv, dim, x);
            let bonus = self.cfg.exploration_scale * dot(x, &ax).max(0.0).sqrt();
            scores.push(ArmScore {
                exploit,
                bonus,
                total: exploit + bonus,
            });
        }
        let chosen = argmax_lowest(scores.iter().map(|s| s.total));
        self.pending = Some(PendingRound {
            serving: arms.serving,
            chosen,
            x: arms.arm(chosen).to_vec(),
        });
        Ok(Decision {
            chosen,
            scores,
            groups: Vec::new(),
            adapted_params: None,
        })
    }

    fn learn(&mut self, serving: UserId, chosen: usize, reward: f64) -> Result<()> {
        let pending = take_pending(&mut self.pending, serving, chosen)?;
        let dim = self.cfg.dim;
        self.state_of(serving)?.update(dim, &pending.x, reward);
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn mat_vec(a: &[f64], dim: usize, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(&a[i * dim..(i + 1) * dim], x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::synthetic::{RewardFamily, SyntheticEnv, SyntheticSpec};
    use crate::env::Environment;

    fn neu_cfg(seed: u64) -> NeuUcbConfig {
        NeuUcbConfig {
            net: NetworkConfig::new(6, 8, 2, seed).unwrap(),
            exploration_scale: 0.1,
            ridge: 1.0,
            train_steps: 5,
            step_size: 0.02,
            batch_cap: 16,
            seed: seed ^ 0xabcd,
        }
    }

    fn env(users: usize, seed: u64) -> SyntheticEnv {
        SyntheticEnv::new(SyntheticSpec {
            users,
            groups: users.min(2),
            family: RewardFamily::Linear,
            noise: 0.0,
            gap: 0.4,
            dim: 6,
            arms: 3,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn isotropic_start_bonus_is_grad_norm_over_sqrt_ridge() {
        let mut e = env(4, 1);
        let mut p = NeuUcb::new(NeuVariant::One, neu_cfg(1), 4).unwrap();
        // Keep the network untrained so the design matrix stays lambda * 1.
        let mut cfg = neu_cfg(1);
        cfg.step_size = 0.0;
        let mut p0 = NeuUcb::new(NeuVariant::One, cfg, 4).unwrap();
        let data = e.warm_start();
        p.warm_start(&data).unwrap();
        p0.warm_start(&data).unwrap();
        let round = e.step(1);
        let d = p0.choose(&round.arms).unwrap();
        for (i, x) in round.arms.arms().iter().enumerate() {
            let g = p0.nets[0].gradient(x).unwrap();
            let expect = 0.1 * g.norm() / 1.0f64.sqrt();
            assert!((d.scores[i].bonus - expect).abs() < 1e-12);
        }
        drop(p);
    }

    #[test]
    fn diagonal_bonus_hand_example() {
        let p = NeuUcb::new(NeuVariant::One, neu_cfg(2), 1).unwrap();
        // gradient (3, 4) over A = diag(1, 4): sqrt(9/1 + 16/4) = sqrt(13).
        let bonus = p.bonus(&[3.0, 4.0], &[1.0, 4.0]);
        assert!((bonus - 0.1 * 13.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_user_individual_equals_one() {
        let mut e1 = env(1, 3);
        let mut e2 = env(1, 3);
        let mut one = NeuUcb::new(NeuVariant::One, neu_cfg(3), 1).unwrap();
        let mut ind = NeuUcb::new(NeuVariant::Individual, neu_cfg(3), 1).unwrap();
        one.warm_start(&e1.warm_start()).unwrap();
        ind.warm_start(&e2.warm_start()).unwrap();
        for t in 1..=15 {
            let r1 = e1.step(t);
            let r2 = e2.step(t);
            let d1 = one.choose(&r1.arms).unwrap();
            let d2 = ind.choose(&r2.arms).unwrap();
            assert_eq!(d1.chosen, d2.chosen);
            one.learn(r1.arms.serving, d1.chosen, r1.feedback.realized[d1.chosen])
                .unwrap();
            ind.learn(r2.arms.serving, d2.chosen, r2.feedback.realized[d2.chosen])
                .unwrap();
        }
        assert_eq!(one.nets[0].flat(), ind.nets[0].flat());
        assert_eq!(one.designs[0], ind.designs[0]);
    }

    #[test]
    fn design_matrix_grows_only_on_learn() {
        let mut e = env(4, 4);
        let mut p = NeuUcb::new(NeuVariant::One, neu_cfg(4), 4).unwrap();
        p.warm_start(&e.warm_start()).unwrap();
        let before = p.designs[0].clone();
        let round = e.step(1);
        let d = p.choose(&round.arms).unwrap();
        assert_eq!(p.designs[0], before, "choose must not touch the design");
        p.learn(round.arms.serving, d.chosen, 0.7).unwrap();
        let grew = p.designs[0].iter().zip(before.iter()).any(|(a, b)| a > b);
        assert!(grew);
    }

    fn lin_cfg() -> LinUcbConfig {
        LinUcbConfig {
            dim: 6,
            ridge: 1.0,
            exploration_scale: 0.5,
        }
    }

    #[test]
    fn linucb_initial_score_is_alpha_for_unit_arms() {
        let mut p = LinUcbPolicy::new(lin_cfg(), 4).unwrap();
        // Warm start with zero rewards keeps theta = 0 for users whose
        // observation had reward 0; build a fresh user instead: serve a user
        // and inspect scores before their state is updated.
        let data: WarmStartData = (0..4)
            .map(|u| {
                let mut x = vec![0.0; 6];
                x[u % 6] = 1.0;
                (UserId(u), x, 0.0)
            })
            .collect();
        p.warm_start(&data).unwrap();
        // User 3 got x = e3 with reward 0: b = 0, theta = 0; for arms
        // orthogonal to e3 the quadratic form is 1/lambda.
        let round_arms = ArmSet::new(1, UserId(3), vec![{
            let mut x = vec![0.0; 6];
            x[5] = 1.0;
            x
        }])
        .unwrap();
        let d = p.choose(&round_arms).unwrap();
        assert!((d.scores[0].exploit - 0.0).abs() < 1e-12);
        assert!((d.scores[0].total - 0.5).abs() < 1e-12);
    }

    #[test]
    fn linucb_single_update_matches_closed_form_ridge() {
        let mut p = LinUcbPolicy::new(lin_cfg(), 1).unwrap();
        let x = [0.6, 0.8, 0.0, 0.0, 0.0, 0.0];
        let r = 0.9;
        p.warm_start(&vec![(UserId(0), x.to_vec(), r)]).unwrap();
        let theta = p.users[0].theta(6);
        // Closed form: theta = (lambda I + x x^T)^{-1} (r x); with lambda=1
        // and unit x, (I + x x^T)^{-1} x = x / 2.
        for (i, xv) in x.iter().enumerate() {
            let expect = r * xv / 2.0;
            assert!((theta[i] - expect).abs() < 1e-12, "{i}: {}", theta[i]);
        }
    }

    #[test]
    fn linucb_is_deterministic() {
        let mut e1 = env(4, 6);
        let mut e2 = env(4, 6);
        let mut p1 = LinUcbPolicy::new(lin_cfg(), 4).unwrap();
        let mut p2 = LinUcbPolicy::new(lin_cfg(), 4).unwrap();
        p1.warm_start(&e1.warm_start()).unwrap();
        p2.warm_start(&e2.warm_start()).unwrap();
        for t in 1..=20 {
            let r1 = e1.step(t);
            let r2 = e2.step(t);
            let d1 = p1.choose(&r1.arms).unwrap();
            let d2 = p2.choose(&r2.arms).unwrap();
            assert_eq!(d1.chosen, d2.chosen);
            p1.learn(r1.arms.serving, d1.chosen, r1.feedback.realized[d1.chosen])
                .unwrap();
            p2.learn(r2.arms.serving, d2.chosen, r2.feedback.realized[d2.chosen])
                .unwrap();
        }
    }

    #[test]
    fn linucb_inverse_stays_consistent_with_direct_solve() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dim = 4;
        let cfg = LinUcbConfig {
            dim,
            ridge: 0.7,
            exploration_scale: 0.1,
        };
        let mut p = LinUcbPolicy::new(cfg, 1).unwrap();
        let mut xs: Vec<Vec<f64>> = Vec::new();
        let mut rs: Vec<f64> = Vec::new();
        for _ in 0..12 {
            let mut x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= n);
            let r = rng.random_range(0.0..1.0);
            p.users[0].update(dim, &x, r);
            xs.push(x);
            rs.push(r);
        }
        // Rebuild A explicitly and check A * a_inv ~= I.
        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            a[i * dim + i] = 0.7;
        }
        for x in &xs {
            for i in 0..dim {
                for j in 0..dim {
                    a[i * dim + j] += x[i] * x[j];
                }
            }
        }
        let inv = &p.users[0].a_inv;
        for i in 0..dim {
            for j in 0..dim {
                let mut s = 0.0;
                for l in 0..dim {
                    s += a[i * dim + l] * inv[l * dim + j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-9, "({i},{j}): {s}");
            }
        }
    }
}
