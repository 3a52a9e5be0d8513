//! The group-adaptive meta-learning policy.
//!
//! Per round, for every offered arm: predict the arm's reward with each
//! user's deployed network, infer the serving user's relative group from
//! those predictions, adapt the meta-learner to that group, and score the
//! arm with the adapted estimate plus an optimism bonus. The best arm's
//! adapted parameters are committed when the reward arrives, followed by a
//! user update for the serving user only.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    argmax_lowest, l2_diff, take_pending, user_ucb_term, ArmScore, Decision, PendingRound,
    Policy, UcbConfig,
};
use crate::env::{ArmSet, WarmStartData};
use crate::grouping::{infer_group, GroupConfig};
use crate::learners::{
    meta_update_batch_from, user_meta_direction, MetaGradMode, MetaState, MetaWarmStart,
    MinibatchPolicy, Observation, TrainConfig, UserState, UserWarmStart,
};
use crate::net::{NetScratch, NetworkConfig, NetworkParams};
use crate::{Error, Result, UserId};

/// Everything fixed at construction time.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaBanConfig {
    pub net: NetworkConfig,
    pub train: TrainConfig,
    pub group: GroupConfig,
    pub ucb: UcbConfig,
    /// Meta step size (eta_2).
    pub meta_step_size: f64,
    /// Meta inner iterations per arm (J_2).
    pub meta_iterations: usize,
    /// L1 weight (lambda).
    pub l1_weight: f64,
    /// Minibatch policy of the per-arm meta updates; user updates follow
    /// `train.minibatch`.
    pub meta_minibatch: MinibatchPolicy,
    /// Step-norm cap for meta updates (`train.max_step_norm` covers user
    /// updates).
    pub meta_max_step_norm: f64,
    pub meta_warm_start: MetaWarmStart,
    /// When set, each inferred member set warm-starts its adaptation from
    /// the parameters it was last adapted to (falling back to the regular
    /// warm start the first time a set appears). Recurring groups then keep
    /// training across rounds instead of re-adapting from a shared anchor
    /// every arm. The cache commits in `learn`, never in `choose`.
    pub group_cache: bool,
    pub user_warm_start: UserWarmStart,
    pub grad_mode: MetaGradMode,
    /// Seed for policy-side randomness (minibatch sampling and per-user
    /// snapshot draws); independent of the network-init seed in `net`.
    pub seed: u64,
}

impl MetaBanConfig {
    pub fn validate(&self) -> Result<()> {
        self.ucb.validate()?;
        if !(self.meta_step_size >= 0.0) || self.meta_iterations == 0 || !(self.l1_weight >= 0.0) {
            return Err(Error::InvalidConfig(
                "meta update needs step size >= 0, iterations >= 1, l1 weight >= 0".to_string(),
            ));
        }
        Ok(())
    }
}

/// The group-adaptive policy instance.
pub struct MetaBan {
    cfg: MetaBanConfig,
    /// Shared initialization: every user's anchor and the UCB reference.
    init: NetworkParams,
    /// Gradient of the shared initialization, cached per arm vector.
    meta: MetaState,
    users: BTreeMap<UserId, UserState>,
    rng: ChaCha8Rng,
    scratch: NetScratch,
    grad_buf_a: Vec<f64>,
    grad_buf_b: Vec<f64>,
    /// Per-user meta-direction cache, valid within a single `choose` (the
    /// snapshots and histories it derives from change only in `learn`).
    direction_cache: BTreeMap<UserId, Vec<f64>>,
    /// Last adapted parameters per member set (group-cache warm start).
    adapted_cache: BTreeMap<BTreeSet<UserId>, NetworkParams>,
    pending: Option<(PendingRound, NetworkParams, Vec<(BTreeSet<UserId>, NetworkParams)>)>,
    warmed: bool,
}

impl MetaBan {
    pub fn new(cfg: MetaBanConfig, num_users: usize) -> Result<Self> {
        cfg.validate()?;
        if num_users == 0 {
            return Err(Error::EmptyData("user set"));
        }
        let init = NetworkParams::init(cfg.net);
        let mut meta = MetaState::new(
            init.clone(),
            cfg.meta_step_size,
            cfg.meta_iterations,
            cfg.l1_weight,
        )?;
        meta.warm_start = cfg.meta_warm_start;
        meta.grad_mode = cfg.grad_mode;
        let mut seeder = ChaCha8Rng::seed_from_u64(cfg.seed);
        let users: BTreeMap<UserId, UserState> = (0..num_users)
            .map(|u| {
                let seed = seeder.random::<u64>();
                (UserId(u), UserState::new(UserId(u), init.clone(), seed))
            })
            .collect();
        let p = cfg.net.param_count();
        Ok(Self {
            scratch: NetScratch::new(&cfg.net),
            rng: ChaCha8Rng::seed_from_u64(seeder.random::<u64>()),
            init,
            meta,
            users,
            cfg,
            grad_buf_a: vec![0.0; p],
            grad_buf_b: vec![0.0; p],
            direction_cache: BTreeMap::new(),
            adapted_cache: BTreeMap::new(),
            pending: None,
            warmed: false,
        })
    }

    pub fn meta_params(&self) -> &NetworkParams {
        self.meta.params()
    }

    pub fn init_params(&self) -> &NetworkParams {
        &self.init
    }

    pub fn user(&self, id: UserId) -> Option<&UserState> {
        self.users.get(&id)
    }

    fn user_update_start(&self) -> &NetworkParams {
        match self.cfg.user_warm_start {
            UserWarmStart::FromInit => &self.init,
            UserWarmStart::FromMeta => self.meta.params(),
        }
    }

    fn check_warm_start(&self) -> Result<()> {
        if !self.warmed {
            return Err(Error::EmptyData("warm start has not run"));
        }
        for (id, state) in &self.users {
            if state.history().is_empty() || state.occurrences() == 0 {
                return Err(Error::WarmStartIncomplete(*id));
            }
        }
        Ok(())
    }

    /// Warm-start point of an adaptation for `group`.
    fn adapt_start(&self, group: &BTreeSet<UserId>) -> &NetworkParams {
        if self.cfg.group_cache {
            if let Some(cached) = self.adapted_cache.get(group) {
                return cached;
            }
        }
        match self.cfg.meta_warm_start {
            MetaWarmStart::FromInit => &self.init,
            MetaWarmStart::FromPrevious => self.meta.params(),
        }
    }

    /// Adapt the meta-learner to one group. Full-batch snapshot-anchored
    /// updates reuse per-user directions across the arms of a round (they
    /// depend only on state that is frozen during `choose`); any other mode
    /// goes through the general update path.
    fn adapt(&mut self, group: &BTreeSet<UserId>) -> Result<NetworkParams> {
        let cacheable = matches!(self.cfg.meta_minibatch, MinibatchPolicy::Full)
            && self.cfg.grad_mode == MetaGradMode::AtUserSnapshots;
        if !cacheable {
            let meta_train = TrainConfig {
                minibatch: self.cfg.meta_minibatch,
                max_step_norm: self.cfg.meta_max_step_norm,
                ..self.cfg.train
            };
            let start = self.adapt_start(group).clone();
            return meta_update_batch_from(
                &start,
                &self.meta,
                group,
                &self.users,
                &meta_train,
                &mut self.rng,
            );
        }
        if group.is_empty() {
            return Err(Error::EmptyData("meta update group"));
        }
        let p = self.cfg.net.param_count();
        let mut direction = vec![0.0; p];
        for u in group {
            if !self.direction_cache.contains_key(u) {
                let state = self
                    .users
                    .get(u)
                    .ok_or(Error::MissingUser(*u, "user states"))?;
                if state.history().is_empty() {
                    return Err(Error::WarmStartIncomplete(*u));
                }
                let mut buf = vec![0.0; p];
                user_meta_direction(
                    state.latest_snapshot(),
                    state.history(),
                    self.meta.weight(*u),
                    self.cfg.l1_weight,
                    &mut self.scratch,
                    &mut buf,
                )?;
                self.direction_cache.insert(*u, buf);
            }
            let cached = &self.direction_cache[u];
            for (d, c) in direction.iter_mut().zip(cached.iter()) {
                *d += c;
            }
        }
        let mut theta = self.adapt_start(group).clone();
        for _ in 0..self.cfg.meta_iterations {
            crate::learners::clipped_step(
                &mut theta,
                self.cfg.meta_step_size,
                &direction,
                self.cfg.meta_max_step_norm,
            )?;
        }
        Ok(theta)
    }
}

impl Policy for MetaBan {
    fn name(&self) -> &str {
        "meta-ban"
    }

    fn warm_start(&mut self, data: &WarmStartData) -> Result<()> {
        for (user, x, reward) in data {
            let start = match self.cfg.user_warm_start {
                UserWarmStart::FromInit => self.init.clone(),
                UserWarmStart::FromMeta => self.meta.params().clone(),
            };
            let state = self
                .users
                .get_mut(user)
                .ok_or(Error::MissingUser(*user, "user states"))?;
            state.push_observation(Observation::new(x.clone(), *reward));
            state.update(&start, &self.cfg.train)?;
        }
        self.warmed = true;
        Ok(())
    }

    fn choose(&mut self, arms: &ArmSet) -> Result<Decision> {
        self.check_warm_start()?;
        let serving = arms.serving;
        let mu = self.users[&serving].occurrences();
        let k = arms.len();
        let user_term = user_ucb_term(mu, self.cfg.net.depth(), k, &self.cfg.ucb)?;
        self.direction_cache.clear();

        let mut scores = Vec::with_capacity(k);
        let mut groups = Vec::with_capacity(k);
        let mut adapted_by_arm = Vec::with_capacity(k);
        for (i, x) in arms.arms().iter().enumerate() {
            let mut predictions = BTreeMap::new();
            for (id, state) in &self.users {
                let f = state.current().forward_with(x, &mut self.scratch)?;
                predictions.insert(*id, f);
            }
            let group = infer_group(&predictions, serving, i, &self.cfg.group)?;
            let adapted = self.adapt(&group.members)?;

            let exploit = adapted.forward_with(x, &mut self.scratch)?;
            self.grad_buf_a.fill(0.0);
            adapted.accumulate_gradient(x, 1.0, &mut self.scratch, &mut self.grad_buf_a)?;
            self.grad_buf_b.fill(0.0);
            self.init
                .accumulate_gradient(x, 1.0, &mut self.scratch, &mut self.grad_buf_b)?;
            let displacement = l2_diff(&self.grad_buf_a, &self.grad_buf_b);
            let bonus =
                self.cfg.ucb.gradient_scale * displacement + self.cfg.ucb.additive + user_term;
            let total = exploit + self.cfg.ucb.exploration_scale * bonus;
            scores.push(ArmScore {
                exploit,
                bonus,
                total,
            });
            groups.push(group);
            adapted_by_arm.push(adapted);
        }
        let chosen = argmax_lowest(scores.iter().map(|s| s.total));
        let adapted = adapted_by_arm[chosen].clone();
        let cache_entries: Vec<(BTreeSet<UserId>, NetworkParams)> = if self.cfg.group_cache {
            groups
                .iter()
                .zip(adapted_by_arm)
                .map(|(g, params)| (g.members.clone(), params))
                .collect()
        } else {
            Vec::new()
        };
        self.pending = Some((
            PendingRound {
                serving,
                chosen,
                x: arms.arm(chosen).to_vec(),
            },
            adapted.clone(),
            cache_entries,
        ));
        Ok(Decision {
            chosen,
            scores,
            groups,
            adapted_params: Some(adapted),
        })
    }

    fn learn(&mut self, serving: UserId, chosen: usize, reward: f64) -> Result<()> {
        let (pending, adapted, cache_entries) = match self.pending.take() {
            Some(p) => p,
            None => return Err(Error::NoPendingDecision),
        };
        let mut slot = Some(pending);
        let pending = take_pending(&mut slot, serving, chosen)?;
        self.meta.commit(adapted);
        for (members, params) in cache_entries {
            self.adapted_cache.insert(members, params);
        }
        // Noise in early group inference can mint one-off member sets; keep
        // the cache from accumulating them without bound.
        if self.adapted_cache.len() > 512 {
            self.adapted_cache.clear();
        }
        let start = self.user_update_start().clone();
        let state = self
            .users
            .get_mut(&serving)
            .ok_or(Error::MissingUser(serving, "user states"))?;
        state.push_observation(Observation::new(pending.x, reward));
        state.update(&start, &self.cfg.train)?;
        self.direction_cache.clear();
        Ok(())
    }
}
