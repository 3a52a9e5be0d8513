//! Per-user learners and the shared meta-learner.
//!
//! Each user keeps a full history of `(arm, reward)` observations, a count
//! of completed updates, and a *snapshot store*: every parameter vector a
//! user update has ever produced, starting with the shared initialization.
//! The deployed per-user parameters are a uniform draw from that store; the
//! newest snapshot anchors meta-learner gradients.
//!
//! The meta-learner adapts to a group by descending the weighted sum of the
//! members' squared losses plus an L1 term scaled by `lambda / sqrt(m)`.
//! Two gradient-evaluation modes exist (see [`MetaGradMode`]); the batch
//! update runs a fixed number of inner iterations, while the SGD variant
//! walks the pooled group history one observation at a time and returns a
//! uniform draw over its own iterates.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::net::{NetScratch, NetworkParams};
use crate::{Error, Result, UserId};

/// One ingested data point: an arm feature vector (unit norm by environment
/// contract) and its realized reward in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x: Vec<f64>,
    pub reward: f64,
}

impl Observation {
    pub fn new(x: Vec<f64>, reward: f64) -> Self {
        Self { x, reward }
    }
}

/// How training iterations sample from a history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MinibatchPolicy {
    /// Use the entire history every iteration. Consumes no randomness.
    Full,
    /// Sample `ceil(fraction * len)` observations uniformly without
    /// replacement each iteration; fraction in `(0, 1]`.
    RandomFraction(f64),
    /// Sample `min(count, len)` observations uniformly without replacement
    /// each iteration. Unlike a fraction, this bounds the per-step cost
    /// even as histories grow.
    RandomCount(usize),
}

impl MinibatchPolicy {
    /// Sorted index set for one iteration over a history of length `len`.
    fn sample<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<usize> {
        let amount = match self {
            MinibatchPolicy::Full => return (0..len).collect(),
            MinibatchPolicy::RandomFraction(f) => {
                ((f * len as f64).ceil() as usize).clamp(1, len)
            }
            MinibatchPolicy::RandomCount(n) => (*n).clamp(1, len),
        };
        if amount == len {
            return (0..len).collect();
        }
        let mut idx = rand::seq::index::sample(rng, len, amount).into_vec();
        idx.sort_unstable();
        idx
    }
}

/// Where a user update starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserWarmStart {
    /// Start every update at the shared initialization.
    FromInit,
    /// Start at the current meta-learner parameters (fast adaptation).
    FromMeta,
}

/// Where a meta update starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaWarmStart {
    /// Start every update at the shared initialization.
    FromInit,
    /// Continue from the previous round's meta parameters.
    FromPrevious,
}

/// Where meta-update gradients are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaGradMode {
    /// Differentiate the group loss at each member's newest snapshot. The
    /// descent direction is then constant within one update, and the group
    /// loss itself never depends on the meta iterate. Default.
    AtUserSnapshots,
    /// Differentiate at the current meta iterate on the same sampled data,
    /// so the pooled squared loss actually decreases along the iterations.
    AtMetaIterate,
}

/// How the deployed per-user parameters are picked after an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotMode {
    /// Uniform draw over the whole snapshot store. Default.
    UniformDraw,
    /// Always deploy the newest snapshot. Deviates from the uniform-draw
    /// sampling scheme behind the user generalization bound; trades that
    /// guarantee for sharper current predictions (and lets the store be
    /// pruned in memory-constrained runs).
    LatestOnly,
}

/// User-side training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Step size for user updates (eta_1, >= 0; zero makes updates no-ops).
    pub user_step_size: f64,
    /// Inner iterations per user update (J_1, >= 1).
    pub user_iterations: usize,
    pub minibatch: MinibatchPolicy,
    /// Target training loss for a user learner (epsilon_1).
    pub user_target_loss: f64,
    /// Target pooled loss for the meta learner (epsilon_2).
    pub meta_target_loss: f64,
    pub snapshot_mode: SnapshotMode,
    /// Cap on the parameter-space norm of one gradient step (infinite by
    /// default). The training losses are unnormalized sums, so raw step
    /// magnitude grows with batch size; the cap keeps aggressive step sizes
    /// from diverging on large early residuals.
    pub max_step_norm: f64,
}

impl TrainConfig {
    pub fn new(
        user_step_size: f64,
        user_iterations: usize,
        minibatch: MinibatchPolicy,
        user_target_loss: f64,
        meta_target_loss: f64,
    ) -> Result<Self> {
        if !(user_step_size >= 0.0) || user_iterations == 0 {
            return Err(Error::InvalidConfig(
                "user step size must be >= 0 and iterations >= 1".to_string(),
            ));
        }
        match minibatch {
            MinibatchPolicy::RandomFraction(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::InvalidConfig(
                    "minibatch fraction must lie in (0, 1]".to_string(),
                ));
            }
            MinibatchPolicy::RandomCount(0) => {
                return Err(Error::InvalidConfig(
                    "minibatch count must be >= 1".to_string(),
                ));
            }
            _ => {}
        }
        if !(user_target_loss > 0.0
            && user_target_loss <= meta_target_loss
            && meta_target_loss <= 1.0)
        {
            return Err(Error::InvalidConfig(
                "target losses must satisfy 0 < eps1 <= eps2 <= 1".to_string(),
            ));
        }
        Ok(Self {
            user_step_size,
            user_iterations,
            minibatch,
            user_target_loss,
            meta_target_loss,
            snapshot_mode: SnapshotMode::UniformDraw,
            max_step_norm: f64::INFINITY,
        })
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            user_step_size: 0.01,
            user_iterations: 100,
            minibatch: MinibatchPolicy::Full,
            user_target_loss: 0.01,
            meta_target_loss: 0.1,
            snapshot_mode: SnapshotMode::UniformDraw,
            max_step_norm: f64::INFINITY,
        }
    }
}

/// A user's learner state: history, completed-update count, snapshot store,
/// and the currently deployed parameters.
#[derive(Debug, Clone)]
pub struct UserState {
    id: UserId,
    history: Vec<Observation>,
    occurrences: u64,
    current: NetworkParams,
    snapshots: Vec<NetworkParams>,
    rng: ChaCha8Rng,
}

impl UserState {
    /// Fresh state: snapshot store holds only the shared initialization,
    /// which is also the deployed parameter vector; zero completed updates.
    pub fn new(id: UserId, init: NetworkParams, seed: u64) -> Self {
        Self {
            id,
            history: Vec::new(),
            occurrences: 0,
            current: init.clone(),
            snapshots: vec![init],
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn id(&self) -> UserId {
        self.id
    }

    pub fn history(&self) -> &[Observation] {
        &self.history
    }

    /// Number of completed user updates (mu).
    pub fn occurrences(&self) -> u64 {
        self.occurrences
    }

    /// Deployed parameters: the last uniform draw from the snapshot store.
    pub fn current(&self) -> &NetworkParams {
        &self.current
    }

    pub fn snapshots(&self) -> &[NetworkParams] {
        &self.snapshots
    }

    /// Newest snapshot; anchors meta-update gradients.
    pub fn latest_snapshot(&self) -> &NetworkParams {
        self.snapshots.last().expect("snapshot store never empty")
    }

    pub fn push_observation(&mut self, obs: Observation) {
        self.history.push(obs);
    }

    /// Redraw the deployed parameters uniformly from the snapshot store.
    pub fn sample_current(&mut self) {
        let idx = self.rng.random_range(0..self.snapshots.len());
        self.current = self.snapshots[idx].clone();
    }

    /// Run one user update: `user_iterations` gradient steps on (sub)sampled
    /// history starting from `init`, append the result to the snapshot
    /// store, redeploy per the snapshot mode, and bump the update count.
    pub fn update(&mut self, init: &NetworkParams, cfg: &TrainConfig) -> Result<()> {
        if self.history.is_empty() {
            return Err(Error::EmptyData("user history"));
        }
        let mut theta = init.clone();
        let mut scratch = NetScratch::new(theta.config());
        let mut grad = vec![0.0; theta.config().param_count()];
        for _ in 0..cfg.user_iterations {
            let batch = cfg.minibatch.sample(self.history.len(), &mut self.rng);
            grad.fill(0.0);
            for i in batch {
                let obs = &self.history[i];
                let f = theta.forward_with(&obs.x, &mut scratch)?;
                theta.backward_from_forward(&obs.x, f - obs.reward, &mut scratch, &mut grad)?;
            }
            clipped_step(&mut theta, cfg.user_step_size, &grad, cfg.max_step_norm)?;
        }
        self.snapshots.push(theta);
        self.occurrences += 1;
        match cfg.snapshot_mode {
            SnapshotMode::UniformDraw => self.sample_current(),
            SnapshotMode::LatestOnly => {
                self.current = self.latest_snapshot().clone();
            }
        }
        Ok(())
    }
}

/// Squared-error training loss `1/2 sum (f(x) - r)^2` over `data`.
pub fn user_loss(params: &NetworkParams, data: &[Observation]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData("loss data"));
    }
    let mut scratch = NetScratch::new(params.config());
    let mut sum = 0.0;
    for obs in data {
        let diff = params.forward_with(&obs.x, &mut scratch)? - obs.reward;
        sum += diff * diff;
    }
    Ok(0.5 * sum)
}

/// Meta-learner state shared across all users of one simulation.
#[derive(Debug, Clone)]
pub struct MetaState {
    params: NetworkParams,
    /// Meta step size (eta_2, >= 0).
    pub step_size: f64,
    /// Inner iterations per batch update (J_2, >= 1).
    pub iterations: usize,
    /// L1 regularization weight (lambda, >= 0), applied as lambda / sqrt(m).
    pub l1_weight: f64,
    /// Per-user weights; users absent from the map weigh 1.
    pub weights: BTreeMap<UserId, f64>,
    pub warm_start: MetaWarmStart,
    pub grad_mode: MetaGradMode,
}

impl MetaState {
    pub fn new(
        params: NetworkParams,
        step_size: f64,
        iterations: usize,
        l1_weight: f64,
    ) -> Result<Self> {
        if !(step_size >= 0.0) || iterations == 0 || !(l1_weight >= 0.0) {
            return Err(Error::InvalidConfig(
                "meta update needs step size >= 0, iterations >= 1, l1 weight >= 0".to_string(),
            ));
        }
        Ok(Self {
            params,
            step_size,
            iterations,
            l1_weight,
            weights: BTreeMap::new(),
            warm_start: MetaWarmStart::FromPrevious,
            grad_mode: MetaGradMode::AtUserSnapshots,
        })
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    /// Commit new meta parameters (the chosen arm's adapted vector).
    pub fn commit(&mut self, params: NetworkParams) {
        self.params = params;
    }

    pub fn weight(&self, user: UserId) -> f64 {
        self.weights.get(&user).copied().unwrap_or(1.0)
    }

    /// Starting point of an update per the warm-start mode.
    fn start_point<'a>(&'a self, init: &'a NetworkParams) -> &'a NetworkParams {
        match self.warm_start {
            MetaWarmStart::FromInit => init,
            MetaWarmStart::FromPrevious => &self.params,
        }
    }
}

/// Group loss at the stored snapshots:
/// `sum_u w_u * loss(snapshot_u, data_u) + lambda/sqrt(m) * sum_u ||snapshot_u||_1`.
/// Snapshot and data keys must coincide.
pub fn meta_loss(
    snapshots: &BTreeMap<UserId, &NetworkParams>,
    data: &BTreeMap<UserId, &[Observation]>,
    weights: &BTreeMap<UserId, f64>,
    l1_weight: f64,
    width: usize,
) -> Result<f64> {
    if snapshots.is_empty() {
        return Err(Error::EmptyData("meta loss group"));
    }
    if snapshots.len() != data.len() || !snapshots.keys().all(|u| data.contains_key(u)) {
        return Err(Error::ShapeMismatch(
            "meta loss snapshot and data keys differ".to_string(),
        ));
    }
    let scale = l1_weight / (width as f64).sqrt();
    let mut total = 0.0;
    for (user, params) in snapshots {
        let w = weights.get(user).copied().unwrap_or(1.0);
        total += w * user_loss(params, data[user])?;
        total += scale * params.l1_norm();
    }
    Ok(total)
}

/// One group member's contribution to the meta descent direction, written
/// (assigned) into `out`:
/// `weight * sum_{(x,r) in batch} (f(x; anchor) - r) grad f(x; anchor)
///  + lambda/sqrt(m) * sign(anchor)`.
pub fn user_meta_direction<'a, I>(
    anchor: &NetworkParams,
    batch: I,
    weight: f64,
    l1_weight: f64,
    scratch: &mut NetScratch,
    out: &mut [f64],
) -> Result<()>
where
    I: IntoIterator<Item = &'a Observation>,
{
    out.fill(0.0);
    for obs in batch {
        let f = anchor.forward_with(&obs.x, scratch)?;
        anchor.backward_from_forward(&obs.x, weight * (f - obs.reward), scratch, out)?;
    }
    if l1_weight != 0.0 {
        let scale = l1_weight / (anchor.config().width() as f64).sqrt();
        for (o, v) in out.iter_mut().zip(anchor.flat().iter()) {
            *o += scale * if *v >= 0.0 { 1.0 } else { -1.0 };
        }
    }
    Ok(())
}

/// Apply `theta -= step * direction`, rescaling so the step norm never
/// exceeds `cap`.
pub(crate) fn clipped_step(
    theta: &mut NetworkParams,
    step: f64,
    direction: &[f64],
    cap: f64,
) -> Result<()> {
    let mut scale = -step;
    if cap.is_finite() && step != 0.0 {
        let norm = step * direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > cap {
            scale = -step * cap / norm;
        }
    }
    theta.axpy(scale, direction)
}

fn check_group(
    group: &BTreeSet<UserId>,
    users: &BTreeMap<UserId, UserState>,
) -> Result<()> {
    if group.is_empty() {
        return Err(Error::EmptyData("meta update group"));
    }
    for u in group {
        let state = users.get(u).ok_or(Error::MissingUser(*u, "user states"))?;
        if state.history().is_empty() {
            return Err(Error::WarmStartIncomplete(*u));
        }
    }
    Ok(())
}

/// Batch meta update: `iterations` descent steps on the group loss, each on
/// freshly sampled minibatches, starting from the warm-start point. Returns
/// the adapted parameters; the caller decides whether to commit them.
pub fn meta_update_batch<R: Rng>(
    meta: &MetaState,
    init: &NetworkParams,
    group: &BTreeSet<UserId>,
    users: &BTreeMap<UserId, UserState>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<NetworkParams> {
    meta_update_batch_from(meta.start_point(init), meta, group, users, cfg, rng)
}

/// [`meta_update_batch`] from an explicit starting point (e.g. a per-group
/// cache maintained by the policy).
pub fn meta_update_batch_from<R: Rng>(
    start: &NetworkParams,
    meta: &MetaState,
    group: &BTreeSet<UserId>,
    users: &BTreeMap<UserId, UserState>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<NetworkParams> {
    check_group(group, users)?;
    let mut theta = start.clone();
    let p = theta.config().param_count();
    let mut scratch = NetScratch::new(theta.config());
    let mut direction = vec![0.0; p];
    let mut member = vec![0.0; p];
    for _ in 0..meta.iterations {
        direction.fill(0.0);
        for u in group {
            let state = &users[u];
            let batch = cfg.minibatch.sample(state.history().len(), rng);
            let anchor = match meta.grad_mode {
                MetaGradMode::AtUserSnapshots => state.latest_snapshot(),
                MetaGradMode::AtMetaIterate => &theta,
            };
            user_meta_direction(
                anchor,
                batch.iter().map(|i| &state.history()[*i]),
                meta.weight(*u),
                meta.l1_weight,
                &mut scratch,
                &mut member,
            )?;
            for (d, m) in direction.iter_mut().zip(member.iter()) {
                *d += m;
            }
        }
        clipped_step(&mut theta, meta.step_size, &direction, cfg.max_step_norm)?;
    }
    Ok(theta)
}

/// SGD meta update over the pooled group history: members in id order, each
/// history in insertion order. Step `j` descends the single-observation loss
/// differentiated at that observation's owner snapshot. Returns a uniform
/// draw over the iterates *before* each step (the final iterate is excluded
/// by construction).
pub fn meta_update_sgd<R: Rng>(
    meta: &MetaState,
    init: &NetworkParams,
    group: &BTreeSet<UserId>,
    users: &BTreeMap<UserId, UserState>,
    rng: &mut R,
) -> Result<NetworkParams> {
    check_group(group, users)?;
    let mut theta = meta.start_point(init).clone();
    let p = theta.config().param_count();
    let mut scratch = NetScratch::new(theta.config());
    let mut grad = vec![0.0; p];
    let mut iterates: Vec<NetworkParams> = Vec::new();
    for u in group {
        let state = &users[u];
        let anchor = state.latest_snapshot();
        for obs in state.history() {
            iterates.push(theta.clone());
            grad.fill(0.0);
            let f = anchor.forward_with(&obs.x, &mut scratch)?;
            anchor.backward_from_forward(&obs.x, f - obs.reward, &mut scratch, &mut grad)?;
            theta.axpy(-meta.step_size, &grad)?;
        }
    }
    if iterates.is_empty() {
        return Err(Error::EmptyData("pooled group history"));
    }
    let idx = rng.random_range(0..iterates.len());
    Ok(iterates.swap_remove(idx))
}
