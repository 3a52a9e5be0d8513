//! Decision policies behind a common contract.
//!
//! A policy consumes the warm-start observations once, then alternates
//! `choose` (score the offered arms, pick one, remember the round as
//! pending) and `learn` (commit the pending round with its realized reward
//! and update learner state). `choose` never mutates learner state; `learn`
//! mutates it exactly once per round.

mod baselines;
mod group_adaptive;

pub use baselines::{LinUcbConfig, LinUcbPolicy, NeuUcb, NeuUcbConfig, NeuVariant};
pub use group_adaptive::{MetaBan, MetaBanConfig};

use alloc::string::ToString;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::env::{ArmSet, WarmStartData};
use crate::grouping::GroupAssignment;
use crate::net::{GradientVector, NetworkParams};
use crate::{Error, Result, UserId};

/// Constants of the optimism bonus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UcbConfig {
    /// Overall exploration scale alpha (>= 0) multiplying the whole bonus.
    pub exploration_scale: f64,
    /// Scale of the meta-gradient displacement term (>= 0).
    pub gradient_scale: f64,
    /// Additive constant of the bonus (>= 0).
    pub additive: f64,
    /// User-learner target loss epsilon_1 entering the user term.
    pub user_target_loss: f64,
    /// Confidence level delta in (0, 1).
    pub confidence: f64,
    /// Scale of the log term of the user bonus (>= 0).
    pub user_scale: f64,
    /// Multiplicative constant inside the log of the user bonus (> 0).
    pub count_constant: f64,
}

impl UcbConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = self.exploration_scale >= 0.0
            && self.gradient_scale >= 0.0
            && self.additive >= 0.0
            && self.user_target_loss >= 0.0
            && self.user_scale >= 0.0
            && self.count_constant > 0.0;
        if !nonneg || !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidConfig(
                "ucb constants must be nonnegative with confidence in (0,1)".to_string(),
            ));
        }
        Ok(())
    }
}

impl Default for UcbConfig {
    fn default() -> Self {
        Self {
            exploration_scale: 0.01,
            gradient_scale: 1.0,
            additive: 0.0,
            user_target_loss: 0.01,
            confidence: 0.1,
            user_scale: 1.0,
            count_constant: 1.0,
        }
    }
}

/// User-side exploration bonus, decreasing in the user's update count `mu`:
/// `sqrt(2 eps1 / mu) + 3 L / sqrt(2 mu) + c sqrt(2 log(C mu k / delta) / mu)`.
/// The log term is floored at zero.
pub fn user_ucb_term(mu: u64, depth: usize, arms: usize, cfg: &UcbConfig) -> Result<f64> {
    if mu == 0 {
        return Err(Error::ZeroOccurrenceCount);
    }
    let mu = mu as f64;
    let l = depth as f64;
    let fit = (2.0 * cfg.user_target_loss / mu).sqrt();
    let capacity = 3.0 * l / (2.0 * mu).sqrt();
    let log_arg = (cfg.count_constant * mu * arms as f64 / cfg.confidence).max(1.0);
    let concentration = cfg.user_scale * (2.0 * log_arg.ln() / mu).sqrt();
    Ok(fit + capacity + concentration)
}

/// Full optimism bonus for one arm: gradient displacement of the adapted
/// meta parameters from the shared initialization, plus the additive
/// constant, plus the serving user's bonus.
pub fn meta_ucb(
    x: &[f64],
    adapted: &NetworkParams,
    anchor: &NetworkParams,
    mu: u64,
    arms: usize,
    cfg: &UcbConfig,
) -> Result<f64> {
    let g_adapted = adapted.gradient(x)?;
    let g_anchor = anchor.gradient(x)?;
    bonus_from_gradients(&g_adapted, &g_anchor, mu, adapted.config().depth(), arms, cfg)
}

/// [`meta_ucb`] with the gradients already in hand (hot path).
pub fn bonus_from_gradients(
    g_adapted: &GradientVector,
    g_anchor: &GradientVector,
    mu: u64,
    depth: usize,
    arms: usize,
    cfg: &UcbConfig,
) -> Result<f64> {
    let displacement = g_adapted.diff_norm(g_anchor)?;
    Ok(cfg.gradient_scale * displacement
        + cfg.additive
        + user_ucb_term(mu, depth, arms, cfg)?)
}

/// Per-arm scoring detail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmScore {
    /// Reward estimate of the arm.
    pub exploit: f64,
    /// Optimism bonus before the exploration scale.
    pub bonus: f64,
    /// Final score the argmax ran on.
    pub total: f64,
}

/// Outcome of `choose`: the picked arm plus everything worth logging.
#[derive(Debug, Clone)]
pub struct Decision {
    pub chosen: usize,
    pub scores: Vec<ArmScore>,
    /// Group inferred per arm; empty for policies without grouping.
    pub groups: Vec<GroupAssignment>,
    /// Adapted meta parameters of the chosen arm, for policies that carry
    /// them; committed on `learn`.
    pub adapted_params: Option<NetworkParams>,
}

/// `|| a - b ||_2` over flat slices of equal length.
pub(crate) fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        sum += d * d;
    }
    sum.sqrt()
}

/// Lowest-index argmax over total scores.
pub(crate) fn argmax_lowest(totals: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in totals.into_iter().enumerate() {
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    best
}

/// Common policy contract for the simulation harness.
pub trait Policy {
    fn name(&self) -> &str;

    /// Ingest the pre-round observations, one per user. Must be called
    /// exactly once, before the first `choose`.
    fn warm_start(&mut self, data: &WarmStartData) -> Result<()>;

    /// Score the arms and pick one. Read-only on learner state; stores the
    /// round as pending for `learn`.
    fn choose(&mut self, arms: &ArmSet) -> Result<Decision>;

    /// Commit the pending round: update learner state with the realized
    /// reward of the chosen arm. Errors when there is no pending round or
    /// the arguments contradict it.
    fn learn(&mut self, serving: UserId, chosen: usize, reward: f64) -> Result<()>;
}

/// Shared pending-round bookkeeping.
#[derive(Debug, Clone)]
pub(crate) struct PendingRound {
    pub serving: UserId,
    pub chosen: usize,
    pub x: Vec<f64>,
}

pub(crate) fn take_pending(
    slot: &mut Option<PendingRound>,
    serving: UserId,
    chosen: usize,
) -> Result<PendingRound> {
    let pending = slot.take().ok_or(Error::NoPendingDecision)?;
    if pending.serving != serving || pending.chosen != chosen {
        return Err(Error::InvalidConfig(
            "learn arguments contradict the pending decision".to_string(),
        ));
    }
    Ok(pending)
}
