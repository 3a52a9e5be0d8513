//! Neural collaborative-filtering bandit simulation.
//!
//! The crate implements a contextual bandit in which `n` users share reward
//! structure through *relative groups*: per-arm sets of users whose expected
//! rewards on that arm coincide, separated from other groups by a gap of at
//! least `gamma`. A shared meta-learner network adapts per arm to the group
//! inferred for the serving user, while per-user networks track individual
//! behavior and drive the group inference. Arm selection is optimistic,
//! combining the adapted meta prediction with a UCB built from the meta
//! gradient displacement and a user-side generalization term.
//!
//! Module map:
//! - [`net`]: the fully-connected ReLU network (forward, analytic gradients,
//!   seeded initialization, flat/shaped parameter views).
//! - [`learners`]: per-user gradient-descent adaptation with snapshot
//!   history, and the meta-learner batch/SGD updates.
//! - [`grouping`]: relative-group inference from per-user predictions.
//! - [`policy`]: the group-adaptive bandit loop plus NeuralUCB (one/individual)
//!   and LinUCB baselines behind a common [`policy::Policy`] contract.
//! - [`env`]: gap-certified synthetic environments, rating-matrix and
//!   classification-derived environments, regret accounting.
//! - [`svd`]: truncated SVD by power iteration with deflation, used for
//!   rating-matrix feature extraction.
//!
//! The crate is `no_std`-compatible (with `alloc`); IO, file formats and the
//! CLI live in the companion `metaban-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod env;
pub mod error;
pub mod grouping;
pub mod learners;
pub mod net;
pub mod policy;
pub mod svd;

pub use error::Error;
pub use net::{GradientVector, NetworkConfig, NetworkParams};

/// Identifies a user within a simulation. Plain index newtype; environments
/// and policies agree on the range `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub usize);

impl core::fmt::Display for UserId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "u{}", self.0)
    }
}

/// Result alias used across the crate.
pub type Result<T> = core::result::Result<T, Error>;
