//! Experiment configuration: one JSON document, every field defaulted, so a
//! minimal config names only the environment and the policies.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvConfig,
    pub policies: Vec<PolicyConfig>,
    #[serde(default = "defaults::horizon")]
    pub horizon: u64,
    #[serde(default = "defaults::runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::out")]
    pub out: PathBuf,
    /// Maximum concurrent runs; 0 means one per available core.
    #[serde(default)]
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(CliError::Config("horizon must be >= 1".into()));
        }
        if self.runs == 0 {
            return Err(CliError::Config("runs must be >= 1".into()));
        }
        if self.policies.is_empty() {
            return Err(CliError::Config("at least one policy required".into()));
        }
        for p in &self.policies {
            p.kind()?;
        }
        self.environment.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvConfig {
    Synthetic {
        #[serde(default = "defaults::users")]
        users: usize,
        #[serde(default = "defaults::groups")]
        groups: usize,
        #[serde(default = "defaults::family")]
        family: String,
        #[serde(default = "defaults::noise")]
        noise: f64,
        #[serde(default = "defaults::gap")]
        gap: f64,
        #[serde(default = "defaults::dim")]
        dim: usize,
        #[serde(default = "defaults::arms")]
        arms: usize,
    },
    Ratings {
        ratings: PathBuf,
        /// Optional precomputed item-feature CSV; skips the SVD when given.
        #[serde(default)]
        features: Option<PathBuf>,
        #[serde(default = "defaults::top_users")]
        top_users: usize,
        #[serde(default = "defaults::top_items")]
        top_items: usize,
        #[serde(default = "defaults::dim")]
        dim: usize,
        #[serde(default = "defaults::threshold")]
        threshold: f64,
        #[serde(default = "defaults::arms")]
        arms: usize,
    },
    Classification {
        data: PathBuf,
    },
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if let EnvConfig::Synthetic { family, .. } = self {
            parse_family(family)?;
        }
        Ok(())
    }
}

pub fn parse_family(name: &str) -> Result<metaban::env::synthetic::RewardFamily> {
    use metaban::env::synthetic::RewardFamily;
    match name {
        "linear" => Ok(RewardFamily::Linear),
        "quadratic" => Ok(RewardFamily::Quadratic),
        "cosine" => Ok(RewardFamily::Cosine),
        other => Err(CliError::Config(format!(
            "unknown reward family '{other}' (expected linear|quadratic|cosine)"
        ))),
    }
}

/// Which implementation a policy entry resolves to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    GroupAdaptive,
    NeuralOne,
    NeuralIndividual,
    Linear,
}

/// One policy entry. `alpha` and `lambda` are the grid-searched pair:
/// `lambda` is the L1 weight for the group-adaptive policy and the ridge
/// initialization for the baselines.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub name: String,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::lambda")]
    pub lambda: f64,
    /// Gradient-displacement scale of the optimism bonus.
    #[serde(default = "defaults::one")]
    pub beta_hat: f64,
    /// Additive constant of the optimism bonus.
    #[serde(default)]
    pub z: f64,
    /// Scale of the log term in the user bonus.
    #[serde(default = "defaults::one")]
    pub c: f64,
    /// Multiplicative constant inside that log.
    #[serde(default = "defaults::one")]
    pub count_constant: f64,
    #[serde(default = "defaults::epsilon1")]
    pub epsilon1: f64,
    #[serde(default = "defaults::epsilon2")]
    pub epsilon2: f64,
    #[serde(default = "defaults::delta")]
    pub delta: f64,
    #[serde(default = "defaults::nu")]
    pub nu: f64,
    #[serde(default = "defaults::gamma")]
    pub gamma: f64,
    #[serde(default = "defaults::eta1")]
    pub eta1: f64,
    #[serde(default = "defaults::eta2")]
    pub eta2: f64,
    #[serde(default = "defaults::j1")]
    pub j1: usize,
    #[serde(default = "defaults::j2")]
    pub j2: usize,
    /// Network width.
    #[serde(default = "defaults::width")]
    pub m: usize,
    /// Network depth (number of weight matrices).
    #[serde(default = "defaults::depth")]
    pub depth: usize,
    /// Minibatch fraction for user updates, in (0, 1]; absent means full
    /// batches.
    #[serde(default)]
    pub minibatch_fraction: Option<f64>,
    /// Minibatch fraction for per-arm meta updates; absent means full.
    #[serde(default)]
    pub meta_minibatch_fraction: Option<f64>,
    /// Per-member observation count for per-arm meta updates; wins over
    /// the fraction when both are set.
    #[serde(default)]
    pub meta_minibatch_count: Option<usize>,
    /// Step-norm cap for user updates (absent = uncapped).
    #[serde(default)]
    pub max_step_norm: Option<f64>,
    /// Step-norm cap for meta updates (absent = uncapped).
    #[serde(default)]
    pub meta_max_step_norm: Option<f64>,
    /// "uniform" (default) or "latest-only": how the deployed per-user
    /// parameters are picked from the snapshot store.
    #[serde(default = "defaults::snapshot_mode")]
    pub snapshot_mode: String,
    /// "at_user_snapshots" (default) or "at_meta_iterate".
    #[serde(default = "defaults::grad_mode")]
    pub meta_grad_mode: String,
    /// Warm-start each member set's adaptation from its own last adapted
    /// parameters instead of the shared warm-start point.
    #[serde(default)]
    pub group_cache: bool,
    /// "from_previous" (default) or "from_init".
    #[serde(default = "defaults::meta_warm_start")]
    pub meta_warm_start: String,
    /// "from_meta" (default) or "from_init".
    #[serde(default = "defaults::user_warm_start")]
    pub user_warm_start: String,
    /// Training steps per round for the neural baselines.
    #[serde(default = "defaults::train_steps")]
    pub train_steps: usize,
    /// Minibatch cap for the neural baselines.
    #[serde(default = "defaults::batch_cap")]
    pub batch_cap: usize,
}

impl PolicyConfig {
    pub fn named(name: &str) -> Self {
        serde_json::from_str(&format!("{{\"name\": \"{name}\"}}"))
            .expect("a bare name deserializes with defaults")
    }

    pub fn kind(&self) -> Result<PolicyKind> {
        match self.name.as_str() {
            "meta-ban" => Ok(PolicyKind::GroupAdaptive),
            "neuucb-one" => Ok(PolicyKind::NeuralOne),
            "neuucb-ind" => Ok(PolicyKind::NeuralIndividual),
            "linucb" => Ok(PolicyKind::Linear),
            other => Err(CliError::Config(format!(
                "unresolvable policy name '{other}' \
                 (expected meta-ban|neuucb-one|neuucb-ind|linucb)"
            ))),
        }
    }
}

mod defaults {
    use std::path::PathBuf;

    pub fn horizon() -> u64 {
        2000
    }
    pub fn runs() -> usize {
        10
    }
    pub fn out() -> PathBuf {
        PathBuf::from("results")
    }
    pub fn users() -> usize {
        20
    }
    pub fn groups() -> usize {
        4
    }
    pub fn family() -> String {
        "quadratic".into()
    }
    pub fn noise() -> f64 {
        0.1
    }
    pub fn gap() -> f64 {
        0.5
    }
    pub fn dim() -> usize {
        10
    }
    pub fn arms() -> usize {
        10
    }
    pub fn top_users() -> usize {
        50
    }
    pub fn top_items() -> usize {
        100
    }
    pub fn threshold() -> f64 {
        2.0
    }
    pub fn alpha() -> f64 {
        0.01
    }
    pub fn lambda() -> f64 {
        0.1
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn epsilon1() -> f64 {
        0.01
    }
    pub fn epsilon2() -> f64 {
        0.1
    }
    pub fn delta() -> f64 {
        0.1
    }
    pub fn nu() -> f64 {
        5.0
    }
    pub fn gamma() -> f64 {
        0.4
    }
    pub fn eta1() -> f64 {
        0.05
    }
    pub fn eta2() -> f64 {
        0.01
    }
    pub fn j1() -> usize {
        30
    }
    pub fn j2() -> usize {
        10
    }
    pub fn width() -> usize {
        100
    }
    pub fn depth() -> usize {
        2
    }
    pub fn grad_mode() -> String {
        "at_user_snapshots".into()
    }
    pub fn snapshot_mode() -> String {
        "uniform".into()
    }
    pub fn meta_warm_start() -> String {
        "from_previous".into()
    }
    pub fn user_warm_start() -> String {
        "from_meta".into()
    }
    pub fn train_steps() -> usize {
        20
    }
    pub fn batch_cap() -> usize {
        64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let text = r#"{
            "environment": {"type": "synthetic"},
            "policies": [{"name": "meta-ban"}, {"name": "linucb"}]
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.horizon, 2000);
        assert_eq!(cfg.runs, 10);
        assert_eq!(cfg.policies[0].m, 100);
        assert_eq!(cfg.policies[0].depth, 2);
        assert_eq!(cfg.policies[0].nu, 5.0);
        assert_eq!(cfg.policies[0].gamma, 0.4);
    }

    #[test]
    fn unknown_policy_name_is_a_config_error() {
        let text = r#"{
            "environment": {"type": "synthetic"},
            "policies": [{"name": "mystery"}]
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "environment": {"type": "synthetic"},
            "policies": [{"name": "meta-ban", "typo_field": 1}]
        }"#;
        assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
    }

    #[test]
    fn unknown_family_is_a_config_error() {
        let text = r#"{
            "environment": {"type": "synthetic", "family": "cubic"},
            "policies": [{"name": "linucb"}]
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }
}
