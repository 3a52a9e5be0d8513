//! Seeded experiment execution.
//!
//! A run is a pure function of (environment source, policy config, horizon,
//! base seed, run index): the policy stream is seeded by
//! `base ^ hash(policy, run)`, the environment stream by `base ^ hash(run)`
//! so every policy of a run index faces identical rounds. Runs execute in
//! parallel and are written in deterministic order afterwards.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use metaban::env::classification::ClassificationEnv;
use metaban::env::rating::{IngestWarning, RatingEnv, RatingSpec};
use metaban::env::synthetic::{SyntheticEnv, SyntheticSpec};
use metaban::env::{regret_of, Environment};
use metaban::grouping::GroupConfig;
use metaban::learners::{
    MetaGradMode, MetaWarmStart, MinibatchPolicy, SnapshotMode, TrainConfig, UserWarmStart,
};
use metaban::net::NetworkConfig;
use metaban::policy::{
    LinUcbConfig, LinUcbPolicy, MetaBan, MetaBanConfig, NeuUcb, NeuUcbConfig, NeuVariant,
    Policy, UcbConfig,
};

use crate::config::{parse_family, EnvConfig, ExperimentConfig, PolicyConfig, PolicyKind};
use crate::ingest;
use crate::plot::{render_regret_plot, Series};
use crate::seed;
use crate::{CliError, Result};

/// One trace row; `group_exact` is present only when both the policy infers
/// groups and the environment knows the truth.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub t: u64,
    pub arm: usize,
    pub reward: f64,
    pub regret: f64,
    pub cum_regret: f64,
    pub group_exact: Option<bool>,
    /// Mean inferred group size across the round's arms (0 for policies
    /// without grouping). Not part of the trace schema; the ablation
    /// aggregates it separately.
    pub mean_group_size: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub policy: String,
    pub run_index: usize,
    pub seed: u64,
    pub rows: Vec<TraceRow>,
}

impl RunOutcome {
    pub fn final_cum_regret(&self) -> f64 {
        self.rows.last().map(|r| r.cum_regret).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub policy: String,
    pub checkpoint: u64,
    pub mean_cum_regret: f64,
    pub std_cum_regret: f64,
}

/// Environment prototype, instantiated once per run with a run seed.
pub enum EnvSource {
    Synthetic(SyntheticSpec),
    Ratings(RatingEnv),
    Classification(ClassificationEnv),
}

impl EnvSource {
    /// Load/validate the source. File-backed sources are read once here;
    /// `base_seed` pins the feature extraction of the rating path so that
    /// item features are shared by all runs.
    pub fn load(cfg: &EnvConfig, base_seed: u64) -> Result<(Self, Vec<IngestWarning>)> {
        match cfg {
            EnvConfig::Synthetic {
                users,
                groups,
                family,
                noise,
                gap,
                dim,
                arms,
            } => {
                let spec = SyntheticSpec {
                    users: *users,
                    groups: *groups,
                    family: parse_family(family)?,
                    noise: *noise,
                    gap: *gap,
                    dim: *dim,
                    arms: *arms,
                    seed: base_seed,
                };
                spec.validate()?;
                Ok((EnvSource::Synthetic(spec), Vec::new()))
            }
            EnvConfig::Ratings {
                ratings,
                features,
                top_users,
                top_items,
                dim,
                threshold,
                arms,
            } => {
                let records = ingest::read_ratings(ratings)?;
                let spec = RatingSpec {
                    top_users: *top_users,
                    top_items: *top_items,
                    feature_dim: *dim,
                    reward_threshold: *threshold,
                    arms: *arms,
                    seed: base_seed,
                };
                let (env, warnings) = match features {
                    Some(path) => {
                        let map = ingest::read_features(path)?;
                        RatingEnv::from_records_with_features(&records, &map, &spec)?
                    }
                    None => RatingEnv::from_records(&records, &spec)?,
                };
                Ok((EnvSource::Ratings(env), warnings))
            }
            EnvConfig::Classification { data } => {
                let env = ingest::read_classification(data, base_seed)?;
                Ok((EnvSource::Classification(env), Vec::new()))
            }
        }
    }

    pub fn instantiate(&self, run_seed: u64) -> Result<Box<dyn Environment>> {
        Ok(match self {
            // Synthetic worlds are cheap: draw a fresh world per run so
            // run-to-run spread covers world randomness too.
            EnvSource::Synthetic(spec) => Box::new(SyntheticEnv::new(SyntheticSpec {
                seed: run_seed,
                ..*spec
            })?),
            // File-backed worlds are fixed; only the serving stream reseeds.
            EnvSource::Ratings(env) => Box::new(env.reseeded(run_seed)),
            EnvSource::Classification(env) => Box::new(env.reseeded(run_seed)),
        })
    }
}

fn parse_grad_mode(name: &str) -> Result<MetaGradMode> {
    match name {
        "at_user_snapshots" => Ok(MetaGradMode::AtUserSnapshots),
        "at_meta_iterate" => Ok(MetaGradMode::AtMetaIterate),
        other => Err(CliError::Config(format!(
            "unknown meta_grad_mode '{other}'"
        ))),
    }
}

fn parse_meta_warm(name: &str) -> Result<MetaWarmStart> {
    match name {
        "from_previous" => Ok(MetaWarmStart::FromPrevious),
        "from_init" => Ok(MetaWarmStart::FromInit),
        other => Err(CliError::Config(format!(
            "unknown meta_warm_start '{other}'"
        ))),
    }
}

fn parse_user_warm(name: &str) -> Result<UserWarmStart> {
    match name {
        "from_meta" => Ok(UserWarmStart::FromMeta),
        "from_init" => Ok(UserWarmStart::FromInit),
        other => Err(CliError::Config(format!(
            "unknown user_warm_start '{other}'"
        ))),
    }
}

fn parse_snapshot_mode(name: &str) -> Result<SnapshotMode> {
    match name {
        "uniform" => Ok(SnapshotMode::UniformDraw),
        "latest-only" => Ok(SnapshotMode::LatestOnly),
        other => Err(CliError::Config(format!("unknown snapshot_mode '{other}'"))),
    }
}

fn minibatch_of(fraction: Option<f64>) -> MinibatchPolicy {
    match fraction {
        None => MinibatchPolicy::Full,
        Some(f) => MinibatchPolicy::RandomFraction(f),
    }
}

/// Build a policy instance for one run.
pub fn build_policy(
    cfg: &PolicyConfig,
    num_users: usize,
    arm_dim: usize,
    run_seed: u64,
) -> Result<Box<dyn Policy>> {
    let kind = cfg.kind()?;
    let net_seed = seed::component_seed(run_seed, "network-init");
    let policy_seed = seed::component_seed(run_seed, "policy-rng");
    let minibatch = minibatch_of(cfg.minibatch_fraction);
    Ok(match kind {
        PolicyKind::GroupAdaptive => {
            let mut train =
                TrainConfig::new(cfg.eta1, cfg.j1, minibatch, cfg.epsilon1, cfg.epsilon2)?;
            train.snapshot_mode = parse_snapshot_mode(&cfg.snapshot_mode)?;
            if let Some(cap) = cfg.max_step_norm {
                train.max_step_norm = cap;
            }
            let mb = MetaBanConfig {
                net: NetworkConfig::new(arm_dim, cfg.m, cfg.depth, net_seed)?,
                train,
                group: GroupConfig::new(cfg.nu, cfg.gamma)?,
                ucb: UcbConfig {
                    exploration_scale: cfg.alpha,
                    gradient_scale: cfg.beta_hat,
                    additive: cfg.z,
                    user_target_loss: cfg.epsilon1,
                    confidence: cfg.delta,
                    user_scale: cfg.c,
                    count_constant: cfg.count_constant,
                },
                meta_step_size: cfg.eta2,
                meta_iterations: cfg.j2,
                l1_weight: cfg.lambda,
                meta_minibatch: match cfg.meta_minibatch_count {
                    Some(n) => MinibatchPolicy::RandomCount(n),
                    None => minibatch_of(cfg.meta_minibatch_fraction),
                },
                meta_max_step_norm: cfg.meta_max_step_norm.unwrap_or(f64::INFINITY),
                meta_warm_start: parse_meta_warm(&cfg.meta_warm_start)?,
                group_cache: cfg.group_cache,
                user_warm_start: parse_user_warm(&cfg.user_warm_start)?,
                grad_mode: parse_grad_mode(&cfg.meta_grad_mode)?,
                seed: policy_seed,
            };
            Box::new(MetaBan::new(mb, num_users)?)
        }
        PolicyKind::NeuralOne | PolicyKind::NeuralIndividual => {
            let variant = if kind == PolicyKind::NeuralOne {
                NeuVariant::One
            } else {
                NeuVariant::Individual
            };
            let nc = NeuUcbConfig {
                net: NetworkConfig::new(arm_dim, cfg.m, cfg.depth, net_seed)?,
                exploration_scale: cfg.alpha,
                ridge: cfg.lambda,
                train_steps: cfg.train_steps,
                step_size: cfg.eta1,
                batch_cap: cfg.batch_cap,
                seed: policy_seed,
            };
            Box::new(NeuUcb::new(variant, nc, num_users)?)
        }
        PolicyKind::Linear => Box::new(LinUcbPolicy::new(
            LinUcbConfig {
                dim: arm_dim,
                ridge: cfg.lambda,
                exploration_scale: cfg.alpha,
            },
            num_users,
        )?),
    })
}

/// Execute one seeded run.
pub fn execute_run(
    source: &EnvSource,
    policy_cfg: &PolicyConfig,
    horizon: u64,
    base_seed: u64,
    run_index: usize,
) -> Result<RunOutcome> {
    let run_seed = seed::run_seed(base_seed, &policy_cfg.name, run_index);
    let env_seed = seed::env_seed(base_seed, run_index);
    let mut env = source.instantiate(env_seed)?;
    let mut policy = build_policy(policy_cfg, env.num_users(), env.arm_dim(), run_seed)?;
    policy.warm_start(&env.warm_start())?;

    let mut rows = Vec::with_capacity(horizon as usize);
    let mut cum_regret = 0.0;
    for t in 1..=horizon {
        let round = env.step(t);
        let decision = policy.choose(&round.arms)?;
        if decision.scores.iter().any(|s| !s.total.is_finite()) {
            return Err(CliError::Runtime(format!(
                "policy {} produced a non-finite score at round {t} \
                 (training diverged; lower the step sizes)",
                policy_cfg.name
            )));
        }
        let reward = round.feedback.realized[decision.chosen];
        let regret = regret_of(&round.feedback, decision.chosen)?;
        cum_regret += regret;
        let group_exact = match (&round.true_groups, decision.groups.get(decision.chosen)) {
            (Some(truth), Some(inferred)) => Some(inferred.members == truth[decision.chosen]),
            _ => None,
        };
        let mean_group_size = if decision.groups.is_empty() {
            0.0
        } else {
            decision.groups.iter().map(|g| g.size() as f64).sum::<f64>()
                / decision.groups.len() as f64
        };
        rows.push(TraceRow {
            t,
            arm: decision.chosen,
            reward,
            regret,
            cum_regret,
            group_exact,
            mean_group_size,
        });
        policy.learn(round.arms.serving, decision.chosen, reward)?;
    }
    Ok(RunOutcome {
        policy: policy_cfg.name.clone(),
        run_index,
        seed: run_seed,
        rows,
    })
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if jobs > 0 {
        builder = builder.num_threads(jobs);
    }
    builder
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

/// Run every (policy, run index) pair of the experiment. Outcomes come back
/// sorted by policy order then run index.
pub fn execute_all(cfg: &ExperimentConfig, source: &EnvSource) -> Result<Vec<RunOutcome>> {
    let tasks: Vec<(usize, usize)> = (0..cfg.policies.len())
        .flat_map(|p| (0..cfg.runs).map(move |r| (p, r)))
        .collect();
    let pool = thread_pool(cfg.jobs)?;
    let mut outcomes = pool.install(|| {
        tasks
            .par_iter()
            .map(|(p, r)| execute_run(source, &cfg.policies[*p], cfg.horizon, cfg.seed, *r))
            .collect::<Result<Vec<RunOutcome>>>()
    })?;
    // par_iter preserves order, but make the contract explicit.
    let order: BTreeMap<&str, usize> = cfg
        .policies
        .iter()
        .enumerate()
        .map(|(i, p)| (p.name.as_str(), i))
        .collect();
    outcomes.sort_by_key(|o| (order[o.policy.as_str()], o.run_index));
    Ok(outcomes)
}

/// Cumulative-regret checkpoints `T/10, 2T/10, ..., T` (deduplicated).
pub fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=10).map(|i| i * horizon / 10).filter(|c| *c > 0).collect();
    out.dedup();
    out
}

/// Mean and sample standard deviation (0 when n = 1).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(cfg: &ExperimentConfig, outcomes: &[RunOutcome]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for policy in &cfg.policies {
        let runs: Vec<&RunOutcome> = outcomes
            .iter()
            .filter(|o| o.policy == policy.name)
            .collect();
        for cp in checkpoints(cfg.horizon) {
            let values: Vec<f64> = runs
                .iter()
                .map(|o| o.rows[(cp - 1) as usize].cum_regret)
                .collect();
            let (mean, std) = mean_std(&values);
            rows.push(SummaryRow {
                policy: policy.name.clone(),
                checkpoint: cp,
                mean_cum_regret: mean,
                std_cum_regret: std,
            });
        }
    }
    rows
}

pub fn trace_path(out: &Path, policy: &str, seed: u64) -> PathBuf {
    out.join(format!("trace_{policy}_{seed}.csv"))
}

pub fn write_trace(path: &Path, outcome: &RunOutcome) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "t,policy,seed,arm,reward,regret,cum_regret,group_exact")?;
    for r in &outcome.rows {
        let exact = match r.group_exact {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            r.t, outcome.policy, outcome.seed, r.arm, r.reward, r.regret, r.cum_regret, exact
        )?;
    }
    Ok(())
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "policy,checkpoint,mean_cum_regret,std_cum_regret")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{}",
            r.policy, r.checkpoint, r.mean_cum_regret, r.std_cum_regret
        )?;
    }
    Ok(())
}

fn regret_series(cfg: &ExperimentConfig, outcomes: &[RunOutcome]) -> Vec<Series> {
    cfg.policies
        .iter()
        .map(|p| {
            let runs: Vec<&RunOutcome> = outcomes
                .iter()
                .filter(|o| o.policy == p.name)
                .collect();
            let horizon = cfg.horizon as usize;
            let mut mean = Vec::with_capacity(horizon);
            let mut std = Vec::with_capacity(horizon);
            for t in 0..horizon {
                let values: Vec<f64> = runs.iter().map(|o| o.rows[t].cum_regret).collect();
                let (m, s) = mean_std(&values);
                mean.push(m);
                std.push(s);
            }
            Series {
                label: p.name.clone(),
                mean,
                std,
            }
        })
        .collect()
}

/// Everything `run` produces on disk.
pub struct ExperimentReport {
    pub outcomes: Vec<RunOutcome>,
    pub summary: Vec<SummaryRow>,
    pub trace_files: Vec<PathBuf>,
}

/// Execute, then write one trace CSV per (policy, run), a summary CSV, and
/// the mean-regret SVG.
pub fn run_experiment(cfg: &ExperimentConfig, source: &EnvSource) -> Result<ExperimentReport> {
    let outcomes = execute_all(cfg, source)?;
    std::fs::create_dir_all(&cfg.out)?;
    let mut trace_files = Vec::new();
    for outcome in &outcomes {
        let path = trace_path(&cfg.out, &outcome.policy, outcome.seed);
        write_trace(&path, outcome)?;
        trace_files.push(path);
    }
    let summary = summarize(cfg, &outcomes);
    write_summary(&cfg.out.join("summary.csv"), &summary)?;
    let svg = render_regret_plot(&regret_series(cfg, &outcomes), "mean cumulative regret");
    std::fs::write(cfg.out.join("regret.svg"), svg)?;
    Ok(ExperimentReport {
        outcomes,
        summary,
        trace_files,
    })
}

/// Grid-search cells for alpha and lambda.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            alphas: vec![0.001, 0.01, 0.1, 1.0],
            lambdas: vec![0.01, 0.1, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub policy: String,
    pub alpha: f64,
    pub lambda: f64,
    pub mean_final_cum_regret: f64,
    pub std_final_cum_regret: f64,
}

pub struct GridReport {
    pub rows: Vec<GridRow>,
    pub best: Vec<GridRow>,
}

/// Run every (policy, alpha, lambda) cell with the experiment's run count;
/// report all cells plus the per-policy argmin of mean final cumulative
/// regret (ties broken toward the lexicographically smallest (alpha,
/// lambda)).
pub fn run_grid(cfg: &ExperimentConfig, source: &EnvSource, grid: &GridSpec) -> Result<GridReport> {
    if grid.alphas.is_empty() || grid.lambdas.is_empty() {
        return Err(CliError::Config("grid axes must be nonempty".into()));
    }
    let mut alphas = grid.alphas.clone();
    let mut lambdas = grid.lambdas.clone();
    alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());

    struct Cell {
        policy_index: usize,
        alpha: f64,
        lambda: f64,
        cfg: PolicyConfig,
    }
    let mut cells = Vec::new();
    for (policy_index, policy) in cfg.policies.iter().enumerate() {
        for alpha in &alphas {
            for lambda in &lambdas {
                let mut c = policy.clone();
                c.alpha = *alpha;
                c.lambda = *lambda;
                cells.push(Cell {
                    policy_index,
                    alpha: *alpha,
                    lambda: *lambda,
                    cfg: c,
                });
            }
        }
    }
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.runs).map(move |r| (c, r)))
        .collect();
    let pool = thread_pool(cfg.jobs)?;
    let finals: Vec<(usize, f64)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(c, r)| {
                execute_run(source, &cells[*c].cfg, cfg.horizon, cfg.seed, *r)
                    .map(|o| (*c, o.final_cum_regret()))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut by_cell: Vec<Vec<f64>> = vec![Vec::new(); cells.len()];
    for (c, value) in finals {
        by_cell[c].push(value);
    }

    let mut rows = Vec::new();
    let mut best: Vec<Option<GridRow>> = vec![None; cfg.policies.len()];
    for (cell, values) in cells.iter().zip(by_cell.iter()) {
        let (mean, std) = mean_std(values);
        let row = GridRow {
            policy: cfg.policies[cell.policy_index].name.clone(),
            alpha: cell.alpha,
            lambda: cell.lambda,
            mean_final_cum_regret: mean,
            std_final_cum_regret: std,
        };
        // Cells iterate in lexicographic (alpha, lambda) order per policy,
        // so a strict improvement test keeps the lowest pair on ties.
        let slot = &mut best[cell.policy_index];
        let better = match slot {
            Some(b) => mean < b.mean_final_cum_regret,
            None => true,
        };
        if better {
            *slot = Some(row.clone());
        }
        rows.push(row);
    }
    let best: Vec<GridRow> = best.into_iter().map(|b| b.expect("nonempty grid")).collect();

    std::fs::create_dir_all(&cfg.out)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(cfg.out.join("grid.csv"))?);
    writeln!(
        f,
        "policy,alpha,lambda,mean_final_cum_regret,std_final_cum_regret"
    )?;
    for r in &rows {
        writeln!(
            f,
            "{},{},{},{},{}",
            r.policy, r.alpha, r.lambda, r.mean_final_cum_regret, r.std_final_cum_regret
        )?;
    }
    drop(f);
    let mut f = std::io::BufWriter::new(std::fs::File::create(cfg.out.join("grid_best.csv"))?);
    writeln!(f, "policy,alpha,lambda,mean_final_cum_regret")?;
    for r in &best {
        writeln!(
            f,
            "{},{},{},{}",
            r.policy, r.alpha, r.lambda, r.mean_final_cum_regret
        )?;
    }
    Ok(GridReport { rows, best })
}

/// Per-round mean inferred group size of one ablation arm.
#[derive(Debug, Clone)]
pub struct GroupSizeSeries {
    pub nu: f64,
    /// Mean over runs and arms, indexed by round - 1.
    pub mean_size: Vec<f64>,
}

pub struct AblationReport {
    pub per_nu: Vec<(f64, Vec<RunOutcome>)>,
    pub group_sizes: Vec<GroupSizeSeries>,
}

/// Group-width ablation: rerun the group-adaptive policy once per `nu`
/// (same seeds, same environments), emit per-`nu` traces, a comparison
/// plot, and the mean inferred-group-size series.
pub fn run_ablation_nu(
    cfg: &ExperimentConfig,
    source: &EnvSource,
    nus: &[f64],
) -> Result<AblationReport> {
    if nus.is_empty() {
        return Err(CliError::Config("nu list must be nonempty".into()));
    }
    for nu in nus {
        if !(*nu > 1.0) {
            return Err(CliError::Config(format!("nu must be > 1, got {nu}")));
        }
    }
    let base_policy = cfg
        .policies
        .iter()
        .find(|p| matches!(p.kind(), Ok(PolicyKind::GroupAdaptive)))
        .cloned()
        .unwrap_or_else(|| PolicyConfig::named("meta-ban"));

    let mut per_nu = Vec::new();
    let mut group_sizes = Vec::new();
    let mut series = Vec::new();
    for nu in nus {
        let mut policy = base_policy.clone();
        policy.nu = *nu;
        let sub = ExperimentConfig {
            policies: vec![policy],
            out: cfg.out.join(format!("ablate_nu_{nu}")),
            ..cfg.clone()
        };
        let report = run_experiment(&sub, source)?;
        let horizon = cfg.horizon as usize;
        let mut mean_size = Vec::with_capacity(horizon);
        let mut mean = Vec::with_capacity(horizon);
        let mut std = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let sizes: Vec<f64> = report
                .outcomes
                .iter()
                .map(|o| o.rows[t].mean_group_size)
                .collect();
            mean_size.push(mean_std(&sizes).0);
            let regrets: Vec<f64> = report
                .outcomes
                .iter()
                .map(|o| o.rows[t].cum_regret)
                .collect();
            let (m, s) = mean_std(&regrets);
            mean.push(m);
            std.push(s);
        }
        series.push(Series {
            label: format!("nu={nu}"),
            mean,
            std,
        });
        group_sizes.push(GroupSizeSeries {
            nu: *nu,
            mean_size,
        });
        per_nu.push((*nu, report.outcomes));
    }

    std::fs::create_dir_all(&cfg.out)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(
        cfg.out.join("ablation_group_size.csv"),
    )?);
    writeln!(f, "nu,t,mean_group_size")?;
    for gs in &group_sizes {
        for (t, size) in gs.mean_size.iter().enumerate() {
            writeln!(f, "{},{},{}", gs.nu, t + 1, size)?;
        }
    }
    drop(f);
    let svg = render_regret_plot(&series, "group-width ablation");
    std::fs::write(cfg.out.join("ablation.svg"), svg)?;
    Ok(AblationReport {
        per_nu,
        group_sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(dir: &Path) -> ExperimentConfig {
        serde_json::from_str::<ExperimentConfig>(&format!(
            r#"{{
                "environment": {{"type": "synthetic", "users": 6, "groups": 2,
                                  "dim": 6, "arms": 3, "family": "linear"}},
                "policies": [
                    {{"name": "linucb", "alpha": 0.1}},
                    {{"name": "meta-ban", "m": 8, "j1": 5, "j2": 2, "eta1": 0.02, "eta2": 0.001}}
                ],
                "horizon": 12,
                "runs": 2,
                "seed": 11,
                "out": {:?}
            }}"#,
            dir.join("results")
        ))
        .unwrap()
    }

    #[test]
    fn trace_row_counts_and_schema() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path());
        let (source, _) = EnvSource::load(&cfg.environment, cfg.seed).unwrap();
        let report = run_experiment(&cfg, &source).unwrap();
        // 2 policies x 2 runs.
        assert_eq!(report.trace_files.len(), 4);
        for path in &report.trace_files {
            let text = std::fs::read_to_string(path).unwrap();
            let mut lines = text.lines();
            assert_eq!(
                lines.next().unwrap(),
                "t,policy,seed,arm,reward,regret,cum_regret,group_exact"
            );
            assert_eq!(lines.count(), 12);
        }
        assert!(dir.path().join("results/summary.csv").exists());
        assert!(dir.path().join("results/regret.svg").exists());
    }

    #[test]
    fn identical_seeds_give_byte_identical_traces() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let cfg1 = tiny_cfg(dir1.path());
        let cfg2 = tiny_cfg(dir2.path());
        let (s1, _) = EnvSource::load(&cfg1.environment, cfg1.seed).unwrap();
        let (s2, _) = EnvSource::load(&cfg2.environment, cfg2.seed).unwrap();
        let r1 = run_experiment(&cfg1, &s1).unwrap();
        let r2 = run_experiment(&cfg2, &s2).unwrap();
        for (a, b) in r1.trace_files.iter().zip(r2.trace_files.iter()) {
            assert_eq!(
                std::fs::read(a).unwrap(),
                std::fs::read(b).unwrap(),
                "{a:?} vs {b:?}"
            );
        }
    }

    #[test]
    fn cumulative_regret_is_nondecreasing() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path());
        let (source, _) = EnvSource::load(&cfg.environment, cfg.seed).unwrap();
        let outcomes = execute_all(&cfg, &source).unwrap();
        for o in &outcomes {
            for pair in o.rows.windows(2) {
                assert!(pair[1].cum_regret >= pair[0].cum_regret);
            }
        }
    }

    #[test]
    fn summary_means_match_trace_recomputation() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path());
        let (source, _) = EnvSource::load(&cfg.environment, cfg.seed).unwrap();
        let report = run_experiment(&cfg, &source).unwrap();
        for row in &report.summary {
            let values: Vec<f64> = report
                .outcomes
                .iter()
                .filter(|o| o.policy == row.policy)
                .map(|o| o.rows[(row.checkpoint - 1) as usize].cum_regret)
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            assert!((mean - row.mean_cum_regret).abs() < 1e-12);
        }
    }

    #[test]
    fn checkpoints_are_decile_rounds() {
        assert_eq!(checkpoints(2000).len(), 10);
        assert_eq!(checkpoints(2000)[0], 200);
        assert_eq!(checkpoints(10), vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        // Short horizons collapse duplicates.
        assert!(checkpoints(3).len() <= 3);
    }

    #[test]
    fn grid_reports_every_cell_and_lowest_lex_tie_break() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg(dir.path());
        cfg.policies.truncate(1); // linucb only, cheap
        cfg.horizon = 6;
        cfg.runs = 1;
        let (source, _) = EnvSource::load(&cfg.environment, cfg.seed).unwrap();
        let grid = GridSpec {
            alphas: vec![0.1, 0.01],
            lambdas: vec![1.0, 0.5],
        };
        let report = run_grid(&cfg, &source, &grid).unwrap();
        assert_eq!(report.rows.len(), 4);
        assert_eq!(report.best.len(), 1);
        let best = &report.best[0];
        let min = report
            .rows
            .iter()
            .map(|r| r.mean_final_cum_regret)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(best.mean_final_cum_regret, min);
        // All ties resolve to the lexicographically smallest pair.
        for r in &report.rows {
            if r.mean_final_cum_regret == min {
                assert!(
                    (best.alpha, best.lambda) <= (r.alpha, r.lambda),
                    "tie-break violated"
                );
            }
        }
        assert!(dir.path().join("results/grid.csv").exists());
        assert!(dir.path().join("results/grid_best.csv").exists());
    }

    #[test]
    fn ablation_rejects_bad_nu_and_emits_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg(dir.path());
        cfg.horizon = 6;
        cfg.runs = 1;
        let (source, _) = EnvSource::load(&cfg.environment, cfg.seed).unwrap();
        assert!(run_ablation_nu(&cfg, &source, &[1.0]).is_err());
        let report = run_ablation_nu(&cfg, &source, &[1.1, 5.0]).unwrap();
        assert_eq!(report.per_nu.len(), 2);
        assert_eq!(report.group_sizes.len(), 2);
        assert!(dir.path().join("results/ablation.svg").exists());
        assert!(dir.path().join("results/ablation_group_size.csv").exists());
        assert!(dir
            .path()
            .join("results/ablate_nu_1.1/summary.csv")
            .exists());
    }
}
