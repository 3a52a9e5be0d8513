//! `metaban` command-line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use metaban_cli::config::ExperimentConfig;
use metaban_cli::runner::{self, EnvSource, GridSpec};
use metaban_cli::{ingest, CliError};

#[derive(Parser)]
#[command(
    name = "metaban",
    about = "Collaborative-filtering bandit simulator: group-adaptive meta-learning \
             policy, neural/linear UCB baselines, seeded experiment harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's number of runs per policy.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the config's horizon (rounds per run).
    #[arg(long)]
    horizon: Option<u64>,
    /// Maximum concurrent runs (0 = one per core).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment; emit per-run traces, a summary CSV,
    /// and a regret plot.
    Run(CommonArgs),
    /// Grid-search alpha and lambda per policy; emit the full cell report
    /// and the per-policy best cells.
    Grid {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated alpha grid.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.001, 0.01, 0.1, 1.0])]
        alpha_grid: Vec<f64>,
        /// Comma-separated lambda grid.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.1, 1.0])]
        lambda_grid: Vec<f64>,
    },
    /// Rerun the group-adaptive policy across a list of nu values; emit
    /// per-nu traces, the comparison plot, and group-size series.
    AblateNu {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated nu values (each > 1).
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.1, 5.0])]
        nu: Vec<f64>,
    },
    /// Ingest a ratings CSV: extract item features by truncated SVD and
    /// write them as a features CSV (reusable via the config's `features`).
    Ingest {
        /// Ratings CSV (user_id,item_id,rating).
        #[arg(long)]
        ratings: PathBuf,
        /// Output features CSV path.
        #[arg(long, default_value = "features.csv")]
        features_out: PathBuf,
        #[arg(long, default_value_t = 50)]
        top_users: usize,
        #[arg(long, default_value_t = 100)]
        top_items: usize,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        /// Ratings strictly below this threshold count as reward 1.
        #[arg(long, default_value_t = 2.0)]
        threshold: f64,
        #[arg(long, default_value_t = 10)]
        arms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::from_path(&common.config)?;
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = common.runs {
        cfg.runs = runs;
    }
    if let Some(horizon) = common.horizon {
        cfg.horizon = horizon;
    }
    if let Some(jobs) = common.jobs {
        cfg.jobs = jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_source(cfg: &ExperimentConfig) -> Result<EnvSource, CliError> {
    let (source, warnings) = EnvSource::load(&cfg.environment, cfg.seed)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok(source)
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(common) => {
            let cfg = load_config(&common)?;
            let source = load_source(&cfg)?;
            let report = runner::run_experiment(&cfg, &source)?;
            println!(
                "wrote {} trace files, summary.csv, regret.svg to {}",
                report.trace_files.len(),
                cfg.out.display()
            );
            for row in report
                .summary
                .iter()
                .filter(|r| r.checkpoint == cfg.horizon)
            {
                println!(
                    "{:<12} final cumulative regret {:.3} +- {:.3}",
                    row.policy, row.mean_cum_regret, row.std_cum_regret
                );
            }
            Ok(())
        }
        Command::Grid {
            common,
            alpha_grid,
            lambda_grid,
        } => {
            let cfg = load_config(&common)?;
            let source = load_source(&cfg)?;
            let report = runner::run_grid(
                &cfg,
                &source,
                &GridSpec {
                    alphas: alpha_grid,
                    lambdas: lambda_grid,
                },
            )?;
            println!(
                "wrote grid.csv ({} cells) and grid_best.csv to {}",
                report.rows.len(),
                cfg.out.display()
            );
            for b in &report.best {
                println!(
                    "{:<12} best alpha={} lambda={} (mean final regret {:.3})",
                    b.policy, b.alpha, b.lambda, b.mean_final_cum_regret
                );
            }
            Ok(())
        }
        Command::AblateNu { common, nu } => {
            let cfg = load_config(&common)?;
            let source = load_source(&cfg)?;
            let report = runner::run_ablation_nu(&cfg, &source, &nu)?;
            println!(
                "wrote {} nu variants, ablation.svg, ablation_group_size.csv to {}",
                report.per_nu.len(),
                cfg.out.display()
            );
            for (nu, outcomes) in &report.per_nu {
                let finals: Vec<f64> = outcomes.iter().map(|o| o.final_cum_regret()).collect();
                let mean = finals.iter().sum::<f64>() / finals.len() as f64;
                println!("nu={nu:<6} mean final cumulative regret {mean:.3}");
            }
            Ok(())
        }
        Command::Ingest {
            ratings,
            features_out,
            top_users,
            top_items,
            dim,
            threshold,
            arms,
            seed,
        } => {
            use metaban::env::rating::{RatingEnv, RatingSpec};
            use metaban::env::Environment;
            let records = ingest::read_ratings(&ratings)?;
            let spec = RatingSpec {
                top_users,
                top_items,
                feature_dim: dim,
                reward_threshold: threshold,
                arms,
                seed,
            };
            let (env, warnings) = RatingEnv::from_records(&records, &spec)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            ingest::write_features(&features_out, env.item_keys(), env.item_features(), dim)?;
            println!(
                "ingested {} ratings: {} eligible users, {} items, dim {}; features -> {}",
                records.len(),
                env.num_users(),
                env.item_keys().len(),
                dim,
                features_out.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
