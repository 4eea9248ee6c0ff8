//! `cpnet`: config-driven experiment runner for one-step conformal
//! prediction approximation and its ICP/ACP baselines.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure.

mod compare;
mod config;
mod dataset;
mod error;
mod gridsearch;
mod manifest;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cpnet::{
    baseline_accuracy, softmax_cross_entropy, train, Activation, EvaluationReport, Network,
};

use crate::config::{ExperimentConfig, ScenarioKind};
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "cpnet", version, about = "one-step conformal prediction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load the configured dataset and print ingestion diagnostics.
    IngestCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train the softmax-head reference network and print test accuracy.
    Baseline {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a scenario (direct_nn iterations, icp iterations, or the acp
    /// ensemble sweep) and write reports under the output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the scenario kind from the config file.
        #[arg(long, value_enum)]
        scenario: Option<ScenarioKind>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also export every run's p-value matrix as CSV.
        #[arg(long)]
        emit_pvalues: bool,
    },
    /// Exhaustive loss-weight search scored by miscalibration.
    GridSearch {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Align stored reports into a comparison table (CSV + text).
    Compare {
        /// Report JSON files produced by `run`.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Significance level of the table rows.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// Re-emit `epsilon,error` calibration-curve CSVs from stored reports.
    Curves {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cpnet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::IngestCheck { config } => ingest_check(&config),
        Command::Baseline { config } => baseline(&config),
        Command::Run {
            config,
            scenario,
            out,
            emit_pvalues,
        } => {
            let (cfg, sha) = load_config(&config)?;
            let kind = scenario.unwrap_or(cfg.scenario.kind);
            let out_dir = scenario::out_dir_for(&cfg, out.as_deref(), kind)?;
            let data = dataset::load_dataset(&cfg)?;
            scenario::run_scenario(&cfg, kind, &data, &out_dir, &sha, emit_pvalues)
        }
        Command::GridSearch { config, out } => {
            let (cfg, _) = load_config(&config)?;
            if cfg.gridsearch.is_none() {
                return Err(CliError::config(
                    "config has no [gridsearch] section with candidate lists",
                ));
            }
            let out_dir = scenario::out_dir_for(&cfg, out.as_deref(), cfg.scenario.kind)?;
            let data = dataset::load_dataset(&cfg)?;
            gridsearch::run_grid_search(&cfg, &data, &out_dir).map(|_| ())
        }
        Command::Compare {
            reports,
            out,
            epsilon,
        } => {
            let loaded = load_reports(&reports)?;
            let table = compare::build_table(&loaded, epsilon)?;
            print!("{}", table.to_text());
            if let Some(dir) = resolve_out(out) {
                table.write(&dir)?;
                println!("written to {}", dir.display());
            }
            Ok(())
        }
        Command::Curves { reports, out } => {
            let loaded = load_reports(&reports)?;
            let dir = resolve_out(out).unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)
                .map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
            for r in &loaded {
                let name = format!(
                    "curve_{}_{}.csv",
                    sanitize(&r.model),
                    sanitize(&r.dataset)
                );
                let path = dir.join(name);
                r.write_curve_csv(&path)
                    .map_err(|e| CliError::runtime(e.to_string()))?;
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn load_config(path: &PathBuf) -> CliResult<(ExperimentConfig, String)> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = ExperimentConfig::load(path)?;
    Ok((cfg, manifest::sha256_hex(&bytes)))
}

fn load_reports(paths: &[PathBuf]) -> CliResult<Vec<EvaluationReport>> {
    paths
        .iter()
        .map(|p| {
            EvaluationReport::read_json(p)
                .map_err(|e| CliError::config(format!("{}: {e}", p.display())))
        })
        .collect()
}

/// Output directory for the file-emitting subcommands: the environment
/// override wins, then the flag.
fn resolve_out(flag: Option<PathBuf>) -> Option<PathBuf> {
    if let Ok(dir) = std::env::var("CPNET_OUT_DIR") {
        return Some(PathBuf::from(dir));
    }
    flag
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_alphanumeric() { c } else { '-' })
        .collect()
}

fn ingest_check(config_path: &PathBuf) -> CliResult<()> {
    let (cfg, _) = load_config(config_path)?;
    let data = dataset::load_dataset(&cfg)?;
    let ds = &data.ds;
    let lo = ds.features.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ds
        .features
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    println!("dataset:      {}", ds.name);
    println!("samples:      {}", ds.len());
    println!("features:     {}", ds.feature_dim());
    println!("classes:      {}", ds.class_count);
    println!("class counts: {:?}", ds.class_counts());
    println!(
        "partitions:   train {} / calibration {} / test {}",
        data.split.proper_train.len(),
        data.split.calibration.len(),
        data.split.test.len()
    );
    println!("feature range: [{lo:.4}, {hi:.4}]");
    Ok(())
}

fn baseline(config_path: &PathBuf) -> CliResult<()> {
    let (cfg, _) = load_config(config_path)?;
    let data = dataset::load_dataset(&cfg)?;
    let mut net = Network::init_with_output(
        data.ds.feature_dim(),
        data.ds.class_count,
        &cfg.training.hidden,
        Activation::Identity,
        cfg.master_seed,
    )
    .map_err(|e| CliError::runtime(e.to_string()))?;
    let train_config = cfg.training.to_training_config(cfg.master_seed);
    let stats = train(
        &mut net,
        &data.ds,
        &data.split,
        &softmax_cross_entropy,
        &train_config,
    )
    .map_err(|e| CliError::runtime(e.to_string()))?;
    let acc = baseline_accuracy(&net, &data.ds, &data.split)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    println!(
        "{}: test accuracy {:.2}% ({} train rows, {:.2}s)",
        data.ds.name,
        100.0 * acc,
        data.split.proper_train.len(),
        stats.training_seconds
    );
    Ok(())
}
