//! Scenario execution: direct-NN iterations, ICP iterations, and the ACP
//! ensemble-size sweep, with reports, curves, timing, and a manifest
//! written under one output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cpnet::{
    acp_pvalues, conformal_loss, derive_seed, evaluate, icp_pvalues, nn_pvalues, train,
    AcpConfig, CurvePoint, EvaluationReport, LabeledDataset, Network, PValueMatrix,
    SignificanceGrid,
};
use ndarray::Array2;
use serde::Serialize;

use crate::config::{ExperimentConfig, ScenarioKind};
use crate::dataset::PreparedData;
use crate::error::{CliError, CliResult};
use crate::manifest::write_manifest;

/// Wall-clock bookkeeping for one run.
#[derive(Debug, Clone, Serialize)]
pub struct TimingEntry {
    pub model: String,
    pub index: usize,
    pub training_seconds: f64,
    /// Per-member training seconds for ACP runs; their sum is the
    /// sequential cost, `wall_seconds` the elapsed one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub member_seconds: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationFailure {
    pub model: String,
    pub index: usize,
    pub seed: u64,
    pub error: String,
}

pub struct ScenarioOutcome {
    pub reports: Vec<EvaluationReport>,
    pub timings: Vec<TimingEntry>,
    pub failures: Vec<IterationFailure>,
    pub files: Vec<String>,
}

pub fn run_scenario(
    config: &ExperimentConfig,
    kind: ScenarioKind,
    data: &PreparedData,
    out_dir: &Path,
    config_sha256: &str,
    emit_pvalues: bool,
) -> CliResult<()> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", out_dir.display())))?;

    let grid = config.report.grid()?;
    let levels = &config.report.significance_levels;
    let weights = config.loss;
    let loss = move |o: &Array2<f64>, l: &[usize]| conformal_loss(o, l, &weights);

    let mut outcome = ScenarioOutcome {
        reports: Vec::new(),
        timings: Vec::new(),
        failures: Vec::new(),
        files: Vec::new(),
    };
    let test_labels: Vec<usize> = data.split.test.iter().map(|&r| data.ds.labels[r]).collect();
    let mut seeds = Vec::new();

    match kind {
        ScenarioKind::DirectNn | ScenarioKind::Icp => {
            let model = if kind == ScenarioKind::DirectNn {
                "direct-nn"
            } else {
                "icp"
            };
            for index in 0..config.scenario.iterations {
                let seed = derive_seed(config.master_seed, index as u64);
                seeds.push(seed);
                let run = run_point_iteration(config, kind, data, &loss, seed, &test_labels);
                match run {
                    Ok((p, training_seconds)) => {
                        match finish_iteration(
                            &p,
                            &test_labels,
                            levels,
                            &grid,
                            &data.ds,
                            model,
                            index,
                            training_seconds,
                            out_dir,
                            emit_pvalues,
                            &mut outcome,
                        ) {
                            Ok(()) => {}
                            Err(e) => log_failure(&mut outcome, model, index, seed, e),
                        }
                    }
                    Err(e) => log_failure(&mut outcome, model, index, seed, e),
                }
            }
        }
        ScenarioKind::Acp => {
            for n in config.scenario.ensemble_min..=config.scenario.ensemble_max {
                let seed = derive_seed(config.master_seed, n as u64);
                seeds.push(seed);
                let model = format!("acp-{n}");
                let acp_config = AcpConfig {
                    ensemble_count: n,
                    seed,
                    calibration_fraction: config.split.calibration_fraction,
                    parallel: config.scenario.parallel,
                };
                let train_config = config.training.to_training_config(seed);
                match acp_pvalues(
                    &data.ds,
                    &data.split,
                    &config.training.hidden,
                    &loss,
                    &train_config,
                    &acp_config,
                ) {
                    Ok(out) => {
                        let sequential: f64 = out.member_seconds.iter().sum();
                        outcome.timings.push(TimingEntry {
                            model: model.clone(),
                            index: n,
                            training_seconds: sequential,
                            member_seconds: Some(out.member_seconds.clone()),
                            wall_seconds: Some(out.wall_seconds),
                        });
                        match finish_acp_run(
                            &out.pvalues,
                            &test_labels,
                            levels,
                            &grid,
                            &data.ds,
                            &model,
                            n,
                            sequential,
                            out_dir,
                            emit_pvalues,
                            &mut outcome,
                        ) {
                            Ok(()) => {}
                            Err(e) => log_failure(&mut outcome, &model, n, seed, e),
                        }
                    }
                    Err(e) => log_failure(
                        &mut outcome,
                        &model,
                        n,
                        seed,
                        CliError::runtime(e.to_string()),
                    ),
                }
            }
        }
    }

    if outcome.reports.is_empty() {
        return Err(CliError::runtime(format!(
            "scenario {kind} produced no successful iterations ({} failures)",
            outcome.failures.len()
        )));
    }

    // aggregate + bookkeeping files
    let aggregate = aggregate_reports(&outcome.reports);
    let aggregate_path = out_dir.join(format!("aggregate_{kind}.json"));
    write_json(&aggregate_path, &aggregate)?;
    outcome.files.push(file_name(&aggregate_path));

    let timing_path = out_dir.join("timing.json");
    write_json(&timing_path, &outcome.timings)?;
    outcome.files.push(file_name(&timing_path));

    let manifest_path = write_manifest(
        config,
        kind,
        &data.ds.name,
        config_sha256,
        &seeds,
        &outcome,
        out_dir,
    )?;
    println!(
        "{kind}: {} run(s), {} failure(s); artifacts in {}",
        outcome.reports.len(),
        outcome.failures.len(),
        out_dir.display()
    );
    let _ = manifest_path;
    Ok(())
}

/// One direct-NN or ICP iteration: derive sub-seeds, train, produce
/// p-values.
fn run_point_iteration<L>(
    config: &ExperimentConfig,
    kind: ScenarioKind,
    data: &PreparedData,
    loss: &L,
    seed: u64,
    _test_labels: &[usize],
) -> CliResult<(PValueMatrix, f64)>
where
    L: Fn(&Array2<f64>, &[usize]) -> cpnet::Result<(f64, Array2<f64>)> + Sync,
{
    let split = match kind {
        ScenarioKind::DirectNn => data.split.clone(),
        ScenarioKind::Icp => data
            .split
            .carve_calibration(
                &data.ds.labels,
                config.split.calibration_fraction,
                derive_seed(seed, 0),
            )
            .map_err(|e| CliError::runtime(e.to_string()))?,
        ScenarioKind::Acp => unreachable!("acp handled separately"),
    };
    let mut net = Network::init(
        data.ds.feature_dim(),
        data.ds.class_count,
        &config.training.hidden,
        derive_seed(seed, 1),
    )
    .map_err(|e| CliError::runtime(e.to_string()))?;
    let train_config = config.training.to_training_config(derive_seed(seed, 2));
    let stats = train(&mut net, &data.ds, &split, loss, &train_config)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    if stats.short_batch_dropped {
        eprintln!("note: a trailing single-sample batch was dropped (seed {seed})");
    }
    let p = match kind {
        ScenarioKind::DirectNn => nn_pvalues(&net, &data.ds, &split),
        ScenarioKind::Icp => icp_pvalues(&net, &data.ds, &split),
        ScenarioKind::Acp => unreachable!(),
    }
    .map_err(|e| CliError::runtime(e.to_string()))?;
    Ok((p, stats.training_seconds))
}

#[allow(clippy::too_many_arguments)]
fn finish_iteration(
    p: &PValueMatrix,
    test_labels: &[usize],
    levels: &[f64],
    grid: &SignificanceGrid,
    ds: &LabeledDataset,
    model: &str,
    index: usize,
    training_seconds: f64,
    out_dir: &Path,
    emit_pvalues: bool,
    outcome: &mut ScenarioOutcome,
) -> CliResult<()> {
    let report = evaluate(
        p,
        test_labels,
        levels,
        grid,
        ds.name.clone(),
        model,
        training_seconds,
    )
    .map_err(|e| CliError::runtime(e.to_string()))?;
    outcome.timings.push(TimingEntry {
        model: model.to_owned(),
        index,
        training_seconds,
        member_seconds: None,
        wall_seconds: None,
    });
    write_run_files(&report, p, model, index, out_dir, emit_pvalues, outcome)
}

#[allow(clippy::too_many_arguments)]
fn finish_acp_run(
    p: &PValueMatrix,
    test_labels: &[usize],
    levels: &[f64],
    grid: &SignificanceGrid,
    ds: &LabeledDataset,
    model: &str,
    n: usize,
    sequential_seconds: f64,
    out_dir: &Path,
    emit_pvalues: bool,
    outcome: &mut ScenarioOutcome,
) -> CliResult<()> {
    let report = evaluate(
        p,
        test_labels,
        levels,
        grid,
        ds.name.clone(),
        model,
        sequential_seconds,
    )
    .map_err(|e| CliError::runtime(e.to_string()))?;
    write_run_files(&report, p, model, n, out_dir, emit_pvalues, outcome)
}

fn write_run_files(
    report: &EvaluationReport,
    p: &PValueMatrix,
    model: &str,
    index: usize,
    out_dir: &Path,
    emit_pvalues: bool,
    outcome: &mut ScenarioOutcome,
) -> CliResult<()> {
    let report_path = out_dir.join(format!("report_{model}_{index:02}.json"));
    report
        .write_json(&report_path)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    outcome.files.push(file_name(&report_path));

    let curve_path = out_dir.join(format!("curve_{model}_{index:02}.csv"));
    report
        .write_curve_csv(&curve_path)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    outcome.files.push(file_name(&curve_path));

    if emit_pvalues {
        let pv_path = out_dir.join(format!("pvalues_{model}_{index:02}.csv"));
        let file = fs::File::create(&pv_path)
            .map_err(|e| CliError::runtime(format!("{}: {e}", pv_path.display())))?;
        p.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| CliError::runtime(e.to_string()))?;
        outcome.files.push(file_name(&pv_path));
    }

    outcome.reports.push(report.clone());
    Ok(())
}

fn log_failure(
    outcome: &mut ScenarioOutcome,
    model: &str,
    index: usize,
    seed: u64,
    error: CliError,
) {
    eprintln!("{model} run {index} (seed {seed}) failed: {error}");
    outcome.failures.push(IterationFailure {
        model: model.to_owned(),
        index,
        seed,
        error: error.to_string(),
    });
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

fn stat(values: impl Iterator<Item = f64> + Clone) -> Stat {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let min = values.clone().fold(f64::INFINITY, f64::min);
    let max = values.fold(f64::NEG_INFINITY, f64::max);
    Stat { mean, min, max }
}

#[derive(Debug, Serialize)]
pub struct AggregateReport {
    pub dataset: String,
    pub models: Vec<String>,
    pub runs: usize,
    /// Per-metric mean and min-max range across runs; keys like
    /// `error@0.05` or `miscalibration`.
    pub metrics: BTreeMap<String, Stat>,
    /// Pointwise mean calibration curve.
    pub mean_curve: Vec<CurvePoint>,
}

pub fn aggregate_reports(reports: &[EvaluationReport]) -> AggregateReport {
    let mut metrics = BTreeMap::new();
    let levels: Vec<f64> = reports[0].rates.iter().map(|r| r.epsilon).collect();
    for (k, &eps) in levels.iter().enumerate() {
        metrics.insert(
            format!("error@{eps}"),
            stat(reports.iter().map(move |r| r.rates[k].error)),
        );
        metrics.insert(
            format!("empty@{eps}"),
            stat(reports.iter().map(move |r| r.rates[k].empty)),
        );
        metrics.insert(
            format!("single@{eps}"),
            stat(reports.iter().map(move |r| r.rates[k].single)),
        );
        metrics.insert(
            format!("multi@{eps}"),
            stat(reports.iter().map(move |r| r.rates[k].multi)),
        );
        metrics.insert(
            format!("avg_set_size@{eps}"),
            stat(reports.iter().map(move |r| r.rates[k].avg_set_size)),
        );
    }
    metrics.insert(
        "ks_statistic".into(),
        stat(reports.iter().map(|r| r.ks_statistic)),
    );
    metrics.insert(
        "ks_pvalue".into(),
        stat(reports.iter().map(|r| r.ks_pvalue)),
    );
    metrics.insert(
        "miscalibration".into(),
        stat(reports.iter().map(|r| r.miscalibration)),
    );
    metrics.insert(
        "fuzziness".into(),
        stat(reports.iter().map(|r| r.fuzziness)),
    );
    metrics.insert(
        "training_seconds".into(),
        stat(reports.iter().map(|r| r.training_seconds)),
    );

    let curve_len = reports[0].calibration_curve.len();
    let mean_curve = (0..curve_len)
        .map(|i| CurvePoint {
            epsilon: reports[0].calibration_curve[i].epsilon,
            error: reports
                .iter()
                .map(|r| r.calibration_curve[i].error)
                .sum::<f64>()
                / reports.len() as f64,
        })
        .collect();

    let mut models: Vec<String> = Vec::new();
    for r in reports {
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
    }
    AggregateReport {
        dataset: reports[0].dataset.clone(),
        models,
        runs: reports.len(),
        metrics,
        mean_curve,
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::runtime(format!("serialize {}: {e}", path.display())))?;
    fs::write(path, json).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

pub fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn out_dir_for(
    config: &ExperimentConfig,
    flag: Option<&Path>,
    kind: ScenarioKind,
) -> CliResult<PathBuf> {
    if let Ok(dir) = std::env::var("CPNET_OUT_DIR") {
        return Ok(PathBuf::from(dir));
    }
    if let Some(dir) = flag {
        return Ok(dir.to_owned());
    }
    if let Some(dir) = &config.output_dir {
        return Ok(dir.clone());
    }
    Ok(PathBuf::from("runs").join(format!("{}-{kind}", config.name)))
}
