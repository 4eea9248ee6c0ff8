//! Run manifest: enough to reproduce a run and audit what it produced.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, ScenarioKind};
use crate::error::CliResult;
use crate::scenario::{file_name, write_json, IterationFailure, ScenarioOutcome};

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: &'static str,
    experiment: &'a str,
    scenario: String,
    dataset: &'a str,
    /// SHA-256 of the config file bytes; re-running the same config on the
    /// same platform reproduces every numeric output (wall-clock timing
    /// fields excepted).
    config_sha256: &'a str,
    master_seed: u64,
    run_seeds: &'a [u64],
    files: &'a [String],
    failures: &'a [IterationFailure],
}

pub fn write_manifest(
    config: &ExperimentConfig,
    kind: ScenarioKind,
    dataset: &str,
    config_sha256: &str,
    run_seeds: &[u64],
    outcome: &ScenarioOutcome,
    out_dir: &Path,
) -> CliResult<PathBuf> {
    let mut files = outcome.files.clone();
    files.sort();
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        experiment: &config.name,
        scenario: kind.to_string(),
        dataset,
        config_sha256,
        master_seed: config.master_seed,
        run_seeds,
        files: &files,
        failures: &outcome.failures,
    };
    let path = out_dir.join("manifest.json");
    write_json(&path, &manifest)?;
    let _ = file_name(&path);
    Ok(path)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
