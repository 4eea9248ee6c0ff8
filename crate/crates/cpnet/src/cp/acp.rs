//! Aggregated conformal prediction: an ensemble of ICP runs whose p-values
//! are averaged per test sample and label.

use ndarray::Array2;
use rayon::prelude::*;

use crate::cp::icp::icp_pvalues;
use crate::cp::{PValueMatrix, PValueSource};
use crate::data::{DataSplit, LabeledDataset};
use crate::error::{Error, Result};
use crate::net::{train, Network, TrainingConfig};
use crate::seed::derive_seed;

/// Ensemble settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AcpConfig {
    /// Number of ICP members; 1 degenerates to a single ICP run.
    pub ensemble_count: usize,
    /// Master seed; member resamples, inits, and batch orders derive from
    /// it by member index.
    pub seed: u64,
    /// Fraction of the training pool each member holds out for calibration.
    pub calibration_fraction: f64,
    /// Train members on a thread pool. Results are identical either way;
    /// per-member wall clocks stay meaningful because each member is timed
    /// inside its own training loop.
    pub parallel: bool,
}

impl Default for AcpConfig {
    fn default() -> Self {
        Self {
            ensemble_count: 10,
            seed: 0,
            calibration_fraction: 1.0 / 3.0,
            parallel: false,
        }
    }
}

/// Aggregated p-values plus the timing breakdown.
#[derive(Debug, Clone)]
pub struct AcpOutput {
    pub pvalues: PValueMatrix,
    /// Training seconds per member, in member order. Their sum is the
    /// sequential training cost; `wall_seconds` is what actually elapsed.
    pub member_seconds: Vec<f64>,
    pub wall_seconds: f64,
}

/// Train one ensemble member and produce its intermediate ICP p-values.
///
/// The member draws its own stratified proper-train/calibration resample of
/// the training pool, trains a fresh network on it, and calibrates on the
/// held-out part. Exposed so a single member run can be compared against
/// [`acp_pvalues`] with `ensemble_count = 1`.
pub fn acp_member_run<L>(
    ds: &LabeledDataset,
    split: &DataSplit,
    hidden: &[usize],
    loss: &L,
    train_config: &TrainingConfig,
    acp_config: &AcpConfig,
    member: usize,
) -> Result<(PValueMatrix, f64)>
where
    L: Fn(&Array2<f64>, &[usize]) -> Result<(f64, Array2<f64>)> + Sync + ?Sized,
{
    let member_seed = derive_seed(acp_config.seed, member as u64);
    let member_split = split.carve_calibration(
        &ds.labels,
        acp_config.calibration_fraction,
        derive_seed(member_seed, 0),
    )?;
    let mut net = Network::init(
        ds.feature_dim(),
        ds.class_count,
        hidden,
        derive_seed(member_seed, 1),
    )?;
    let member_config = TrainingConfig {
        seed: derive_seed(member_seed, 2),
        ..*train_config
    };
    let stats = train(&mut net, ds, &member_split, loss, &member_config)?;
    let pvalues = icp_pvalues(&net, ds, &member_split)?;
    Ok((pvalues, stats.training_seconds))
}

/// Aggregated conformal p-values: the arithmetic mean of `ensemble_count`
/// independent ICP member matrices, in member order.
pub fn acp_pvalues<L>(
    ds: &LabeledDataset,
    split: &DataSplit,
    hidden: &[usize],
    loss: &L,
    train_config: &TrainingConfig,
    acp_config: &AcpConfig,
) -> Result<AcpOutput>
where
    L: Fn(&Array2<f64>, &[usize]) -> Result<(f64, Array2<f64>)> + Sync + ?Sized,
{
    if acp_config.ensemble_count == 0 {
        return Err(Error::InvalidParameter(
            "ensemble_count must be >= 1".into(),
        ));
    }
    let started = std::time::Instant::now();
    let run = |member: usize| {
        acp_member_run(ds, split, hidden, loss, train_config, acp_config, member).map_err(
            |e| Error::EnsembleMember {
                member,
                source: Box::new(e),
            },
        )
    };
    let members: Vec<(PValueMatrix, f64)> = if acp_config.parallel {
        (0..acp_config.ensemble_count)
            .into_par_iter()
            .map(run)
            .collect::<Result<_>>()?
    } else {
        (0..acp_config.ensemble_count)
            .map(run)
            .collect::<Result<_>>()?
    };
    let wall_seconds = started.elapsed().as_secs_f64();

    let mut sum = Array2::<f64>::zeros(members[0].0.values.dim());
    let mut member_seconds = Vec::with_capacity(members.len());
    for (matrix, seconds) in &members {
        sum += &matrix.values;
        member_seconds.push(*seconds);
    }
    sum /= members.len() as f64;

    Ok(AcpOutput {
        pvalues: PValueMatrix {
            values: sum,
            source: PValueSource::Acp(acp_config.ensemble_count),
        },
        member_seconds,
        wall_seconds,
    })
}
