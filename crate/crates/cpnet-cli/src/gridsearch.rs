//! Exhaustive loss-weight grid search scored by miscalibration.

use std::fs;
use std::io::Write;
use std::path::Path;

use cpnet::{
    conformal_loss, derive_seed, miscalibration, nn_pvalues, train, LossWeights, Network,
};
use ndarray::Array2;

use crate::config::ExperimentConfig;
use crate::dataset::PreparedData;
use crate::error::{CliError, CliResult};
use crate::scenario::write_json;

/// All weight combinations in enumeration order: the cartesian product of
/// the candidate lists, cycling the last axis fastest.
pub fn candidates(config: &ExperimentConfig) -> Vec<LossWeights> {
    let base = config.loss;
    let gs = config.gridsearch.clone().unwrap_or_default();
    let axis = |list: &Option<Vec<f64>>, fallback: f64| -> Vec<f64> {
        list.clone().unwrap_or_else(|| vec![fallback])
    };
    let w_false = axis(&gs.w_false, base.w_false);
    let w_true = axis(&gs.w_true, base.w_true);
    let w_mean = axis(&gs.w_mean, base.w_mean);
    let w_var = axis(&gs.w_var, base.w_var);
    let w_l2 = axis(&gs.w_l2, base.w_l2);
    let w_huber = axis(&gs.w_huber, base.w_huber);
    let huber_delta = axis(&gs.huber_delta, base.huber_delta);

    let mut out = Vec::new();
    for &wf in &w_false {
        for &wt in &w_true {
            for &wm in &w_mean {
                for &wv in &w_var {
                    for &wl in &w_l2 {
                        for &wh in &w_huber {
                            for &hd in &huber_delta {
                                out.push(LossWeights {
                                    w_false: wf,
                                    w_true: wt,
                                    w_mean: wm,
                                    w_var: wv,
                                    w_l2: wl,
                                    w_huber: wh,
                                    huber_delta: hd,
                                    ..base
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Train one direct-NN model per weight combination, score each by
/// miscalibration on the test partition, and emit the argmin (ties broken
/// by enumeration order) plus a normalized-score CSV.
pub fn run_grid_search(
    config: &ExperimentConfig,
    data: &PreparedData,
    out_dir: &Path,
) -> CliResult<LossWeights> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", out_dir.display())))?;
    let grid = config.report.grid()?;
    let combos = candidates(config);
    let test_labels: Vec<usize> = data.split.test.iter().map(|&r| data.ds.labels[r]).collect();

    let mut scores = Vec::with_capacity(combos.len());
    for (k, weights) in combos.iter().enumerate() {
        weights
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        let seed = derive_seed(config.master_seed, k as u64);
        let w = *weights;
        let loss = move |o: &Array2<f64>, l: &[usize]| conformal_loss(o, l, &w);
        let mut net = Network::init(
            data.ds.feature_dim(),
            data.ds.class_count,
            &config.training.hidden,
            derive_seed(seed, 1),
        )
        .map_err(|e| CliError::runtime(e.to_string()))?;
        let train_config = config.training.to_training_config(derive_seed(seed, 2));
        train(&mut net, &data.ds, &data.split, &loss, &train_config)
            .map_err(|e| CliError::runtime(e.to_string()))?;
        let p = nn_pvalues(&net, &data.ds, &data.split)
            .map_err(|e| CliError::runtime(e.to_string()))?;
        let score = miscalibration(&p, &test_labels, &grid)
            .map_err(|e| CliError::runtime(e.to_string()))?;
        scores.push(score);
    }

    let best_index = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite scores"))
        .map(|(i, _)| i)
        .expect("non-empty grid");

    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;

    let csv_path = out_dir.join("gridsearch.csv");
    let mut buf = Vec::new();
    writeln!(
        buf,
        "index,w_false,w_true,w_mean,w_var,w_l2,w_huber,huber_delta,miscalibration,normalized"
    )
    .expect("vec write");
    for (k, (w, score)) in combos.iter().zip(&scores).enumerate() {
        let normalized = if span > 0.0 { (score - lo) / span } else { 0.0 };
        writeln!(
            buf,
            "{k},{},{},{},{},{},{},{},{score},{normalized}",
            w.w_false, w.w_true, w.w_mean, w.w_var, w.w_l2, w.w_huber, w.huber_delta
        )
        .expect("vec write");
    }
    fs::write(&csv_path, buf)
        .map_err(|e| CliError::runtime(format!("{}: {e}", csv_path.display())))?;

    let best = combos[best_index];
    write_json(&out_dir.join("best_weights.json"), &best)?;
    println!(
        "grid search: {} combination(s); best #{best_index} with miscalibration {:.4} pp",
        combos.len(),
        scores[best_index]
    );
    println!(
        "  w_false={} w_true={} w_mean={} w_var={} w_l2={} w_huber={} huber_delta={}",
        best.w_false, best.w_true, best.w_mean, best.w_var, best.w_l2, best.w_huber,
        best.huber_delta
    );
    Ok(best)
}
