//! Mini-batch training loop and the argmax accuracy check.

use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{DataSplit, LabeledDataset};
use crate::error::{Error, Result};
use crate::net::network::Network;
use crate::net::optim::TrainingConfig;

/// What happened during one training run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TrainStats {
    /// Wall-clock seconds spent in the epoch loop only (excludes data
    /// loading and evaluation).
    pub training_seconds: f64,
    pub steps: usize,
    /// Sample-weighted mean batch loss per epoch.
    pub epoch_losses: Vec<f64>,
    /// A trailing batch of one sample was dropped; batch-level distribution
    /// losses are undefined on singletons.
    pub short_batch_dropped: bool,
}

/// Train `net` on the proper-train rows of `split` with a batch-level loss.
///
/// The loss callback receives the batch outputs (`N x C`) and labels and
/// returns the scalar loss plus its gradient with respect to every output.
/// Batch order is deterministic for a fixed `config.seed`.
pub fn train<L>(
    net: &mut Network,
    ds: &LabeledDataset,
    split: &DataSplit,
    loss: &L,
    config: &TrainingConfig,
) -> Result<TrainStats>
where
    L: Fn(&Array2<f64>, &[usize]) -> Result<(f64, Array2<f64>)> + ?Sized,
{
    config.validate()?;
    let rows = &split.proper_train;
    if rows.is_empty() {
        return Err(Error::Shape("empty proper-train partition".into()));
    }
    let (features, labels) = ds.gather(rows);
    let n = rows.len();
    let d = features.ncols();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut steps = 0usize;
    let mut short_batch_dropped = false;

    let mut batch = Array2::zeros((config.batch_size.min(n), d));
    let started = Instant::now();
    for _ in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        let mut loss_weight = 0usize;
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() < 2 {
                short_batch_dropped = true;
                continue;
            }
            let mut batch_view = batch.slice_mut(ndarray::s![..chunk.len(), ..]);
            let mut batch_labels = Vec::with_capacity(chunk.len());
            for (i, &r) in chunk.iter().enumerate() {
                batch_view.row_mut(i).assign(&features.row(r));
                batch_labels.push(labels[r]);
            }
            let acts = net.forward_cached(batch.slice(ndarray::s![..chunk.len(), ..]))?;
            let outputs = acts.last().expect("output activation");
            let (value, grad) = loss(outputs, &batch_labels)?;
            if grad.dim() != outputs.dim() {
                return Err(Error::Shape(format!(
                    "loss gradient {:?} does not match outputs {:?}",
                    grad.dim(),
                    outputs.dim()
                )));
            }
            let grads = net.backward_from_cache(&acts, grad.view())?;
            steps += 1;
            net.adam_step(&grads, config, steps)?;
            loss_sum += value * chunk.len() as f64;
            loss_weight += chunk.len();
        }
        epoch_losses.push(if loss_weight > 0 {
            loss_sum / loss_weight as f64
        } else {
            f64::NAN
        });
    }
    let training_seconds = started.elapsed().as_secs_f64();

    Ok(TrainStats {
        training_seconds,
        steps,
        epoch_losses,
        short_batch_dropped,
    })
}

/// Fraction of test rows whose argmax output equals the label.
pub fn baseline_accuracy(net: &Network, ds: &LabeledDataset, split: &DataSplit) -> Result<f64> {
    if split.test.is_empty() {
        return Err(Error::Shape("empty test partition".into()));
    }
    let outputs = net.forward_rows(&ds.features, &split.test)?;
    let mut hits = 0usize;
    for (i, &r) in split.test.iter().enumerate() {
        let row = outputs.row(i);
        let argmax = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite outputs"))
            .map(|(j, _)| j)
            .expect("non-empty row");
        if argmax == ds.labels[r] {
            hits += 1;
        }
    }
    Ok(hits as f64 / split.test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::softmax_cross_entropy;
    use crate::net::Activation;
    use ndarray::Array2;

    /// Linearly separable 2-class blob data.
    fn toy(n_per_class: usize) -> (LabeledDataset, DataSplit) {
        let n = 2 * n_per_class;
        let mut features = Array2::zeros((n, 2));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let c = i % 2;
            let off = if c == 0 { 0.2 } else { 0.8 };
            features[[i, 0]] = off + 0.1 * ((i as f64 * 0.37).sin());
            features[[i, 1]] = off + 0.1 * ((i as f64 * 0.73).cos());
            labels.push(c);
        }
        let ds = LabeledDataset::new("toy", features, labels, 2).unwrap();
        let split = DataSplit {
            proper_train: (0..n - 20).collect(),
            calibration: Vec::new(),
            test: (n - 20..n).collect(),
        };
        (ds, split)
    }

    /// Binary cross entropy against one-hot labels; sanity loss for the
    /// loop tests.
    fn bce(outputs: &Array2<f64>, labels: &[usize]) -> Result<(f64, Array2<f64>)> {
        let n = outputs.nrows() as f64;
        let mut grad = Array2::zeros(outputs.dim());
        let mut total = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            for c in 0..outputs.ncols() {
                let t = if c == y { 1.0 } else { 0.0 };
                let p = outputs[[i, c]].clamp(1e-12, 1.0 - 1e-12);
                total += -(t * p.ln() + (1.0 - t) * (1.0 - p).ln());
                grad[[i, c]] = (p - t) / (p * (1.0 - p)) / n;
            }
        }
        Ok((total / n, grad))
    }

    #[test]
    fn loss_decreases_on_separable_data_without_hidden_layers() {
        let (ds, split) = toy(60);
        let mut net = Network::init(2, 2, &[], 5).unwrap();
        let cfg = TrainingConfig {
            epochs: 5,
            batch_size: 16,
            learning_rate: 0.05,
            ..TrainingConfig::default()
        };
        let stats = train(&mut net, &ds, &split, &bce, &cfg).unwrap();
        for w in stats.epoch_losses.windows(2) {
            assert!(w[1] < w[0], "epoch losses not decreasing: {:?}", stats.epoch_losses);
        }
    }

    #[test]
    fn same_seed_gives_identical_parameters() {
        let (ds, split) = toy(40);
        let cfg = TrainingConfig {
            epochs: 2,
            batch_size: 8,
            ..TrainingConfig::default()
        };
        let mut a = Network::init(2, 2, &[6], 11).unwrap();
        let mut b = Network::init(2, 2, &[6], 11).unwrap();
        train(&mut a, &ds, &split, &bce, &cfg).unwrap();
        train(&mut b, &ds, &split, &bce, &cfg).unwrap();
        for (la, lb) in a.layers.iter().zip(&b.layers) {
            assert_eq!(la.weights, lb.weights);
            assert_eq!(la.bias, lb.bias);
        }
    }

    #[test]
    fn step_count_is_epochs_times_batches() {
        let (ds, split) = toy(40); // 60 proper-train rows
        let mut net = Network::init(2, 2, &[], 0).unwrap();
        let cfg = TrainingConfig {
            epochs: 3,
            batch_size: 16,
            ..TrainingConfig::default()
        };
        let stats = train(&mut net, &ds, &split, &bce, &cfg).unwrap();
        // ceil(60/16) = 4 batches, none short enough to drop
        assert_eq!(stats.steps, 12);
        assert!(!stats.short_batch_dropped);
    }

    #[test]
    fn trailing_singleton_batch_is_dropped_and_flagged() {
        let (ds, _) = toy(40);
        let split = DataSplit {
            proper_train: (0..33).collect(),
            calibration: Vec::new(),
            test: (33..40).collect(),
        };
        let mut net = Network::init(2, 2, &[], 0).unwrap();
        let cfg = TrainingConfig {
            epochs: 1,
            batch_size: 16,
            shuffle: false,
            ..TrainingConfig::default()
        };
        let stats = train(&mut net, &ds, &split, &bce, &cfg).unwrap();
        assert_eq!(stats.steps, 2);
        assert!(stats.short_batch_dropped);
    }

    #[test]
    fn baseline_reaches_full_accuracy_on_separable_toy_data() {
        let (ds, split) = toy(80);
        let mut net =
            Network::init_with_output(2, 2, &[8], Activation::Identity, 3).unwrap();
        let cfg = TrainingConfig {
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.01,
            ..TrainingConfig::default()
        };
        train(&mut net, &ds, &split, &softmax_cross_entropy, &cfg).unwrap();
        let acc = baseline_accuracy(&net, &ds, &split).unwrap();
        assert!(acc > 0.95, "accuracy {acc}");
    }

    #[test]
    fn constant_output_network_scores_half_on_balanced_data() {
        let (ds, split) = toy(40);
        let mut net = Network::init(2, 2, &[], 0).unwrap();
        net.layers[0].weights.fill(0.0);
        net.layers[0].bias.fill(0.0);
        let acc = baseline_accuracy(&net, &ds, &split).unwrap();
        assert_eq!(acc, 0.5);
    }
}
