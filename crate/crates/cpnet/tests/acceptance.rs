//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line with the measured numbers.
//!
//! Criteria 3-6 and 8 run on the benchmark datasets; fetch them first
//! (`scripts/fetch_data.py --dest data/`) or set `CPNET_DATA_DIR`.

mod common;

use cpnet::*;
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const REPORT_LEVELS: [f64; 3] = [0.05, 0.1, 0.2];
const HIDDEN: [usize; 2] = [128, 64];

fn conformal_batch_loss(
    weights: LossWeights,
) -> impl Fn(&Array2<f64>, &[usize]) -> Result<(f64, Array2<f64>)> + Sync {
    move |outputs, labels| conformal_loss(outputs, labels, &weights)
}

/// Relative error with a floor that keeps near-zero comparisons meaningful.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

// ---------------------------------------------------------------------------
// 1. Gradient suite: every loss component and the composite match central
//    finite differences (step 1e-5) with rel err < 1e-5 at >= 10 random
//    points each; network backward matches at < 1e-4.
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_gradient_suite() {
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut worst_component = 0.0_f64;

    // component gradients on random unit-interval vectors
    for trial in 0..10 {
        let n = 5 + trial % 5;
        let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
        let cases: Vec<(Box<dyn Fn(&[f64]) -> f64>, Vec<f64>)> = vec![
            (
                Box::new(|v: &[f64]| loss_false(v, 1e-7).0),
                loss_false(&vals, 1e-7).1,
            ),
            (Box::new(|v: &[f64]| loss_mean(v).0), loss_mean(&vals).1),
            (
                Box::new(|v: &[f64]| loss_var(v).unwrap().0),
                loss_var(&vals).unwrap().1,
            ),
            (Box::new(|v: &[f64]| loss_l2(v).0), loss_l2(&vals).1),
            (
                Box::new(|v: &[f64]| loss_huber(v, 0.3, 0.125).0),
                loss_huber(&vals, 0.3, 0.125).1,
            ),
        ];
        for (f, analytic) in cases {
            for i in 0..vals.len() {
                let mut plus = vals.clone();
                let mut minus = vals.clone();
                plus[i] += h;
                minus[i] -= h;
                let fd = (f(&plus) - f(&minus)) / (2.0 * h);
                let e = rel_err(fd, analytic[i]);
                worst_component = worst_component.max(e);
                assert!(e < 1e-5, "component gradient off by {e}");
            }
        }
    }

    // composite gradient over the full output matrix
    let w = LossWeights::default();
    let mut worst_composite = 0.0_f64;
    for trial in 0..10 {
        let n = 4 + trial % 4;
        let c = 2 + trial % 3;
        let outputs = Array2::from_shape_fn((n, c), |_| rng.gen_range(0.05..0.95));
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
        let (_, grad) = conformal_loss(&outputs, &labels, &w).unwrap();
        for row in 0..n {
            for col in 0..c {
                let mut plus = outputs.clone();
                let mut minus = outputs.clone();
                plus[[row, col]] += h;
                minus[[row, col]] -= h;
                let fd = (conformal_loss(&plus, &labels, &w).unwrap().0
                    - conformal_loss(&minus, &labels, &w).unwrap().0)
                    / (2.0 * h);
                let e = rel_err(fd, grad[[row, col]]);
                worst_composite = worst_composite.max(e);
                assert!(e < 1e-5, "composite gradient off by {e}");
            }
        }
    }

    // network backward against finite differences of a linear probe loss,
    // covering relu, sigmoid, and identity activations
    let mut worst_net = 0.0_f64;
    for (arch, head) in [
        (vec![5usize], Activation::Sigmoid),
        (vec![6, 4], Activation::Sigmoid),
        (vec![5], Activation::Identity),
        (vec![], Activation::Sigmoid),
    ] {
        for trial in 0..3 {
            let seed = 200 + trial;
            let net = Network::init_with_output(6, 3, &arch, head, seed).unwrap();
            let batch = Array2::from_shape_fn((7, 6), |_| rng.gen_range(0.0..1.0));
            let probe = Array2::from_shape_fn((7, 3), |_| rng.gen_range(-1.0..1.0));
            let scalar = |n: &Network| (&n.forward(batch.view()).unwrap() * &probe).sum();
            let grads = net.backward(batch.view(), probe.view()).unwrap();
            for l in 0..net.layers.len() {
                for idx in 0..net.layers[l].weights.len() {
                    let mut plus = net.clone();
                    let mut minus = net.clone();
                    plus.layers[l].weights.as_slice_mut().unwrap()[idx] += h;
                    minus.layers[l].weights.as_slice_mut().unwrap()[idx] -= h;
                    let fd = (scalar(&plus) - scalar(&minus)) / (2.0 * h);
                    let analytic = grads.layers[l].0.as_slice().unwrap()[idx];
                    let e = rel_err(fd, analytic);
                    worst_net = worst_net.max(e);
                    assert!(e < 1e-4, "weight gradient off by {e}");
                }
                for idx in 0..net.layers[l].bias.len() {
                    let mut plus = net.clone();
                    let mut minus = net.clone();
                    plus.layers[l].bias[idx] += h;
                    minus.layers[l].bias[idx] -= h;
                    let fd = (scalar(&plus) - scalar(&minus)) / (2.0 * h);
                    let e = rel_err(fd, grads.layers[l].1[idx]);
                    worst_net = worst_net.max(e);
                    assert!(e < 1e-4, "bias gradient off by {e}");
                }
            }
        }
    }

    println!(
        "criterion 1 (gradient suite): PASS - worst rel err: components {worst_component:.2e}, \
         composite {worst_composite:.2e}, network {worst_net:.2e}"
    );
}

// ---------------------------------------------------------------------------
// 2. ICP validity oracle: on synthetic exchangeable 2-class data
//    (calibration >= 500, test >= 2000, >= 20 seeds) the mean empirical
//    error stays within 0.02 of epsilon for eps in {0.05, 0.1, 0.2}.
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_icp_validity_oracle() {
    let n_calib = 500;
    let n_test = 2000;
    let seeds = 20;

    // underlying scorer: the exact class posterior of the generator,
    // expressed as a logistic network so the real ICP path is exercised
    let mut posterior_net = Network::init(2, 2, &[], 0).unwrap();
    posterior_net.layers[0].weights = ndarray::array![[-2.0, -2.0], [2.0, 2.0]];
    posterior_net.layers[0].bias = ndarray::array![0.0, 0.0];

    let mut err_sum = [0.0_f64; 3];
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = n_calib + n_test;
        let mut features = Array2::zeros((n, 2));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let y = rng.gen_range(0..2usize);
            let center = if y == 0 { -1.0 } else { 1.0 };
            features[[i, 0]] = center + normal.sample(&mut rng);
            features[[i, 1]] = center + normal.sample(&mut rng);
            labels.push(y);
        }
        let ds = LabeledDataset::new("gaussian-mixture", features, labels, 2).unwrap();
        let split = DataSplit {
            proper_train: Vec::new(),
            calibration: (0..n_calib).collect(),
            test: (n_calib..n).collect(),
        };
        let p = icp_pvalues(&posterior_net, &ds, &split).unwrap();
        let test_labels: Vec<usize> = split.test.iter().map(|&r| ds.labels[r]).collect();
        for (k, &eps) in REPORT_LEVELS.iter().enumerate() {
            let sets = prediction_sets(&p, eps).unwrap();
            err_sum[k] += set_rates(&sets, &test_labels).unwrap().error;
        }
    }

    let mut detail = String::new();
    for (k, &eps) in REPORT_LEVELS.iter().enumerate() {
        let mean_err = err_sum[k] / seeds as f64;
        detail.push_str(&format!("err({eps})={mean_err:.4} "));
        assert!(
            (mean_err - eps).abs() <= 0.02,
            "mean error {mean_err:.4} at eps {eps} outside the 0.02 band"
        );
    }
    println!("criterion 2 (ICP validity oracle): PASS - {detail}");
}

// ---------------------------------------------------------------------------
// 3. Baseline sanity: the softmax-head network reaches >= 99.5% test
//    accuracy on MNIST2 and >= 93.5% on MNIST10.
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_baseline_accuracy() {
    let (ds2, split2) = common::load_mnist2();
    let mut net = Network::init_with_output(
        ds2.feature_dim(),
        ds2.class_count,
        &HIDDEN,
        Activation::Identity,
        7,
    )
    .unwrap();
    train(
        &mut net,
        &ds2,
        &split2,
        &softmax_cross_entropy,
        &TrainingConfig::default(),
    )
    .unwrap();
    let acc2 = baseline_accuracy(&net, &ds2, &split2).unwrap();
    assert!(acc2 >= 0.995, "MNIST2 baseline accuracy {acc2:.4} < 0.995");

    let (ds10, split10) = common::load_mnist10();
    let mut net = Network::init_with_output(
        ds10.feature_dim(),
        ds10.class_count,
        &HIDDEN,
        Activation::Identity,
        7,
    )
    .unwrap();
    train(
        &mut net,
        &ds10,
        &split10,
        &softmax_cross_entropy,
        &TrainingConfig::default(),
    )
    .unwrap();
    let acc10 = baseline_accuracy(&net, &ds10, &split10).unwrap();
    assert!(acc10 >= 0.935, "MNIST10 baseline accuracy {acc10:.4} < 0.935");

    println!(
        "criterion 3 (baseline accuracy): PASS - MNIST2 {acc2:.4} (>= 0.995), \
         MNIST10 {acc10:.4} (>= 0.935)"
    );
}

// ---------------------------------------------------------------------------
// 4. Desk-scale reproduction on MNIST2: over 10 independent direct-NN
//    iterations with the tuned loss weights, the mean error at eps 0.05
//    lands in [0.5%, 5.5%], the single rate stays >= 94%, and the multi
//    rate stays <= 1%.
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_direct_nn_mnist2() {
    let (ds, split) = common::load_mnist2();
    let loss = conformal_batch_loss(LossWeights::default());
    let labels: Vec<usize> = split.test.iter().map(|&r| ds.labels[r]).collect();

    let iterations = 10;
    let (mut err, mut single, mut multi) = (0.0, 0.0, 0.0);
    for iter in 0..iterations {
        let seed = derive_seed(42, iter);
        let mut net = Network::init(ds.feature_dim(), ds.class_count, &HIDDEN, seed).unwrap();
        let cfg = TrainingConfig {
            seed,
            ..TrainingConfig::default()
        };
        train(&mut net, &ds, &split, &loss, &cfg).unwrap();
        let p = nn_pvalues(&net, &ds, &split).unwrap();
        let sets = prediction_sets(&p, 0.05).unwrap();
        let rates = set_rates(&sets, &labels).unwrap();
        err += rates.error;
        single += rates.single;
        multi += rates.multi;
    }
    let n = iterations as f64;
    let (err, single, multi) = (err / n, single / n, multi / n);

    assert!(
        (0.005..=0.055).contains(&err),
        "mean error {err:.4} outside [0.005, 0.055]"
    );
    assert!(single >= 0.94, "mean single rate {single:.4} < 0.94");
    assert!(multi <= 0.01, "mean multi rate {multi:.4} > 0.01");
    println!(
        "criterion 4 (MNIST2 direct-NN reproduction): PASS - mean error {err:.4} \
         in [0.005,0.055], single {single:.4} >= 0.94, multi {multi:.4} <= 0.01"
    );
}

// ---------------------------------------------------------------------------
// 5. Training-time claim: sequential ACP(10) costs at least 4x one direct
//    network under an identical TrainingConfig on MNIST2.
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_acp_training_time_ratio() {
    let (ds, split) = common::load_mnist2();
    let loss = conformal_batch_loss(LossWeights::default());
    let config = TrainingConfig {
        seed: derive_seed(7, 0),
        ..TrainingConfig::default()
    };

    // warm up allocators and caches so the first timed run is not penalized
    let mut warm = Network::init(ds.feature_dim(), ds.class_count, &HIDDEN, 1).unwrap();
    train(&mut warm, &ds, &split, &loss, &config).unwrap();

    let mut net = Network::init(ds.feature_dim(), ds.class_count, &HIDDEN, 2).unwrap();
    let nn_stats = train(&mut net, &ds, &split, &loss, &config).unwrap();

    let acp = acp_pvalues(
        &ds,
        &split,
        &HIDDEN,
        &loss,
        &config,
        &AcpConfig {
            ensemble_count: 10,
            seed: 7,
            parallel: false,
            ..AcpConfig::default()
        },
    )
    .unwrap();
    let sequential: f64 = acp.member_seconds.iter().sum();
    let ratio = sequential / nn_stats.training_seconds;
    assert!(
        ratio >= 4.0,
        "ACP(10) sequential {sequential:.2}s is only {ratio:.2}x the NN {:.2}s",
        nn_stats.training_seconds
    );
    println!(
        "criterion 5 (training-time ratio): PASS - ACP(10) {sequential:.2}s vs NN {:.2}s \
         ({ratio:.1}x >= 4x)",
        nn_stats.training_seconds
    );
}

// ---------------------------------------------------------------------------
// 6. p-value distribution on MNIST10: over 10 direct-NN runs the mean KS
//    distance of true-class p-values to U[0,1] is < 0.15 and the mean
//    false-class p-value is < 0.01.
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_pvalue_distribution_mnist10() {
    let (ds, split) = common::load_mnist10();
    let loss = conformal_batch_loss(LossWeights::default());
    let labels: Vec<usize> = split.test.iter().map(|&r| ds.labels[r]).collect();

    let iterations = 10;
    let mut ks_sum = 0.0;
    let mut false_sum = 0.0;
    let mut false_count = 0usize;
    for iter in 0..iterations {
        let seed = derive_seed(61, iter);
        let mut net = Network::init(ds.feature_dim(), ds.class_count, &HIDDEN, seed).unwrap();
        let cfg = TrainingConfig {
            seed,
            ..TrainingConfig::default()
        };
        train(&mut net, &ds, &split, &loss, &cfg).unwrap();
        let p = nn_pvalues(&net, &ds, &split).unwrap();
        let true_p = p.true_class(&labels).unwrap();
        ks_sum += ks_uniformity(&true_p).unwrap().statistic;
        let false_p = p.false_class(&labels).unwrap();
        false_sum += false_p.iter().sum::<f64>();
        false_count += false_p.len();
    }
    let mean_ks = ks_sum / iterations as f64;
    let mean_false = false_sum / false_count as f64;

    assert!(mean_ks < 0.15, "mean KS distance {mean_ks:.4} >= 0.15");
    assert!(
        mean_false < 0.01,
        "mean false-class p-value {mean_false:.5} >= 0.01"
    );
    println!(
        "criterion 6 (MNIST10 p-value distribution): PASS - mean KS D {mean_ks:.4} < 0.15, \
         mean false p {mean_false:.5} < 0.01"
    );
}

// ---------------------------------------------------------------------------
// 7. Metric identities: size rates sum to one, error >= empty, the
//    calibration curve is non-decreasing, and ACP(1) equals ICP bitwise on
//    the same resample.
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_metric_identities() {
    // synthetic two-blob data, no external files needed
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let n = 600;
    let mut features = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % 2;
        let center: f64 = if y == 0 { 0.3 } else { 0.7 };
        features[[i, 0]] = (center + rng.gen_range(-0.25..0.25)).clamp(0.0, 1.0);
        features[[i, 1]] = (center + rng.gen_range(-0.25..0.25)).clamp(0.0, 1.0);
        labels.push(y);
    }
    let ds = LabeledDataset::new("blobs", features, labels, 2).unwrap();
    let split = DataSplit::predetermined(400, n).unwrap();
    let loss = conformal_batch_loss(LossWeights::default());
    let config = TrainingConfig {
        epochs: 2,
        batch_size: 32,
        ..TrainingConfig::default()
    };

    // direct NN: identities checked by evaluate(), re-asserted here
    let mut net = Network::init(2, 2, &[16], 3).unwrap();
    let stats = train(&mut net, &ds, &split, &loss, &config).unwrap();
    let p = nn_pvalues(&net, &ds, &split).unwrap();
    let test_labels: Vec<usize> = split.test.iter().map(|&r| ds.labels[r]).collect();
    let report = evaluate(
        &p,
        &test_labels,
        &REPORT_LEVELS,
        &SignificanceGrid::default(),
        "blobs",
        "direct-nn",
        stats.training_seconds,
    )
    .unwrap();
    for row in &report.rates {
        assert!((row.empty + row.single + row.multi - 1.0).abs() < 1e-12);
        assert!(row.error >= row.empty - 1e-12);
    }
    for w in report.calibration_curve.windows(2) {
        assert!(w[1].error >= w[0].error, "calibration curve decreased");
    }

    // ACP(1) must be the same bits as a lone ICP run on the same resample
    let acp_config = AcpConfig {
        ensemble_count: 1,
        seed: 99,
        parallel: false,
        ..AcpConfig::default()
    };
    let acp = acp_pvalues(&ds, &split, &[16], &loss, &config, &acp_config).unwrap();
    let member_seed = derive_seed(acp_config.seed, 0);
    let icp_split = split
        .carve_calibration(
            &ds.labels,
            acp_config.calibration_fraction,
            derive_seed(member_seed, 0),
        )
        .unwrap();
    let mut icp_net = Network::init(2, 2, &[16], derive_seed(member_seed, 1)).unwrap();
    let icp_config = TrainingConfig {
        seed: derive_seed(member_seed, 2),
        ..config
    };
    train(&mut icp_net, &ds, &icp_split, &loss, &icp_config).unwrap();
    let icp = icp_pvalues(&icp_net, &ds, &icp_split).unwrap();
    assert_eq!(
        acp.pvalues.values, icp.values,
        "ACP(1) differs from ICP on the same resample"
    );

    println!(
        "criterion 7 (metric identities): PASS - rate identities, curve monotonicity, \
         and ACP(1) == ICP bitwise"
    );
}

// ---------------------------------------------------------------------------
// 8a. Training-time ordering on MNIST2: NN < ACP-2 < ACP-5 < ACP-10
//     (sequential training cost under one TrainingConfig).
// ---------------------------------------------------------------------------

#[test]
fn criterion_8a_training_time_ordering_mnist2() {
    let (ds, split) = common::load_mnist2();
    let loss = conformal_batch_loss(LossWeights::default());
    let config = TrainingConfig {
        seed: derive_seed(8, 0),
        ..TrainingConfig::default()
    };

    let mut warm = Network::init(ds.feature_dim(), ds.class_count, &HIDDEN, 1).unwrap();
    train(&mut warm, &ds, &split, &loss, &config).unwrap();

    let mut net = Network::init(ds.feature_dim(), ds.class_count, &HIDDEN, 2).unwrap();
    let nn_seconds = train(&mut net, &ds, &split, &loss, &config)
        .unwrap()
        .training_seconds;

    let mut acp_seconds = Vec::new();
    for n in [2usize, 5, 10] {
        let out = acp_pvalues(
            &ds,
            &split,
            &HIDDEN,
            &loss,
            &config,
            &AcpConfig {
                ensemble_count: n,
                seed: 8,
                parallel: false,
                ..AcpConfig::default()
            },
        )
        .unwrap();
        assert_eq!(out.member_seconds.len(), n);
        acp_seconds.push(out.member_seconds.iter().sum::<f64>());
    }

    assert!(
        nn_seconds < acp_seconds[0],
        "NN {nn_seconds:.2}s not below ACP-2 {:.2}s",
        acp_seconds[0]
    );
    assert!(
        acp_seconds[0] < acp_seconds[1] && acp_seconds[1] < acp_seconds[2],
        "ACP times not increasing: {acp_seconds:?}"
    );
    println!(
        "criterion 8a (training-time ordering): PASS - NN {nn_seconds:.2}s < \
         ACP-2 {:.2}s < ACP-5 {:.2}s < ACP-10 {:.2}s",
        acp_seconds[0], acp_seconds[1], acp_seconds[2]
    );
}

// ---------------------------------------------------------------------------
// 8b. Multi-rate ordering on USPS10 at eps 0.1: the direct NN produces no
//     more multi-label sets than ACP-10.
// ---------------------------------------------------------------------------

#[test]
fn criterion_8b_multi_rate_ordering_usps10() {
    let (ds, split) = common::load_usps10();
    let loss = conformal_batch_loss(LossWeights::default());
    let labels: Vec<usize> = split.test.iter().map(|&r| ds.labels[r]).collect();

    let iterations = 5;
    let mut nn_multi = 0.0;
    for iter in 0..iterations {
        let seed = derive_seed(81, iter);
        let mut net = Network::init(ds.feature_dim(), ds.class_count, &HIDDEN, seed).unwrap();
        let cfg = TrainingConfig {
            seed,
            ..TrainingConfig::default()
        };
        train(&mut net, &ds, &split, &loss, &cfg).unwrap();
        let p = nn_pvalues(&net, &ds, &split).unwrap();
        let sets = prediction_sets(&p, 0.1).unwrap();
        nn_multi += set_rates(&sets, &labels).unwrap().multi;
    }
    let nn_multi = nn_multi / iterations as f64;

    let acp = acp_pvalues(
        &ds,
        &split,
        &HIDDEN,
        &loss,
        &TrainingConfig::default(),
        &AcpConfig {
            ensemble_count: 10,
            seed: 81,
            parallel: false,
            ..AcpConfig::default()
        },
    )
    .unwrap();
    let sets = prediction_sets(&acp.pvalues, 0.1).unwrap();
    let acp_multi = set_rates(&sets, &labels).unwrap().multi;

    assert!(
        nn_multi <= acp_multi,
        "NN multi rate {nn_multi:.4} exceeds ACP-10 multi rate {acp_multi:.4}"
    );
    println!(
        "criterion 8b (USPS10 multi-rate ordering): PASS - NN {nn_multi:.4} <= \
         ACP-10 {acp_multi:.4}"
    );
}
