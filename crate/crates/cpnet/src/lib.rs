//! One-step conformal prediction approximation.
//!
//! `cpnet` trains a shallow feedforward classifier whose sigmoid outputs are
//! interpreted directly as conformal p-values. A batch-level distribution
//! loss pushes true-class outputs toward `U[0,1]` and false-class outputs
//! toward 0, which is the output profile of a well-calibrated conformal
//! predictor. The crate also ships exact Inductive Conformal Prediction
//! (margin nonconformity, rank p-values) and an Aggregated CP ensemble so
//! the approximation can be benchmarked against the real thing on the same
//! underlying network.
//!
//! Layout:
//! - [`data`]: IDX and CSV ingestion, normalization, stratified splits.
//! - [`net`]: dense feedforward network, reverse-mode gradients, Adam,
//!   mini-batch training loop.
//! - [`loss`]: the five-component conformal loss and a softmax
//!   cross-entropy reference head.
//! - [`cp`]: ICP/ACP p-values, prediction sets, the direct-NN adapter.
//! - [`metrics`]: prediction-set rates, KS uniformity test, miscalibration,
//!   fuzziness, calibration curves, evaluation reports.
//!
//! Everything is `f64` and deterministic for a fixed seed.

pub mod cp;
pub mod data;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod net;
pub mod seed;

pub use cp::{
    acp_pvalues, icp_pvalues, margin_ncm, nn_pvalues, prediction_sets, AcpConfig, AcpOutput,
    CalibrationScores, PValueMatrix, PValueSource, PredictionSet,
};
pub use data::{
    filter_classes, load_csv, load_idx_images, load_image_csv, rescale_for_split, split,
    CsvOptions, DataSplit, LabeledDataset, SplitSpec,
};
pub use error::{Error, Result};
pub use loss::{
    conformal_loss, loss_false, loss_huber, loss_l2, loss_mean, loss_var, mask_outputs,
    softmax_cross_entropy, BatchMasks, LossWeights,
};
pub use metrics::{
    avg_set_size, calibration_curve, evaluate, fuzziness, ks_uniformity, miscalibration,
    set_rates, CurvePoint, EvaluationReport, KsResult, RateRow, SetRates, SignificanceGrid,
};
pub use net::{
    baseline_accuracy, train, Activation, BatchGradient, Network, TrainStats, TrainingConfig,
};
pub use seed::derive_seed;
