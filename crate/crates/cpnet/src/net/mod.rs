//! Dense feedforward network with reverse-mode gradients, Adam, and a
//! deterministic mini-batch training loop.

mod checkpoint;
mod network;
mod optim;
mod train;

pub use network::{Activation, BatchGradient, Layer, Network};
pub use optim::TrainingConfig;
pub use train::{baseline_accuracy, train, TrainStats};
