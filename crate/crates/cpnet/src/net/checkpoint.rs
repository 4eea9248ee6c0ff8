//! Model checkpoints: versioned JSON documents holding layer shapes,
//! activations, parameters, and the init seed. Optimizer moments are not
//! persisted; a checkpoint restores inference state.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::network::{Activation, Layer, Network};

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    seed: u64,
    layers: Vec<LayerRecord>,
}

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    activation: Activation,
    in_dim: usize,
    out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Network {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION,
            seed: self.seed,
            layers: self
                .layers
                .iter()
                .map(|l| LayerRecord {
                    activation: l.activation,
                    in_dim: l.in_dim(),
                    out_dim: l.out_dim(),
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        };
        let json = serde_json::to_string(&file)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Network> {
        let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: CheckpointFile =
            serde_json::from_str(&json).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {} (expected {})",
                file.version, CHECKPOINT_VERSION
            )));
        }
        if file.layers.is_empty() {
            return Err(Error::Checkpoint("checkpoint has no layers".into()));
        }
        let mut layers = Vec::with_capacity(file.layers.len());
        let mut prev_out: Option<usize> = None;
        for rec in file.layers {
            if rec.weights.len() != rec.in_dim * rec.out_dim || rec.bias.len() != rec.out_dim {
                return Err(Error::Checkpoint("layer payload size mismatch".into()));
            }
            if let Some(p) = prev_out {
                if p != rec.in_dim {
                    return Err(Error::Checkpoint(format!(
                        "layer dims do not chain: {} -> {}",
                        p, rec.in_dim
                    )));
                }
            }
            prev_out = Some(rec.out_dim);
            layers.push(Layer {
                weights: Array2::from_shape_vec((rec.out_dim, rec.in_dim), rec.weights)
                    .map_err(|e| Error::Checkpoint(e.to_string()))?,
                bias: Array1::from_vec(rec.bias),
                activation: rec.activation,
            });
        }
        Ok(Network {
            layers,
            seed: file.seed,
            adam: None,
        })
    }
}
