//! JSON network checkpoints: layer sizes plus row-major weight and bias
//! arrays, tagged with a format name and version.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Layer, Mlp};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "covbound-mlp";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub sizes: Vec<usize>,
    pub seed: u64,
    /// One row-major `n_i x n_{i-1}` array per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl From<&Mlp> for Checkpoint {
    fn from(net: &Mlp) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            sizes: net.sizes().to_vec(),
            seed: net.seed(),
            weights: net.layers().iter().map(|l| l.weights.clone()).collect(),
            biases: net.layers().iter().map(|l| l.bias.clone()).collect(),
        }
    }
}

impl TryFrom<Checkpoint> for Mlp {
    type Error = Error;

    fn try_from(ck: Checkpoint) -> Result<Mlp> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::validation(format!("unknown checkpoint format '{}'", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::validation(format!(
                "unsupported checkpoint version {}",
                ck.version
            )));
        }
        if ck.sizes.len() < 2
            || ck.weights.len() != ck.sizes.len() - 1
            || ck.biases.len() != ck.sizes.len() - 1
        {
            return Err(Error::validation("checkpoint layer count does not match its sizes"));
        }
        let layers = ck
            .sizes
            .windows(2)
            .zip(ck.weights.into_iter().zip(ck.biases))
            .map(|(w, (weights, bias))| Layer {
                inputs: w[0],
                outputs: w[1],
                weights,
                bias,
            })
            .collect();
        Mlp::from_layers(layers, ck.seed)
    }
}

pub fn save_checkpoint(net: &Mlp, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string(&Checkpoint::from(net))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Mlp> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Mlp::try_from(ck)
}
