//! Generator and discriminator networks on the autodiff tape.

mod checkpoint;
mod gnn;
mod nets;
mod optim;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};

pub use checkpoint::{ModelState, CHECKPOINT_VERSION};
pub use gnn::{gnn_layer_forward, EdgeIndex, GnnLayer};
pub use nets::{
    discriminator_forward, discriminator_score, generate, generator_forward, init_params, Discriminator, Generator,
};
pub use optim::{AdamW, OptimizerState, DEFAULT_LR, DEFAULT_LR_DECAY, DEFAULT_WEIGHT_DECAY};
pub(crate) use nets::{discriminator_apply, generator_apply};

/// Network shape. `full()` is the full-size configuration, `desk()` the
/// reduced one used by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub gen_layers: usize,
    pub gen_dim: usize,
    pub dis_layers: usize,
    pub dis_dim: usize,
    pub leaky_slope: f64,
}

impl ArchConfig {
    pub fn full() -> Self {
        ArchConfig {
            gen_layers: 31,
            gen_dim: 8,
            dis_layers: 9,
            dis_dim: 16,
            leaky_slope: 0.01,
        }
    }

    pub fn desk() -> Self {
        ArchConfig {
            gen_layers: 6,
            gen_dim: 8,
            dis_layers: 3,
            dis_dim: 16,
            leaky_slope: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gen_layers == 0 || self.gen_dim == 0 || self.dis_layers == 0 || self.dis_dim == 0 {
            return Err(Error::Validation("architecture sizes must be positive".into()));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::Validation(format!("leaky slope {} outside (0, 1)", self.leaky_slope)));
        }
        Ok(())
    }
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig::desk()
    }
}

/// Named parameter tensors of one network, in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub names: Vec<String>,
    pub tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, name: String, t: Tensor) -> usize {
        self.names.push(name);
        self.tensors.push(t);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(|t| t.data().len()).sum()
    }

    /// Puts every tensor on the tape, as parameters or as constants.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Vec<Var> {
        self.tensors
            .iter()
            .map(|t| if trainable { tape.param(t.clone()) } else { tape.constant(t.clone()) })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    /// Raw bit patterns, for exact equality checks.
    pub fn bits(&self) -> Vec<u64> {
        self.tensors.iter().flat_map(|t| t.data().iter().map(|v| v.to_bits())).collect()
    }
}

impl Default for ParamSet {
    fn default() -> Self {
        Self::new()
    }
}
