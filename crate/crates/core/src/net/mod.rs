//! Single-convolution-layer classification and retrieval pipeline.
//!
//! Per shape, shell moments `f_k` are fitted once. For every kernel `j` and shell `k`
//! the frequency map `f_k g_{kj}^T` is pooled into `(v1, v2)`; the concatenated slots feed
//! a fully connected layer. There is no nonlinearity, so logits are linear in the
//! shape values.

mod checkpoint;
mod features;
mod model;
mod pool;
mod retrieval;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC};
pub use features::{extract_dataset_features, extract_features, labeled_features, ShapeFeatures};
pub use model::{Gradients, Model, Params};
pub use pool::{pool, pool_rank_one, FrequencyMap, PoolWeights};
pub use retrieval::{
    average_precision, cosine_similarity, mean_average_precision, nearest_neighbor_accuracy, read_descriptors,
    retrieve, write_descriptors, DescriptorRecord, RankedItem,
};
pub use train::{accuracy, train, Adam, EpochRecord, History, TrainOutcome};

use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::conv::ShellFrame;
use crate::error::{Error, Result};

/// What the fully connected layer sees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Volumetric convolution over radial shells.
    #[default]
    Volumetric,
    /// Spherical convolution of the direction-to-value signal (one block, no shells).
    Spherical,
    /// Normalized axial symmetry about the tetrahedral axes; no convolution layer.
    AxialSymmetry,
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volumetric" => Ok(Self::Volumetric),
            "spherical" => Ok(Self::Spherical),
            "axial-symmetry" | "axial_symmetry" => Ok(Self::AxialSymmetry),
            _ => Err(Error::Config(format!("unknown feature mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub order: usize,
    pub n_kernels: usize,
    pub n_shells: usize,
    pub frame: ShellFrame,
    pub mode: FeatureMode,
    pub pinv_iters: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub lr_decay_steps: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            order: 6,
            n_kernels: 16,
            n_shells: 10,
            frame: ShellFrame::Local,
            mode: FeatureMode::Volumetric,
            pinv_iters: 3,
            lr: 0.1,
            lr_decay: 0.9,
            lr_decay_steps: 3000.0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 2,
            epochs: 20,
            init_std: 0.5,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("n_kernels", self.n_kernels), ("n_shells", self.n_shells), ("batch_size", self.batch_size)];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(self.init_std > 0.0 && self.lr_decay > 0.0 && self.lr_decay_steps > 0.0) {
            return Err(Error::Config("init_std, lr_decay and lr_decay_steps must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.eps <= 0.0 {
            return Err(Error::Config("Adam betas must lie in [0, 1) and eps must be positive".into()));
        }
        if self.mode != FeatureMode::Volumetric && self.frame == ShellFrame::Global {
            return Err(Error::Config("the global shell frame only applies to volumetric features".into()));
        }
        Ok(())
    }

    /// `lr · decay^(step / decay_steps)`.
    pub fn learning_rate(&self, step: usize) -> f64 {
        self.lr * self.lr_decay.powf(step as f64 / self.lr_decay_steps)
    }

    /// Number of slots (shells) per kernel.
    pub fn slots_per_kernel(&self) -> usize {
        match self.mode {
            FeatureMode::Volumetric => self.n_shells,
            FeatureMode::Spherical | FeatureMode::AxialSymmetry => 1,
        }
    }

    /// Dimension of the coefficient vectors pooled by the layer.
    pub fn coeff_dim(&self) -> usize {
        match self.mode {
            FeatureMode::Volumetric => crate::moments::MomentLayout::new(self.order).dim(),
            FeatureMode::Spherical => 2 * crate::conv::spherical::sh_real_entries(self.order).len(),
            FeatureMode::AxialSymmetry => crate::symmetry::Axis::tetrahedral().len(),
        }
    }

    /// Width of the input of the fully connected layer.
    pub fn fc_inputs(&self) -> usize {
        match self.mode {
            FeatureMode::AxialSymmetry => self.coeff_dim(),
            _ => self.n_kernels * self.slots_per_kernel() * 2 * self.coeff_dim(),
        }
    }
}
