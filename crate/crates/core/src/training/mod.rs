//! AdamW, warmup schedule, batching and the staged text-to-multimodal
//! training protocol.

mod optim;
mod run;
mod schedule;
mod seeds;

pub use optim::{clip_global_norm, AdamW, ADAM_EPSILON, BETA1, BETA2};
pub use run::{
    init_mrr_model, prepare_mm_instances, prepare_text_instances, train_mrr, train_trr, LogRecord,
    TrainOutcome,
};
pub use schedule::{lr_schedule, Decay};
pub use seeds::{mean_std, over_seeds, pooled_std, seed_triple, MeanStd};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{LabelPreset, DEFAULT_WINDOW};
use crate::model::{ModelError, ModelKind};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("no training instances")]
    NoInstances,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("label preset `{preset}` cannot train a {} model", task.as_str())]
    Preset { preset: LabelPreset, task: ModelKind },
    #[error("non-finite gradient {value} in `{name}`[{index}] at step {step}")]
    NonFiniteGradient {
        name: String,
        index: usize,
        value: f64,
        step: u64,
    },
    #[error("gradient for unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("gradient shape {grad:?} differs from parameter `{name}` shape {param:?}")]
    Shape {
        name: String,
        param: Vec<usize>,
        grad: Vec<usize>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub warmup_steps: u64,
    pub decay: Decay,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub preset: LabelPreset,
    /// Utterances per training window.
    pub window: usize,
    pub max_grad_norm: Option<f64>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight decay must be non-negative");
        }
        if self.batch_size == 0 || self.window == 0 {
            return bad("batch size and window must be positive");
        }
        if matches!(self.max_grad_norm, Some(n) if !(n > 0.0)) {
            return bad("max_grad_norm must be positive");
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 5e-5,
            weight_decay: 0.01,
            warmup_steps: 1000,
            decay: Decay::Constant,
            epochs: 16,
            batch_size: 16,
            seed: 0,
            preset: LabelPreset::Trr,
            window: DEFAULT_WINDOW,
            max_grad_norm: None,
        }
    }
}
