use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::{
    build_mm_instances, build_text_instances, DialogueDocument, RelationLabel, WindowMode,
};
use crate::encoder::{EncoderConfig, Vocab};
use crate::fusion::FusionConfig;
use crate::model::{Model, ModelConfig, ModelKind, PreparedMm, PreparedText};
use crate::numerics::{Graph, ParamStore, Tensor};
use crate::checkpoint::CheckpointMeta;

use super::optim::{clip_global_norm, AdamW};
use super::schedule::lr_schedule;
use super::{TrainConfig, TrainError};

/// One JSONL training-log line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: u64,
    pub split: String,
    pub loss: f64,
    pub lr: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: Model,
    pub meta: CheckpointMeta,
    /// Mean batch loss per step.
    pub losses: Vec<f64>,
}

/// Runs the epoch/batch loop. `loss_of` returns the loss and the gradient of
/// every parameter it touched for one instance.
fn run<I, F>(
    model: &mut Model,
    instances: &[I],
    cfg: &TrainConfig,
    mut loss_of: F,
    log: &mut dyn FnMut(&LogRecord),
) -> Result<Vec<f64>, TrainError>
where
    F: FnMut(&Model, &ParamStore, &I) -> Result<(f64, BTreeMap<String, Tensor>), TrainError>,
{
    if instances.is_empty() {
        return Err(TrainError::NoInstances);
    }
    let batch = cfg.batch_size.max(1);
    let per_epoch = instances.len().div_ceil(batch) as u64;
    let total = per_epoch * cfg.epochs as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5348_5546_464c_4521);
    let mut opt = AdamW::new(cfg.weight_decay);
    let mut losses = Vec::with_capacity(total as usize);
    let mut order: Vec<usize> = (0..instances.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let mut sum: BTreeMap<String, Tensor> = model
                .params
                .iter()
                .map(|(n, t)| (n.clone(), Tensor::zeros(t.shape())))
                .collect();
            let mut loss = 0.0;
            for &i in chunk {
                let (l, g) = loss_of(model, &model.params, &instances[i])?;
                loss += l;
                for (name, gt) in g {
                    let acc = sum
                        .get_mut(&name)
                        .ok_or(TrainError::UnknownParam(name.clone()))?;
                    for (a, b) in acc.data_mut().iter_mut().zip(gt.data()) {
                        *a += b;
                    }
                }
            }
            let scale = 1.0 / chunk.len() as f64;
            for g in sum.values_mut() {
                g.data_mut().iter_mut().for_each(|v| *v *= scale);
            }
            loss *= scale;
            if let Some(max) = cfg.max_grad_norm {
                clip_global_norm(&mut sum, max);
            }
            let step = opt.step + 1;
            let lr = lr_schedule(step, cfg.warmup_steps, cfg.lr, cfg.decay, total);
            opt.step(&mut model.params, &sum, lr)?;
            log(&LogRecord {
                step,
                split: "train".into(),
                loss,
                lr,
                seed: cfg.seed,
            });
            losses.push(loss);
        }
    }
    Ok(losses)
}

/// Text instances of every document, tokenized with gold targets.
pub fn prepare_text_instances(
    model: &Model,
    docs: &[DialogueDocument],
    window: usize,
    labels: &[RelationLabel],
) -> Vec<PreparedText> {
    docs.iter()
        .flat_map(|d| build_text_instances(d, window))
        .map(|w| model.prepare_text(&w, labels))
        .collect()
}

/// Multimodal training instances with at least one candidate.
pub fn prepare_mm_instances(
    model: &Model,
    docs: &[DialogueDocument],
    window: usize,
    mode: WindowMode,
    labels: &[RelationLabel],
) -> Result<Vec<PreparedMm>, TrainError> {
    let mut out = Vec::new();
    for d in docs {
        for inst in build_mm_instances(d, window, mode) {
            if let Some(p) = model.prepare_mm(&inst, labels)? {
                out.push(p);
            }
        }
    }
    Ok(out)
}

fn instance_grads(
    g: &Graph,
    loss: crate::numerics::Var,
) -> Result<(f64, BTreeMap<String, Tensor>), TrainError> {
    let l = g.value(loss).item();
    let grads = g.backward(loss).map_err(crate::model::ModelError::from)?;
    Ok((l, grads.params(g)))
}

/// Trains a text model on the active labels of `cfg.preset`.
pub fn train_trr(
    docs: &[DialogueDocument],
    encoder: &EncoderConfig,
    cfg: &TrainConfig,
    log: &mut dyn FnMut(&LogRecord),
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if !cfg.preset.valid_for_text() {
        return Err(TrainError::Preset {
            preset: cfg.preset,
            task: ModelKind::Trr,
        });
    }
    let config = ModelConfig {
        kind: ModelKind::Trr,
        encoder: encoder.clone(),
        fusion: None,
    };
    let mut model = Model::new(config, Vocab::build(docs), cfg.seed)?;
    let labels = cfg.preset.labels();
    let instances = prepare_text_instances(&model, docs, cfg.window, &labels);
    let losses = run(
        &mut model,
        &instances,
        cfg,
        |m, store, inst| {
            let mut g = Graph::new();
            let loss = m.text_loss(&mut g, store, inst, &labels)?;
            instance_grads(&g, loss)
        },
        log,
    )?;
    Ok(TrainOutcome {
        meta: CheckpointMeta {
            labels,
            preset: cfg.preset,
            seed: cfg.seed,
            steps: losses.len() as u64,
            init_encoder_sha256: None,
        },
        model,
        losses,
    })
}

/// Builds a multimodal model, either fresh from `cfg.seed` or with its
/// encoder copied from `init_encoder` (whose vocabulary it then adopts).
pub fn init_mrr_model(
    docs: &[DialogueDocument],
    encoder: &EncoderConfig,
    fusion: &FusionConfig,
    seed: u64,
    init_encoder: Option<&Model>,
) -> Result<Model, TrainError> {
    let config = ModelConfig {
        kind: ModelKind::Mrr,
        encoder: encoder.clone(),
        fusion: Some(fusion.clone()),
    };
    let vocab = match init_encoder {
        Some(src) => src.vocab.clone(),
        None => Vocab::build(docs),
    };
    let mut model = Model::new(config, vocab, seed)?;
    if let Some(src) = init_encoder {
        model.load_encoder_from(src)?;
    }
    Ok(model)
}

/// Trains a multimodal model on the active labels of `cfg.preset`.
pub fn train_mrr(
    docs: &[DialogueDocument],
    encoder: &EncoderConfig,
    fusion: &FusionConfig,
    cfg: &TrainConfig,
    init_encoder: Option<&Model>,
    log: &mut dyn FnMut(&LogRecord),
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if !cfg.preset.valid_for_multimodal() {
        return Err(TrainError::Preset {
            preset: cfg.preset,
            task: ModelKind::Mrr,
        });
    }
    let mut model = init_mrr_model(docs, encoder, fusion, cfg.seed, init_encoder)?;
    let labels = cfg.preset.labels();
    let instances = prepare_mm_instances(&model, docs, cfg.window, WindowMode::Train, &labels)?;
    let losses = run(
        &mut model,
        &instances,
        cfg,
        |m, store, inst| {
            let mut g = Graph::new();
            let loss = m.mm_loss(&mut g, store, inst, &labels)?;
            instance_grads(&g, loss)
        },
        log,
    )?;
    Ok(TrainOutcome {
        meta: CheckpointMeta {
            labels,
            preset: cfg.preset,
            seed: cfg.seed,
            steps: losses.len() as u64,
            init_encoder_sha256: None,
        },
        model,
        losses,
    })
}
