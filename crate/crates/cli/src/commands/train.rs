use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::info;
use serde::{Deserialize, Serialize};

use mmref::checkpoint::{load_checkpoint, save_checkpoint};
use mmref::datamodel::DialogueDocument;
use mmref::encoder::EncoderConfig;
use mmref::evaluation::{evaluate, Category, EvalConfig};
use mmref::fusion::FusionConfig;
use mmref::model::{Model, ModelKind};
use mmref::presets::{preset, PRESET_NAMES};
use mmref::training::{mean_std, seed_triple, train_mrr, train_trr, MeanStd, TrainConfig, TrainError};

use crate::cli::{Task, TrainArgs};
use crate::config::{apply, gather};
use crate::error::usage;
use crate::manifest::{write_manifest, InputRef, Recorder};

use super::{out_dir, read_corpus, write_json};

pub const CHECKPOINT_FILE: &str = "model.mrck";
pub const LOG_FILE: &str = "train_log.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

/// Everything a training run depends on besides its inputs. Keys without a
/// section prefix address `train`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub task: String,
    pub encoder: EncoderConfig,
    pub fusion: FusionConfig,
    pub train: TrainConfig,
    /// Used with `--eval-corpus`.
    pub eval: EvalConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub checkpoint: PathBuf,
    pub sha256: String,
    pub steps: u64,
    pub final_loss: Option<f64>,
    /// Mean batch loss over the last epoch.
    pub last_epoch_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub recall: Vec<RecallCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecallCell {
    pub relation: String,
    pub category: Category,
    pub k: usize,
    pub recall: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecallSummary {
    pub relation: String,
    pub category: Category,
    pub k: usize,
    /// Over the seeds with a defined recall.
    pub recall: MeanStd,
}

/// Written by multi-seed runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seeds: Vec<SeedResult>,
    pub final_loss: MeanStd,
    pub last_epoch_loss: MeanStd,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub recall: Vec<RecallSummary>,
}

/// Feature width of the first candidate in the corpus.
fn corpus_feature_dim(docs: &[DialogueDocument]) -> Option<usize> {
    docs.iter()
        .flat_map(|d| d.frames.iter())
        .flat_map(|f| f.candidates.iter())
        .map(|c| c.feature.len())
        .next()
}

fn resolve(args: &TrainArgs, docs: &[DialogueDocument]) -> Result<TrainRun> {
    let p = preset(&args.preset).ok_or_else(|| {
        usage(format!(
            "unknown preset `{}`; expected one of {}",
            args.preset,
            PRESET_NAMES.join(", ")
        ))
    })?;
    let mut fusion = p.fusion.clone();
    if let Some(d) = corpus_feature_dim(docs) {
        fusion.d_object = d;
    }
    let base = TrainRun {
        task: args.task.as_str().into(),
        train: match args.task {
            Task::Trr => p.trr.clone(),
            Task::Mrr => p.mrr.clone(),
        },
        eval: EvalConfig::default(),
        encoder: p.encoder,
        fusion,
    };
    let overrides = gather(args.config.config.as_deref(), &args.config.sets)?;
    let mut run: TrainRun = apply(&base, &overrides, Some("train"))?;
    if run.task != base.task {
        return Err(usage(format!(
            "config is for task `{}`, not `{}`",
            run.task, base.task
        )));
    }
    if let Some(l) = args.labels {
        run.train.preset = l;
    }
    if let Some(s) = args.seed {
        run.train.seed = s;
    }
    if let Some(e) = args.epochs {
        run.train.epochs = e;
    }
    let valid = match args.task {
        Task::Trr => run.train.preset.valid_for_text(),
        Task::Mrr => run.train.preset.valid_for_multimodal(),
    };
    if !valid {
        return Err(usage(format!(
            "label preset `{}` cannot train a {} model",
            run.train.preset,
            args.task.as_str()
        )));
    }
    run.train.validate().map_err(|e| usage(e.to_string()))?;
    if args.eval_corpus.is_some() {
        run.eval.labels = run.train.preset.labels();
        run.eval.validate().map_err(|e| usage(e.to_string()))?;
    }
    Ok(run)
}

fn train_error(e: TrainError) -> anyhow::Error {
    match e {
        TrainError::Model(_) | TrainError::Config(_) | TrainError::Preset { .. } | TrainError::NoInstances => {
            usage(e.to_string())
        }
        other => other.into(),
    }
}

fn train_one(
    run: &TrainRun,
    seed: u64,
    docs: &[DialogueDocument],
    init: Option<&(Model, String)>,
    eval_docs: Option<&[DialogueDocument]>,
    dir: &Path,
) -> Result<SeedResult> {
    let cfg = TrainConfig {
        seed,
        ..run.train.clone()
    };
    let log_path = dir.join(LOG_FILE);
    let mut log = BufWriter::new(
        File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?,
    );
    let mut log_err = None;
    let mut sink = |r: &mmref::training::LogRecord| {
        if log_err.is_none() {
            let line = serde_json::to_string(r).expect("log records serialize");
            if let Err(e) = writeln!(log, "{line}") {
                log_err = Some(e);
            }
        }
    };
    let outcome = match run.task.as_str() {
        "trr" => train_trr(docs, &run.encoder, &cfg, &mut sink),
        _ => train_mrr(
            docs,
            &run.encoder,
            &run.fusion,
            &cfg,
            init.map(|(m, _)| m),
            &mut sink,
        ),
    }
    .map_err(train_error)?;
    if let Some(e) = log_err {
        return Err(e).context("writing training log");
    }
    log.flush().context("writing training log")?;

    let mut meta = outcome.meta;
    meta.init_encoder_sha256 = init.map(|(_, h)| h.clone());
    let ckpt = dir.join(CHECKPOINT_FILE);
    let sha256 = save_checkpoint(&ckpt, &outcome.model, &meta)?;
    let per_epoch = outcome.losses.len() / cfg.epochs.max(1);
    let last_epoch = &outcome.losses[outcome.losses.len() - per_epoch.min(outcome.losses.len())..];
    let recall = match eval_docs {
        Some(ed) => {
            // Evaluate the stored parameters, as a later `eval` would.
            let (model, _, _) = load_checkpoint(&ckpt)?;
            let report = evaluate(&model, ed, &run.eval, false).map_err(|e| usage(e.to_string()))?;
            report
                .rows
                .iter()
                .map(|r| RecallCell {
                    relation: r.relation.clone(),
                    category: r.category,
                    k: r.k,
                    recall: r.recall,
                })
                .collect()
        }
        None => Vec::new(),
    };
    Ok(SeedResult {
        seed,
        checkpoint: ckpt,
        sha256,
        steps: meta.steps,
        final_loss: outcome.losses.last().copied(),
        last_epoch_loss: (!last_epoch.is_empty())
            .then(|| last_epoch.iter().sum::<f64>() / last_epoch.len() as f64),
        recall,
    })
}

/// Mean and standard deviation of every per-seed quantity.
pub fn summarize(seeds: Vec<SeedResult>) -> Summary {
    let collect = |f: &dyn Fn(&SeedResult) -> Option<f64>| -> Vec<f64> {
        seeds.iter().filter_map(f).collect()
    };
    let final_loss = mean_std(&collect(&|s| s.final_loss));
    let last_epoch_loss = mean_std(&collect(&|s| s.last_epoch_loss));
    let recall = seeds
        .first()
        .map(|first| {
            first
                .recall
                .iter()
                .enumerate()
                .map(|(i, cell)| RecallSummary {
                    relation: cell.relation.clone(),
                    category: cell.category,
                    k: cell.k,
                    recall: mean_std(&collect(&|s| s.recall.get(i).and_then(|c| c.recall))),
                })
                .collect()
        })
        .unwrap_or_default();
    Summary {
        seeds,
        final_loss,
        last_epoch_loss,
        recall,
    }
}

pub fn run(args: &TrainArgs, out_root: &Path) -> Result<()> {
    let mut rec = Recorder::start("train");
    let docs = read_corpus(&args.corpus)?;
    rec.input("corpus", InputRef::hash(&args.corpus)?);
    if let Some(p) = &args.config.config {
        rec.input("config", InputRef::hash(p)?);
    }
    let run = resolve(args, &docs)?;
    if args.seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }

    let init = match (&args.init_encoder, args.task) {
        (None, _) => None,
        (Some(_), Task::Trr) => return Err(usage("--init-encoder applies to mrr training only")),
        (Some(path), Task::Mrr) => {
            let (model, _, sha) = load_checkpoint(path).map_err(|e| {
                usage(format!("cannot load encoder checkpoint {}: {e}", path.display()))
            })?;
            if model.kind() != ModelKind::Trr {
                return Err(usage(format!("{} is not a text checkpoint", path.display())));
            }
            rec.input(
                "init_encoder",
                InputRef {
                    path: path.clone(),
                    sha256: sha.clone(),
                },
            );
            Some((model, sha))
        }
    };
    let eval_docs = match &args.eval_corpus {
        Some(p) => {
            if args.task == Task::Trr {
                return Err(usage("--eval-corpus applies to mrr training only"));
            }
            rec.input("eval_corpus", InputRef::hash(p)?);
            Some(read_corpus(p)?)
        }
        None => None,
    };
    rec.config(serde_json::to_value(&run)?);

    let dir = out_dir(
        args.out.as_deref(),
        out_root,
        &format!("train-{}", args.task.as_str()),
    )?;
    let seeds = seed_triple(run.train.seed, args.seeds);
    rec.seeds(&seeds);
    let mut results = Vec::new();
    for &seed in &seeds {
        let seed_dir = if seeds.len() == 1 {
            dir.clone()
        } else {
            out_dir(Some(&dir.join(format!("seed-{seed}"))), out_root, "")?
        };
        info!("training {} seed {seed}", run.task);
        let mut result = train_one(&run, seed, &docs, init.as_ref(), eval_docs.as_deref(), &seed_dir)?;
        result.checkpoint = result
            .checkpoint
            .strip_prefix(&dir)
            .map(Path::to_path_buf)
            .unwrap_or(result.checkpoint);
        let rel = seed_dir.strip_prefix(&dir).unwrap_or(Path::new("")).to_path_buf();
        if seeds.len() > 1 {
            let mut m = rec.snapshot();
            m.seeds = vec![seed];
            m.outputs = vec![CHECKPOINT_FILE.into(), LOG_FILE.into()];
            write_manifest(&seed_dir, &m)?;
        }
        rec.output(rel.join(CHECKPOINT_FILE));
        rec.output(rel.join(LOG_FILE));
        println!("{}", dir.join(&result.checkpoint).display());
        results.push(result);
    }
    if seeds.len() > 1 || eval_docs.is_some() {
        write_json(&dir.join(SUMMARY_FILE), &summarize(results))?;
        rec.output(SUMMARY_FILE);
    }
    rec.write(&dir)?;
    Ok(())
}
