use std::path::Path;

use anyhow::Result;
use log::info;

use mmref::checkpoint::load_checkpoint;
use mmref::evaluation::{evaluate, utterance_length_ablation, EvalConfig, EvalError};
use mmref::model::ModelKind;

use crate::cli::EvalArgs;
use crate::config::{apply, gather};
use crate::error::usage;
use crate::manifest::{InputRef, Recorder};

use super::{out_dir, read_corpus, write_text};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

fn eval_error(e: EvalError) -> anyhow::Error {
    match e {
        EvalError::Config(_) | EvalError::Schema(_) | EvalError::Model(_) => usage(e.to_string()),
        other => other.into(),
    }
}

pub fn run(args: &EvalArgs, out_root: &Path) -> Result<()> {
    let mut rec = Recorder::start("eval");
    let (model, meta, sha) = load_checkpoint(&args.checkpoint).map_err(|e| {
        usage(format!("cannot load checkpoint {}: {e}", args.checkpoint.display()))
    })?;
    if model.kind() != ModelKind::Mrr {
        return Err(usage(format!(
            "{} is a text checkpoint; evaluation needs a multimodal one",
            args.checkpoint.display()
        )));
    }
    rec.input(
        "checkpoint",
        InputRef {
            path: args.checkpoint.clone(),
            sha256: sha,
        },
    );
    let docs = read_corpus(&args.corpus)?;
    rec.input("corpus", InputRef::hash(&args.corpus)?);
    if let Some(p) = &args.config.config {
        rec.input("config", InputRef::hash(p)?);
    }

    let base = EvalConfig {
        labels: meta.labels.clone(),
        ..EvalConfig::default()
    };
    let overrides = gather(args.config.config.as_deref(), &args.config.sets)?;
    let mut cfg: EvalConfig = apply(&base, &overrides, None)?;
    if let Some(l) = args.labels {
        cfg.labels = l.labels();
    }
    cfg.validate().map_err(eval_error)?;
    rec.config(serde_json::to_value(&cfg)?);
    rec.seeds(&[meta.seed]);

    let mut report = evaluate(&model, &docs, &cfg, args.confidence).map_err(eval_error)?;
    if !args.ablate_utterance_length.is_empty() {
        report.ablation = Some(
            utterance_length_ablation(&model, &docs, &cfg, &args.ablate_utterance_length)
                .map_err(eval_error)?,
        );
    }

    let dir = out_dir(args.out.as_deref(), out_root, "eval")?;
    write_text(&dir.join(REPORT_JSON), &(report.to_json() + "\n"))?;
    rec.output(REPORT_JSON);
    let table = report.to_table();
    write_text(&dir.join(REPORT_TXT), &table)?;
    rec.output(REPORT_TXT);
    rec.write(&dir)?;
    info!("wrote {}", dir.join(REPORT_JSON).display());
    print!("{table}");
    Ok(())
}
