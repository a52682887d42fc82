use anyhow::{anyhow, Result};
use log::info;
use serde_json::json;

use mmref::datamodel::save_corpus;
use mmref::synthgen::{generate, resolvability_audit, SynthConfig, RESOLUTION_WINDOW};

use crate::cli::SynthArgs;
use crate::config::{apply, gather};
use crate::error::usage;
use crate::manifest::Recorder;

use super::{out_dir, write_json};

pub const CORPUS_FILE: &str = "corpus.jsonl";

pub fn run(args: &SynthArgs, out_root: &std::path::Path) -> Result<()> {
    let mut rec = Recorder::start("synth");
    let overrides = gather(args.config.config.as_deref(), &args.config.sets)?;
    let mut cfg: SynthConfig = apply(&SynthConfig::default(), &overrides, None)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.dialogues {
        cfg.dialogues = n;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    rec.config(serde_json::to_value(&cfg)?);
    rec.seeds(&[cfg.seed]);
    if let Some(p) = &args.config.config {
        rec.input("config", crate::manifest::InputRef::hash(p)?);
    }

    let dir = out_dir(args.out.as_deref(), out_root, "synth")?;
    let corpus = generate(&cfg).map_err(|e| usage(e.to_string()))?;
    let corpus_path = dir.join(CORPUS_FILE);
    save_corpus(&corpus_path, &corpus.documents)?;
    rec.output(CORPUS_FILE);
    rec.output("features");

    let audit = resolvability_audit(&corpus.documents, RESOLUTION_WINDOW);
    let audit_json = match &audit {
        Ok(report) => json!({ "passed": true, "report": report, "stats": corpus.stats }),
        Err(e) => json!({ "passed": false, "failures": e.failures, "stats": corpus.stats }),
    };
    write_json(&dir.join("audit.json"), &audit_json)?;
    rec.output("audit.json");
    write_json(&dir.join("prototypes.json"), &corpus.prototypes)?;
    rec.output("prototypes.json");
    rec.write(&dir)?;

    let report = audit.map_err(|e| anyhow!("{e}"))?;
    info!(
        "wrote {} dialogues to {} ({} pronouns, {} zero references)",
        corpus.documents.len(),
        corpus_path.display(),
        report.pronouns,
        report.zero_references
    );
    println!("{}", corpus_path.display());
    Ok(())
}
