use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::{Deserialize, Serialize};

use mmref::evaluation::{compare, delta_table, DeltaRow, EvalReport};

use crate::cli::ReportArgs;
use crate::error::usage;
use crate::manifest::{InputRef, Recorder};
use crate::plot;

use super::{out_dir, write_json, write_text};

pub const COMPARISON_JSON: &str = "comparison.json";
pub const COMPARISON_TXT: &str = "comparison.txt";
pub const RECALL_PLOT: &str = "recall_vs_length.svg";
pub const CONFIDENCE_PLOT: &str = "confidence.svg";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub path: PathBuf,
    pub rows: Vec<DeltaRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonFile {
    pub baseline: String,
    pub baseline_path: PathBuf,
    pub comparisons: Vec<Comparison>,
}

/// A report loaded from disk with a display name.
pub struct Named {
    pub name: String,
    pub path: PathBuf,
    pub report: EvalReport,
}

/// File stem, or the parent directory name for files called `report.json`.
fn display_name(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    match stem.as_deref() {
        Some("report") | None => path
            .parent()
            .and_then(|p| p.file_name())
            .map_or_else(|| "report".into(), |n| n.to_string_lossy().into_owned()),
        Some(s) => s.to_string(),
    }
}

fn load(path: &Path) -> Result<Named> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read report {}: {e}", path.display())))?;
    let report = EvalReport::from_json(&text)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(Named {
        name: display_name(path),
        path: path.to_path_buf(),
        report,
    })
}

/// Suffixes repeated names with their position so every series is distinct.
fn dedupe(named: &mut [Named]) {
    for i in 0..named.len() {
        if named.iter().filter(|n| n.name == named[i].name).count() > 1 {
            named[i].name = format!("{}#{}", named[i].name, i + 1);
        }
    }
}

pub fn run(args: &ReportArgs, out_root: &Path) -> Result<()> {
    let mut rec = Recorder::start("report");
    if args.reports.is_empty() {
        return Err(usage("at least one report is required"));
    }
    let baseline_path = args.baseline.clone().unwrap_or_else(|| args.reports[0].clone());
    let mut all = vec![load(&baseline_path)?];
    rec.input("baseline", InputRef::hash(&baseline_path)?);
    for (i, p) in args.reports.iter().enumerate() {
        if args.baseline.is_none() && i == 0 && args.reports.len() > 1 {
            continue;
        }
        all.push(load(p)?);
        rec.input(&format!("report{i}"), InputRef::hash(p)?);
    }
    dedupe(&mut all);
    rec.config(serde_json::json!({
        "baseline": baseline_path,
        "reports": args.reports,
        "plots": !args.no_plots,
    }));

    let (baseline, others) = all.split_first().expect("baseline loaded");
    let mut text = String::new();
    let mut comparisons = Vec::new();
    for o in others {
        let rows = compare(&baseline.report, &o.report)
            .map_err(|e| usage(format!("{} vs {}: {e}", baseline.path.display(), o.path.display())))?;
        text.push_str(&format!("== {} vs {}\n", o.name, baseline.name));
        text.push_str(&delta_table(&rows, &baseline.name, &o.name));
        text.push('\n');
        comparisons.push(Comparison {
            name: o.name.clone(),
            path: o.path.clone(),
            rows,
        });
    }

    let dir = out_dir(args.out.as_deref(), out_root, "report")?;
    write_text(&dir.join(COMPARISON_TXT), &text)?;
    rec.output(COMPARISON_TXT);
    write_json(
        &dir.join(COMPARISON_JSON),
        &ComparisonFile {
            baseline: baseline.name.clone(),
            baseline_path: baseline.path.clone(),
            comparisons,
        },
    )?;
    rec.output(COMPARISON_JSON);
    if !args.no_plots {
        if plot::recall_vs_length(&dir.join(RECALL_PLOT), &all)? {
            rec.output(RECALL_PLOT);
        }
        if plot::confidence(&dir.join(CONFIDENCE_PLOT), &all)? {
            rec.output(CONFIDENCE_PLOT);
        }
    }
    rec.write(&dir)?;
    print!("{text}");
    Ok(())
}
