use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::confidence::ConfidenceStats;
use super::evaluate::{Category, EvalConfig};
use super::EvalError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Label name or the indirect aggregate.
    pub relation: String,
    pub category: Category,
    pub k: usize,
    /// `None` when the row has no queries.
    pub recall: Option<f64>,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationBlock {
    /// Utterances per window.
    pub length: usize,
    pub rows: Vec<ReportRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub config: EvalConfig,
    pub rows: Vec<ReportRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<ConfidenceStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ablation: Option<Vec<AblationBlock>>,
}

impl EvalReport {
    pub fn recall(&self, relation: &str, category: Category, k: usize) -> Option<f64> {
        self.row(relation, category, k).and_then(|r| r.recall)
    }

    pub fn row(&self, relation: &str, category: Category, k: usize) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.relation == relation && r.category == category && r.k == k)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(s: &str) -> Result<EvalReport, EvalError> {
        let r: EvalReport = serde_json::from_str(s).map_err(|e| EvalError::Schema(e.to_string()))?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(EvalError::Schema(format!(
                "report schema version {} is not {REPORT_SCHEMA_VERSION}",
                r.schema_version
            )));
        }
        Ok(r)
    }

    /// Aligned text table, one line per (relation, category) with a column
    /// per k, followed by any ablation blocks and confidence summary.
    pub fn to_table(&self) -> String {
        let mut out = recall_table(&self.rows, &self.config.ks);
        if let Some(blocks) = &self.ablation {
            for b in blocks {
                let _ = writeln!(out, "\nwindow length {}", b.length);
                out.push_str(&recall_table(&b.rows, &self.config.ks));
            }
        }
        if let Some(c) = &self.confidence {
            let _ = writeln!(out, "\n{:<10} {:>7} {:>8}", "group", "n", "mean");
            for g in &c.groups {
                let _ = writeln!(out, "{:<10} {:>7} {:>8.4}", g.name, g.count, g.mean);
            }
        }
        out
    }
}

fn fmt_recall(r: Option<f64>) -> String {
    r.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

type RowKey = (String, Category);

fn grouped(rows: &[ReportRow]) -> Vec<(RowKey, usize, BTreeMap<usize, Option<f64>>)> {
    let mut out: Vec<(RowKey, usize, BTreeMap<usize, Option<f64>>)> = Vec::new();
    for r in rows {
        let key = (r.relation.clone(), r.category);
        match out.iter_mut().find(|(k, _, _)| *k == key) {
            Some((_, _, m)) => {
                m.insert(r.k, r.recall);
            }
            None => out.push((key, r.n, BTreeMap::from([(r.k, r.recall)]))),
        }
    }
    out
}

fn recall_table(rows: &[ReportRow], ks: &[usize]) -> String {
    let mut out = format!("{:<10} {:<8} {:>6}", "relation", "category", "n");
    for k in ks {
        let _ = write!(out, " {:>7}", format!("R@{k}"));
    }
    out.push('\n');
    for ((relation, category), n, recalls) in grouped(rows) {
        let _ = write!(out, "{relation:<10} {:<8} {n:>6}", category.as_str());
        for k in ks {
            let _ = write!(out, " {:>7}", fmt_recall(recalls.get(k).copied().flatten()));
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mark {
    #[serde(rename = "+")]
    Improved,
    #[serde(rename = "-")]
    Deteriorated,
    #[serde(rename = "=")]
    Unchanged,
    /// One side has no recall.
    #[serde(rename = "?")]
    Undefined,
}

impl Mark {
    pub fn symbol(self) -> char {
        match self {
            Mark::Improved => '+',
            Mark::Deteriorated => '-',
            Mark::Unchanged => '=',
            Mark::Undefined => '?',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub relation: String,
    pub category: Category,
    pub k: usize,
    pub baseline: Option<f64>,
    pub other: Option<f64>,
    /// `other - baseline`.
    pub delta: Option<f64>,
    pub mark: Mark,
}

/// Row-wise differences of `other` against `baseline` over their shared
/// (relation, category, k) rows, in baseline order.
pub fn compare(baseline: &EvalReport, other: &EvalReport) -> Result<Vec<DeltaRow>, EvalError> {
    if baseline.schema_version != other.schema_version {
        return Err(EvalError::Schema(format!(
            "schema versions differ: {} vs {}",
            baseline.schema_version, other.schema_version
        )));
    }
    if baseline.config.iou_threshold != other.config.iou_threshold {
        return Err(EvalError::Schema(format!(
            "IoU thresholds differ: {} vs {}",
            baseline.config.iou_threshold, other.config.iou_threshold
        )));
    }
    let rows: Vec<DeltaRow> = baseline
        .rows
        .iter()
        .filter_map(|b| {
            let o = other.row(&b.relation, b.category, b.k)?;
            let delta = match (b.recall, o.recall) {
                (Some(x), Some(y)) => Some(y - x),
                _ => None,
            };
            let mark = match delta {
                None => Mark::Undefined,
                Some(d) if d > 0.0 => Mark::Improved,
                Some(d) if d < 0.0 => Mark::Deteriorated,
                Some(_) => Mark::Unchanged,
            };
            Some(DeltaRow {
                relation: b.relation.clone(),
                category: b.category,
                k: b.k,
                baseline: b.recall,
                other: o.recall,
                delta,
                mark,
            })
        })
        .collect();
    if rows.is_empty() && !baseline.rows.is_empty() {
        return Err(EvalError::Schema("reports share no rows".into()));
    }
    Ok(rows)
}

/// Aligned text rendering of [`compare`] output.
pub fn delta_table(rows: &[DeltaRow], baseline_name: &str, other_name: &str) -> String {
    let mut out = format!(
        "{:<10} {:<8} {:>4} {:>10} {:>10} {:>8}\n",
        "relation", "category", "k", baseline_name, other_name, "delta"
    );
    for r in rows {
        let delta = r.delta.map_or_else(|| "-".to_string(), |d| format!("{d:+.3}"));
        let _ = writeln!(
            out,
            "{:<10} {:<8} {:>4} {:>10} {:>10} {:>8} {}",
            r.relation,
            r.category.as_str(),
            r.k,
            fmt_recall(r.baseline),
            fmt_recall(r.other),
            delta,
            r.mark.symbol()
        );
    }
    out
}
