use log::warn;
use serde::{Deserialize, Serialize};

use crate::datamodel::{
    build_mm_instances, iou, DialogueDocument, MmInstance, PartOfSpeech, PerLabel, RelationLabel,
    WindowMode,
};
use crate::heads::predict_objects;
use crate::model::Model;
use crate::numerics::Tensor;

use super::confidence::confidence_stats;
use super::recall::recall_from_ranks;
use super::report::{AblationBlock, EvalReport, ReportRow, REPORT_SCHEMA_VERSION};
use super::EvalError;

/// Anything that scores window mentions against frame candidates.
pub trait Grounder {
    /// Scores for every surviving mention of the window against every
    /// candidate of the frame, one `m×q` matrix per requested label.
    /// Softmax over a row gives the candidate confidences.
    fn ground(&self, inst: &MmInstance, labels: &[RelationLabel]) -> Result<Grounding, EvalError>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grounding {
    /// Row order of every score matrix.
    pub mentions: Vec<u32>,
    pub scores: PerLabel<Tensor>,
}

impl Grounder for Model {
    fn ground(&self, inst: &MmInstance, labels: &[RelationLabel]) -> Result<Grounding, EvalError> {
        match self.prepare_mm(inst, labels)? {
            None => Ok(Grounding {
                mentions: Vec::new(),
                scores: PerLabel::new(),
            }),
            Some(prep) => Ok(Grounding {
                scores: self.mm_scores(&prep, labels)?,
                mentions: prep.mentions,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Positive and strictly ascending.
    pub ks: Vec<usize>,
    /// In `(0, 1]`.
    pub iou_threshold: f64,
    /// Utterances per evaluation window.
    pub window: usize,
    /// `Eval` queries every utterance once; `Train` queries exactly the
    /// training instances.
    #[serde(default = "eval_mode")]
    pub mode: WindowMode,
    pub labels: Vec<RelationLabel>,
}

fn eval_mode() -> WindowMode {
    WindowMode::Eval
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ks: vec![1, 5, 10],
            iou_threshold: 0.5,
            window: 1,
            mode: WindowMode::Eval,
            labels: RelationLabel::ALL.to_vec(),
        }
    }
}

impl EvalConfig {
    pub fn grounding() -> Self {
        EvalConfig {
            labels: vec![RelationLabel::Direct],
            ..EvalConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.ks.is_empty() || self.ks[0] == 0 || self.ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EvalError::Config(format!(
                "k values must be positive and strictly ascending, got {:?}",
                self.ks
            )));
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(EvalError::Config(format!(
                "IoU threshold must lie in (0, 1], got {}",
                self.iou_threshold
            )));
        }
        if self.window == 0 {
            return Err(EvalError::Config("window must be at least 1".into()));
        }
        if self.labels.is_empty() {
            return Err(EvalError::Config("no labels to evaluate".into()));
        }
        Ok(())
    }
}

/// Query category, from the part of speech of the source mention.
/// `Noun`, `Pronoun` and `Other` partition `Overall`; `Zero` is the slice
/// of zero-reference queries and cuts across the partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Overall,
    Noun,
    Pronoun,
    Other,
    Zero,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Overall,
        Category::Noun,
        Category::Pronoun,
        Category::Other,
        Category::Zero,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Overall => "overall",
            Category::Noun => "noun",
            Category::Pronoun => "pronoun",
            Category::Other => "other",
            Category::Zero => "zero",
        }
    }

    fn of_pos(pos: PartOfSpeech) -> Category {
        match pos {
            PartOfSpeech::Noun => Category::Noun,
            PartOfSpeech::Pronoun => Category::Pronoun,
            PartOfSpeech::Predicate | PartOfSpeech::Other => Category::Other,
        }
    }
}

/// Name of the row aggregating every indirect label.
pub const INDIRECT_ROW: &str = "INDIRECT";

/// One evaluated (mention, relation, frame) query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub doc_id: String,
    pub frame: usize,
    pub mention: u32,
    pub label: RelationLabel,
    /// `Noun`, `Pronoun` or `Other`.
    pub category: Category,
    pub zero_ref: bool,
    /// Zero-based rank of the first matching prediction; `None` when nothing
    /// matches or the mention was truncated out of the window.
    pub first_hit: Option<usize>,
    /// Candidate confidences in rank order; empty for truncated mentions.
    pub confidences: Vec<f64>,
}

impl QueryRecord {
    pub fn in_category(&self, c: Category) -> bool {
        match c {
            Category::Overall => true,
            Category::Zero => self.zero_ref,
            c => self.category == c,
        }
    }
}

/// Every query of the corpus with at least one candidate matching a gold
/// box. Queries come from mentions of each window's last utterance, so each
/// is counted once whatever the window length.
pub fn collect_queries<G: Grounder + ?Sized>(
    grounder: &G,
    docs: &[DialogueDocument],
    cfg: &EvalConfig,
) -> Result<Vec<QueryRecord>, EvalError> {
    cfg.validate()?;
    let thr = cfg.iou_threshold;
    let mut out = Vec::new();
    for doc in docs {
        for inst in build_mm_instances(doc, cfg.window, cfg.mode) {
            let last = inst.window.last_utt();
            let queries: Vec<_> = inst
                .visual_relations
                .iter()
                .filter(|vr| cfg.labels.contains(&vr.label))
                .filter(|vr| inst.window.mention(vr.src).is_some_and(|m| m.utt == last))
                .filter(|vr| {
                    inst.candidates
                        .iter()
                        .any(|c| vr.boxes.iter().any(|g| iou(&c.bbox, g) >= thr))
                })
                .collect();
            if queries.is_empty() {
                continue;
            }
            let mut labels: Vec<RelationLabel> = queries.iter().map(|vr| vr.label).collect();
            labels.sort();
            labels.dedup();
            let grounding = grounder.ground(&inst, &labels)?;
            let mut preds = PerLabel::new();
            for &l in &labels {
                let scores = grounding
                    .scores
                    .get(l)
                    .filter(|_| !grounding.mentions.is_empty());
                let p = match scores {
                    Some(s) => predict_objects(s, &grounding.mentions, l)?,
                    None => Vec::new(),
                };
                preds.insert(l, p);
            }
            for vr in queries {
                let mention = inst.window.mention(vr.src).expect("filtered above");
                let pred = preds
                    .get(vr.label)
                    .and_then(|p| p.iter().find(|p| p.mention == vr.src));
                let (first_hit, confidences) = match pred {
                    None => (None, Vec::new()),
                    Some(p) => (
                        p.ranked.iter().position(|r| {
                            let b = &inst.candidates[r.index].bbox;
                            vr.boxes.iter().any(|g| iou(b, g) >= thr)
                        }),
                        p.ranked.iter().map(|r| r.confidence).collect(),
                    ),
                };
                out.push(QueryRecord {
                    doc_id: doc.doc_id.clone(),
                    frame: inst.frame,
                    mention: vr.src,
                    label: vr.label,
                    category: Category::of_pos(mention.pos),
                    zero_ref: vr.zero_ref,
                    first_hit,
                    confidences,
                });
            }
        }
    }
    Ok(out)
}

/// Recall rows per (relation, category, k). Relations follow `cfg.labels`,
/// followed by the indirect aggregate when any indirect label is present.
/// Categories without queries are omitted, except `Overall`.
pub fn report_rows(records: &[QueryRecord], cfg: &EvalConfig) -> Vec<ReportRow> {
    let mut groups: Vec<(String, Vec<&QueryRecord>)> = cfg
        .labels
        .iter()
        .map(|&l| {
            let rs = records.iter().filter(|r| r.label == l).collect();
            (l.as_str().to_string(), rs)
        })
        .collect();
    if cfg.labels.iter().any(|l| !l.is_direct()) {
        let rs = records
            .iter()
            .filter(|r| !r.label.is_direct() && cfg.labels.contains(&r.label))
            .collect();
        groups.push((INDIRECT_ROW.to_string(), rs));
    }
    let mut rows = Vec::new();
    for (relation, rs) in groups {
        for c in Category::ALL {
            let ranks: Vec<Option<usize>> = rs
                .iter()
                .filter(|r| r.in_category(c))
                .map(|r| r.first_hit)
                .collect();
            if ranks.is_empty() && c != Category::Overall {
                warn!("{relation}: no {} queries, category omitted", c.as_str());
                continue;
            }
            for &k in &cfg.ks {
                rows.push(ReportRow {
                    relation: relation.clone(),
                    category: c,
                    k,
                    recall: recall_from_ranks(&ranks, k),
                    n: ranks.len(),
                });
            }
        }
    }
    rows
}

/// Confidence lists of every query, in rank order.
pub fn confidence_lists(records: &[QueryRecord]) -> Vec<Vec<f64>> {
    records
        .iter()
        .filter(|r| !r.confidences.is_empty())
        .map(|r| r.confidences.clone())
        .collect()
}

/// Recall table for `cfg.labels`; confidence statistics when requested.
pub fn evaluate<G: Grounder + ?Sized>(
    grounder: &G,
    docs: &[DialogueDocument],
    cfg: &EvalConfig,
    with_confidence: bool,
) -> Result<EvalReport, EvalError> {
    let records = collect_queries(grounder, docs, cfg)?;
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        rows: report_rows(&records, cfg),
        confidence: with_confidence.then(|| confidence_stats(&confidence_lists(&records), &cfg.ks)),
        ablation: None,
        config: cfg.clone(),
    })
}

/// Direct-reference recall split by category.
pub fn evaluate_grounding<G: Grounder + ?Sized>(
    grounder: &G,
    docs: &[DialogueDocument],
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let cfg = EvalConfig {
        labels: vec![RelationLabel::Direct],
        ..cfg.clone()
    };
    evaluate(grounder, docs, &cfg, false)
}

/// Recall for every label, indirect ones included.
pub fn evaluate_mrr<G: Grounder + ?Sized>(
    grounder: &G,
    docs: &[DialogueDocument],
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let cfg = EvalConfig {
        labels: RelationLabel::ALL.to_vec(),
        ..cfg.clone()
    };
    evaluate(grounder, docs, &cfg, false)
}

/// Re-runs the evaluation with windows of each length, one block per length.
pub fn utterance_length_ablation<G: Grounder + ?Sized>(
    grounder: &G,
    docs: &[DialogueDocument],
    cfg: &EvalConfig,
    lengths: &[usize],
) -> Result<Vec<AblationBlock>, EvalError> {
    if let Some(&bad) = lengths.iter().find(|&&l| l == 0) {
        return Err(EvalError::Config(format!("window length {bad} is below 1")));
    }
    lengths
        .iter()
        .map(|&length| {
            let cfg = EvalConfig {
                window: length,
                ..cfg.clone()
            };
            let records = collect_queries(grounder, docs, &cfg)?;
            Ok(AblationBlock {
                length,
                rows: report_rows(&records, &cfg),
            })
        })
        .collect()
}
