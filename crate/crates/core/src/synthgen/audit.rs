use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{iou, DialogueDocument, PartOfSpeech, RelationLabel, IOU_THRESHOLD};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditFailure {
    pub doc_id: String,
    pub mention: u32,
    pub reason: String,
}

impl fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}: {}", self.doc_id, self.mention, self.reason)
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("resolvability audit failed for mentions {}", list(.failures))]
pub struct AuditError {
    pub failures: Vec<AuditFailure>,
}

fn list(f: &[AuditFailure]) -> String {
    f.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Shortest coreference chain from each pronoun to a grounded noun,
    /// keyed by document id and mention id.
    pub chain_lengths: BTreeMap<String, BTreeMap<u32, usize>>,
    pub pronouns: usize,
    pub zero_references: usize,
}

/// Shortest number of direct-reference hops from `start` to a mention in
/// `targets`, moving only through mentions accepted by `inside`.
pub fn chain_length(
    doc: &DialogueDocument,
    start: u32,
    targets: &BTreeSet<u32>,
    inside: impl Fn(u32) -> bool,
) -> Option<usize> {
    let mut next: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for r in doc.text_relations.iter().filter(|r| r.label.is_direct()) {
        next.entry(r.src).or_default().push(r.tgt);
    }
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((m, depth)) = queue.pop_front() {
        if depth > 0 && targets.contains(&m) {
            return Some(depth);
        }
        for &t in next.get(&m).into_iter().flatten() {
            if inside(t) && seen.insert(t) {
                queue.push_back((t, depth + 1));
            }
        }
    }
    None
}

/// Checks that every pronoun reaches a visually grounded noun through
/// direct-reference links inside its `window`-utterance context, and that
/// every zero reference has a gold object among its frame's candidates.
pub fn resolvability_audit(
    docs: &[DialogueDocument],
    window: usize,
) -> Result<AuditReport, AuditError> {
    let mut report = AuditReport::default();
    let mut failures = Vec::new();
    for doc in docs {
        let idx = doc.mention_index();
        let grounded: BTreeSet<u32> = doc
            .frames
            .iter()
            .flat_map(|f| f.visual_relations.iter())
            .filter(|v| v.label == RelationLabel::Direct)
            .map(|v| v.src)
            .filter(|m| idx.get(m).is_some_and(|x| x.pos == PartOfSpeech::Noun))
            .collect();
        let lengths = report.chain_lengths.entry(doc.doc_id.clone()).or_default();
        for m in doc.mentions.iter().filter(|m| m.pos == PartOfSpeech::Pronoun) {
            report.pronouns += 1;
            let lo = (m.utt + 1).saturating_sub(window.max(1));
            let inside = |id: u32| idx.get(&id).is_some_and(|x| x.utt >= lo && x.utt <= m.utt);
            match chain_length(doc, m.id, &grounded, inside) {
                Some(n) => {
                    lengths.insert(m.id, n);
                }
                None => failures.push(AuditFailure {
                    doc_id: doc.doc_id.clone(),
                    mention: m.id,
                    reason: format!("pronoun has no antecedent chain to a grounded noun within {window} utterances"),
                }),
            }
        }
        for f in &doc.frames {
            for v in f.visual_relations.iter().filter(|v| v.zero_ref) {
                report.zero_references += 1;
                let found = f.candidates.iter().any(|c| {
                    v.boxes.iter().any(|b| iou(b, &c.bbox) >= IOU_THRESHOLD)
                });
                if !found {
                    failures.push(AuditFailure {
                        doc_id: doc.doc_id.clone(),
                        mention: v.src,
                        reason: format!("zero {} reference has no gold object among the candidates", v.label),
                    });
                }
            }
        }
    }
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(AuditError { failures })
    }
}
