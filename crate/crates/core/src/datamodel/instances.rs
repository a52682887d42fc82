//! Sliding-window training and evaluation instances.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::corpus::{DialogueDocument, Mention, TextRelation, Utterance, VisualRelation};
use super::features::ObjectCandidate;

/// Default number of utterances per window.
pub const DEFAULT_WINDOW: usize = 3;

/// How multimodal windows are laid out over a dialogue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowMode {
    /// Stride-1 windows of `w` utterances; each paired with the frames of its
    /// last utterance.
    Train,
    /// One window per utterance `u`, covering `u` and up to `w - 1`
    /// preceding utterances; queries come from `u`'s frames only.
    Eval,
}

/// A contiguous run of utterances with the mentions and textual relations
/// that lie entirely inside it.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub doc_id: String,
    /// Absolute utterance indices covered.
    pub utts: Range<usize>,
    pub utterances: Vec<Utterance>,
    /// Mentions inside the window, ordered by (utterance, start).
    pub mentions: Vec<Mention>,
    pub text_relations: Vec<TextRelation>,
}

impl Window {
    pub fn new(doc: &DialogueDocument, utts: Range<usize>) -> Window {
        let utterances = doc.utterances[utts.clone()].to_vec();
        let mut mentions: Vec<Mention> = doc
            .mentions
            .iter()
            .filter(|m| utts.contains(&m.utt))
            .cloned()
            .collect();
        mentions.sort_by_key(|m| (m.utt, m.start(), m.id));
        let ids: BTreeSet<u32> = mentions.iter().map(|m| m.id).collect();
        let text_relations = doc
            .text_relations
            .iter()
            .filter(|r| ids.contains(&r.src) && ids.contains(&r.tgt))
            .cloned()
            .collect();
        Window {
            doc_id: doc.doc_id.clone(),
            utts,
            utterances,
            mentions,
            text_relations,
        }
    }

    /// Absolute index of the last utterance.
    pub fn last_utt(&self) -> usize {
        self.utts.end - 1
    }

    pub fn mention_ids(&self) -> Vec<u32> {
        self.mentions.iter().map(|m| m.id).collect()
    }

    pub fn mention(&self, id: u32) -> Option<&Mention> {
        self.mentions.iter().find(|m| m.id == id)
    }
}

/// Window used for textual reference resolution.
pub type TextInstance = Window;

/// A window paired with one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct MmInstance {
    pub window: Window,
    /// Index of the frame in the source document.
    pub frame: usize,
    pub t_s: f64,
    pub candidates: Vec<ObjectCandidate>,
    /// Gold relations of the frame whose source mention lies in the window.
    pub visual_relations: Vec<VisualRelation>,
}

fn window_ranges(n: usize, w: usize) -> Vec<Range<usize>> {
    let w = w.max(1);
    if n == 0 {
        return Vec::new();
    }
    if n <= w {
        return vec![0..n];
    }
    (0..=n - w).map(|s| s..s + w).collect()
}

/// Stride-1 windows of `window` utterances. Documents shorter than the
/// window yield one window covering everything.
pub fn build_text_instances(doc: &DialogueDocument, window: usize) -> Vec<TextInstance> {
    window_ranges(doc.utterances.len(), window)
        .into_iter()
        .map(|r| Window::new(doc, r))
        .collect()
}

pub fn build_mm_instances(
    doc: &DialogueDocument,
    window: usize,
    mode: WindowMode,
) -> Vec<MmInstance> {
    if doc.frames.is_empty() {
        return Vec::new();
    }
    let n = doc.utterances.len();
    let ranges: Vec<Range<usize>> = match mode {
        WindowMode::Train => window_ranges(n, window),
        WindowMode::Eval => (0..n)
            .map(|u| (u + 1).saturating_sub(window.max(1))..u + 1)
            .collect(),
    };
    let mut out = Vec::new();
    for r in ranges {
        let win = Window::new(doc, r);
        let frames = doc.frames_of_utterance(win.last_utt());
        if frames.is_empty() {
            continue;
        }
        let ids: BTreeSet<u32> = win.mentions.iter().map(|m| m.id).collect();
        for fi in frames {
            let f = &doc.frames[fi];
            out.push(MmInstance {
                window: win.clone(),
                frame: fi,
                t_s: f.t_s,
                candidates: f.candidates.clone(),
                visual_relations: f
                    .visual_relations
                    .iter()
                    .filter(|v| ids.contains(&v.src))
                    .cloned()
                    .collect(),
            });
        }
    }
    out
}
