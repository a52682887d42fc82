#![allow(dead_code)]

use mmref::datamodel::{
    BoundingBox, CandidatesRef, DialogueDocument, Frame, Mention, MmInstance, ObjectCandidate,
    PartOfSpeech, PerLabel, RelationLabel, TextRelation, Utterance, VisualRelation,
    SCHEMA_VERSION,
};
use mmref::evaluation::{EvalError, Grounder, Grounding};
use mmref::numerics::Tensor;

/// Object classes of the monotone corpus. Class 0 is a distractor that no
/// utterance mentions; it always occupies candidate slot 0.
pub const CLASSES: [&str; 4] = ["plate", "cup", "bowl", "knife"];

pub fn class_box(c: usize) -> BoundingBox {
    let x = 10.0 + 100.0 * c as f64;
    BoundingBox::new(x, 10.0, x + 80.0, 90.0).unwrap()
}

fn one_hot(c: usize) -> Vec<f32> {
    (0..CLASSES.len()).map(|i| if i == c { 1.0 } else { 0.0 }).collect()
}

pub fn frame_candidates() -> Vec<ObjectCandidate> {
    (0..CLASSES.len())
        .map(|c| ObjectCandidate {
            bbox: class_box(c),
            confidence: 0.9,
            feature: one_hot(c),
        })
        .collect()
}

/// Dialogues built from blocks "take the X", `d - 1` fillers, "wash it",
/// where `d` cycles through 1..=4. A pronoun's antecedent is always the
/// most recent noun, `d` utterances back, so widening the window only ever
/// brings more antecedents into view.
pub fn monotone_corpus(dialogues: usize) -> Vec<DialogueDocument> {
    (0..dialogues).map(monotone_dialogue).collect()
}

fn monotone_dialogue(i: usize) -> DialogueDocument {
    let mut utterances: Vec<Utterance> = Vec::new();
    let mut mentions = Vec::new();
    let mut text_relations = Vec::new();
    let mut frames = Vec::new();
    let mut push = |tokens: &[&str], rels: Vec<VisualRelation>, utterances: &mut Vec<Utterance>| {
        let idx = utterances.len();
        let start_s = 2.0 * idx as f64;
        utterances.push(Utterance {
            idx,
            text: tokens.join(" "),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            start_s,
            end_s: start_s + 1.0,
        });
        frames.push(Frame {
            t_s: start_s + 0.5,
            candidates_ref: CandidatesRef {
                path: String::new(),
                offset: 0,
            },
            visual_relations: rels,
            candidates: frame_candidates(),
        });
        idx
    };
    let direct = |src: u32, c: usize| VisualRelation {
        src,
        label: RelationLabel::Direct,
        boxes: vec![class_box(c)],
        zero_ref: false,
    };
    let mut id = 0u32;
    for b in 0..8 {
        let d = 1 + (b + i) % 4;
        let c = 1 + (b + 2 * i) % (CLASSES.len() - 1);
        let noun = id;
        let u = push(&["take", "the", CLASSES[c]], vec![direct(noun, c)], &mut utterances);
        mentions.push(Mention {
            id: noun,
            utt: u,
            span: [2, 3],
            pos: PartOfSpeech::Noun,
        });
        for _ in 1..d {
            push(&["ok"], Vec::new(), &mut utterances);
        }
        let pron = id + 1;
        let u = push(&["wash", "it"], vec![direct(pron, c)], &mut utterances);
        mentions.push(Mention {
            id: pron,
            utt: u,
            span: [1, 2],
            pos: PartOfSpeech::Pronoun,
        });
        text_relations.push(TextRelation {
            src: pron,
            tgt: noun,
            label: RelationLabel::Direct,
        });
        id += 2;
    }
    DialogueDocument {
        schema_version: SCHEMA_VERSION,
        doc_id: format!("mono{i:03}"),
        utterances,
        mentions,
        text_relations,
        frames,
    }
}

/// Grounds nouns by matching their class to one-hot candidate features and
/// pronouns through the most recent noun inside the window. Mentions it
/// cannot resolve get uniform scores.
pub struct RuleGrounder;

impl Grounder for RuleGrounder {
    fn ground(&self, inst: &MmInstance, labels: &[RelationLabel]) -> Result<Grounding, EvalError> {
        let w = &inst.window;
        let q = inst.candidates.len();
        let class_of = |m: &Mention| {
            let u = &w.utterances[m.utt - w.utts.start];
            let word = &u.tokens[m.start()];
            CLASSES.iter().position(|c| c == word)
        };
        let mut rows = Vec::new();
        let mut last_class = None;
        for m in &w.mentions {
            let class = match m.pos {
                PartOfSpeech::Noun => {
                    last_class = class_of(m);
                    last_class
                }
                PartOfSpeech::Pronoun => last_class,
                _ => None,
            };
            let row: Vec<f64> = inst
                .candidates
                .iter()
                .map(|cand| match class {
                    Some(c) if cand.feature[c] > 0.5 => 10.0,
                    _ => 0.0,
                })
                .collect();
            rows.push(row);
        }
        let scores = Tensor::matrix(
            rows.len(),
            q,
            rows.into_iter().flatten().collect(),
        )?;
        let mut out = PerLabel::new();
        for &l in labels {
            out.insert(l, scores.clone());
        }
        Ok(Grounding {
            mentions: w.mention_ids(),
            scores: out,
        })
    }
}
