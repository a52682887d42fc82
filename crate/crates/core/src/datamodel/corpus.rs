//! Line-delimited JSON corpus of visually grounded dialogues.
//!
//! One [`DialogueDocument`] per line. Detector candidates live in binary
//! sidecar files (see [`super::features`]) referenced from each frame by a
//! path relative to the corpus file and a byte offset.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::features::{self, FeatureError, ObjectCandidate};
use super::geometry::BoundingBox;
use super::label::RelationLabel;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("document `{doc_id}`: {path}: {message}")]
    Schema {
        doc_id: String,
        path: String,
        message: String,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("sidecar {path}: {source}")]
    Sidecar {
        path: PathBuf,
        #[source]
        source: FeatureError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    fn schema(doc_id: &str, path: impl Into<String>, message: impl Into<String>) -> Self {
        CorpusError::Schema {
            doc_id: doc_id.to_string(),
            path: path.into(),
            message: message.into(),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartOfSpeech {
    Noun,
    Pronoun,
    Predicate,
    Other,
}

/// Dialogue participant. Even-indexed utterances belong to speaker A,
/// odd-indexed ones to speaker B.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speaker {
    A,
    B,
}

impl Speaker {
    pub fn of_utterance(idx: usize) -> Speaker {
        if idx % 2 == 0 {
            Speaker::A
        } else {
            Speaker::B
        }
    }

    pub fn other(self) -> Speaker {
        match self {
            Speaker::A => Speaker::B,
            Speaker::B => Speaker::A,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub idx: usize,
    pub text: String,
    pub tokens: Vec<String>,
    pub start_s: f64,
    pub end_s: f64,
}

impl Utterance {
    pub fn speaker(&self) -> Speaker {
        Speaker::of_utterance(self.idx)
    }
}

/// A basic phrase that can take part in reference relations. `span` is a
/// half-open token range within its utterance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub id: u32,
    pub utt: usize,
    pub span: [usize; 2],
    pub pos: PartOfSpeech,
}

impl Mention {
    pub fn start(&self) -> usize {
        self.span[0]
    }

    pub fn end(&self) -> usize {
        self.span[1]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextRelation {
    pub src: u32,
    pub tgt: u32,
    pub label: RelationLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisualRelation {
    pub src: u32,
    pub label: RelationLabel,
    pub boxes: Vec<BoundingBox>,
    pub zero_ref: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatesRef {
    pub path: String,
    pub offset: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t_s: f64,
    pub candidates_ref: CandidatesRef,
    pub visual_relations: Vec<VisualRelation>,
    /// Filled from the sidecar on load.
    #[serde(skip)]
    pub candidates: Vec<ObjectCandidate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DialogueDocument {
    pub schema_version: u32,
    pub doc_id: String,
    pub utterances: Vec<Utterance>,
    pub mentions: Vec<Mention>,
    pub text_relations: Vec<TextRelation>,
    pub frames: Vec<Frame>,
}

impl DialogueDocument {
    pub fn mention(&self, id: u32) -> Option<&Mention> {
        self.mentions.iter().find(|m| m.id == id)
    }

    pub fn mention_index(&self) -> BTreeMap<u32, &Mention> {
        self.mentions.iter().map(|m| (m.id, m)).collect()
    }

    /// Tokens covered by a mention.
    pub fn surface(&self, m: &Mention) -> String {
        self.utterances[m.utt].tokens[m.start()..m.end()].join(" ")
    }

    /// Indices of frames whose timestamp lies in `[start_s, end_s)` of
    /// utterance `utt`.
    pub fn frames_of_utterance(&self, utt: usize) -> Vec<usize> {
        let u = &self.utterances[utt];
        self.frames
            .iter()
            .enumerate()
            .filter(|(_, f)| f.t_s >= u.start_s && f.t_s < u.end_s)
            .map(|(i, _)| i)
            .collect()
    }

    /// Checks every schema invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let id = self.doc_id.as_str();
        if self.schema_version != SCHEMA_VERSION {
            return Err(CorpusError::schema(
                id,
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        for (i, u) in self.utterances.iter().enumerate() {
            if u.idx != i {
                return Err(CorpusError::schema(
                    id,
                    format!("utterances[{i}].idx"),
                    format!("expected {i}, got {}", u.idx),
                ));
            }
            if !(u.start_s.is_finite() && u.end_s.is_finite() && u.start_s <= u.end_s) {
                return Err(CorpusError::schema(
                    id,
                    format!("utterances[{i}]"),
                    "start_s must not exceed end_s",
                ));
            }
        }
        let mut ids = BTreeSet::new();
        for (i, m) in self.mentions.iter().enumerate() {
            if !ids.insert(m.id) {
                return Err(CorpusError::schema(
                    id,
                    format!("mentions[{i}].id"),
                    format!("duplicate mention id {}", m.id),
                ));
            }
            let Some(u) = self.utterances.get(m.utt) else {
                return Err(CorpusError::schema(
                    id,
                    format!("mentions[{i}].utt"),
                    format!("utterance {} does not exist", m.utt),
                ));
            };
            if !(m.start() < m.end() && m.end() <= u.tokens.len()) {
                return Err(CorpusError::schema(
                    id,
                    format!("mentions[{i}].span"),
                    format!(
                        "span {:?} invalid for utterance {} with {} tokens",
                        m.span,
                        m.utt,
                        u.tokens.len()
                    ),
                ));
            }
        }
        for (i, r) in self.text_relations.iter().enumerate() {
            for (field, mid) in [("src", r.src), ("tgt", r.tgt)] {
                if !ids.contains(&mid) {
                    return Err(CorpusError::schema(
                        id,
                        format!("text_relations[{i}].{field}"),
                        format!("unknown mention {mid}"),
                    ));
                }
            }
        }
        let span = match (self.utterances.first(), self.utterances.last()) {
            (Some(f), Some(l)) => Some((f.start_s, l.end_s)),
            _ => None,
        };
        for (fi, f) in self.frames.iter().enumerate() {
            match span {
                Some((lo, hi)) if f.t_s >= lo && f.t_s <= hi => {}
                _ => {
                    return Err(CorpusError::schema(
                        id,
                        format!("frames[{fi}].t_s"),
                        format!("timestamp {} outside the dialogue span", f.t_s),
                    ))
                }
            }
            for (ri, r) in f.visual_relations.iter().enumerate() {
                let path = format!("frames[{fi}].visual_relations[{ri}]");
                if !ids.contains(&r.src) {
                    return Err(CorpusError::schema(
                        id,
                        format!("{path}.src"),
                        format!("unknown mention {}", r.src),
                    ));
                }
                if r.boxes.is_empty() {
                    return Err(CorpusError::schema(
                        id,
                        format!("{path}.boxes"),
                        "at least one gold box required",
                    ));
                }
                if r.zero_ref && r.label.is_direct() {
                    return Err(CorpusError::schema(
                        id,
                        format!("{path}.zero_ref"),
                        "zero references must be indirect",
                    ));
                }
            }
            if let Some(first) = f.candidates.first() {
                let d = first.feature.len();
                if let Some(k) = f.candidates.iter().position(|c| c.feature.len() != d) {
                    return Err(CorpusError::schema(
                        id,
                        format!("frames[{fi}].candidates[{k}]"),
                        "feature length differs within frame",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Sidecar path (relative to the corpus file) used for a document.
pub fn sidecar_path(doc_id: &str) -> String {
    format!("features/{doc_id}.rfnf")
}

/// Points every frame's `candidates_ref` at the block [`save_corpus`] will
/// write for it.
pub fn assign_feature_refs(doc: &mut DialogueDocument) {
    let path = sidecar_path(&doc.doc_id);
    let mut offset = 0u64;
    for f in &mut doc.frames {
        f.candidates_ref = CandidatesRef {
            path: path.clone(),
            offset,
        };
        let d = f.candidates.first().map_or(0, |c| c.feature.len());
        offset += features::block_len(f.candidates.len(), d) as u64;
    }
}

/// Writes the JSONL file and one sidecar per document next to it.
pub fn save_corpus(path: &Path, docs: &[DialogueDocument]) -> Result<(), CorpusError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for doc in docs {
        let mut doc = doc.clone();
        assign_feature_refs(&mut doc);
        if !doc.frames.is_empty() {
            let mut blob = Vec::new();
            for f in &doc.frames {
                blob.extend(features::encode_block(&f.candidates).map_err(|source| {
                    CorpusError::Sidecar {
                        path: PathBuf::from(&f.candidates_ref.path),
                        source,
                    }
                })?);
            }
            let side = dir.join(&doc.frames[0].candidates_ref.path);
            if let Some(parent) = side.parent() {
                fs::create_dir_all(parent).map_err(|e| CorpusError::io(parent, e))?;
            }
            fs::write(&side, blob).map_err(|e| CorpusError::io(&side, e))?;
        }
        serde_json::to_writer(&mut out, &doc).expect("documents serialize");
        out.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    file.write_all(&out).map_err(|e| CorpusError::io(path, e))?;
    Ok(())
}

/// Parses one JSONL line into a document without touching sidecars.
pub fn parse_document(line: &str, line_no: usize) -> Result<DialogueDocument, CorpusError> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    let doc_id = value
        .get("doc_id")
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .unwrap_or_else(|| format!("<line {line_no}>"));
    serde_path_to_error::deserialize(value).map_err(|e| CorpusError::Schema {
        doc_id,
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Loads and validates a corpus, resolving candidate sidecars.
pub fn load_corpus(path: &Path) -> Result<Vec<DialogueDocument>, CorpusError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let file = fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut sidecars: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut doc = parse_document(&line, i + 1)?;
        for (fi, f) in doc.frames.iter_mut().enumerate() {
            let rel = &f.candidates_ref.path;
            if !sidecars.contains_key(rel) {
                let full = dir.join(rel);
                let bytes = fs::read(&full).map_err(|e| CorpusError::io(&full, e))?;
                sidecars.insert(rel.clone(), bytes);
            }
            let bytes = &sidecars[rel];
            let (cands, _) = features::decode_block(bytes, f.candidates_ref.offset as usize)
                .map_err(|e| CorpusError::Schema {
                    doc_id: doc.doc_id.clone(),
                    path: format!("frames[{fi}].candidates_ref"),
                    message: e.to_string(),
                })?;
            f.candidates = cands;
        }
        doc.validate()?;
        docs.push(doc);
    }
    Ok(docs)
}
