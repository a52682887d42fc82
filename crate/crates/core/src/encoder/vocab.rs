use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::datamodel::DialogueDocument;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const BOS: u32 = 2;
pub const SPEAKER_A: u32 = 3;
pub const SPEAKER_B: u32 = 4;

/// Surface forms of the reserved ids, in id order. A vocabulary file starts
/// with exactly these lines.
pub const RESERVED: [&str; 5] = ["<pad>", "<unk>", "<bos>", "<spk_a>", "<spk_b>"];

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("vocabulary header line {line}: expected `{expected}`, found `{found}`")]
    Header {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("duplicate token `{0}`")]
    Duplicate(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Dense token-to-id map. Ids `0..5` are reserved (see [`RESERVED`]).
#[derive(Clone, Debug, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn from_tokens<I, S>(tokens: I) -> Result<Vocab, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocab {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for t in RESERVED.into_iter().map(String::from).chain(tokens.into_iter().map(Into::into)) {
            if v.index.contains_key(&t) {
                return Err(VocabError::Duplicate(t));
            }
            v.index.insert(t.clone(), v.tokens.len() as u32);
            v.tokens.push(t);
        }
        Ok(v)
    }

    /// Every distinct corpus token, sorted.
    pub fn build(docs: &[DialogueDocument]) -> Vocab {
        let set: BTreeSet<&str> = docs
            .iter()
            .flat_map(|d| d.utterances.iter())
            .flat_map(|u| u.tokens.iter().map(String::as_str))
            .filter(|t| !RESERVED.contains(t))
            .collect();
        Vocab::from_tokens(set).expect("set has no duplicates")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Non-reserved tokens in id order.
    pub fn entries(&self) -> &[String] {
        &self.tokens[RESERVED.len()..]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.tokens {
            s.push_str(t);
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Vocab, VocabError> {
        let lines: Vec<&str> = text.lines().collect();
        for (i, expected) in RESERVED.iter().enumerate() {
            let found = lines.get(i).copied().unwrap_or("");
            if found != *expected {
                return Err(VocabError::Header {
                    line: i + 1,
                    expected,
                    found: found.to_string(),
                });
            }
        }
        Vocab::from_tokens(lines[RESERVED.len()..].iter().copied())
    }

    pub fn save(&self, path: &Path) -> Result<(), VocabError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Vocab, VocabError> {
        Vocab::from_text(&fs::read_to_string(path)?)
    }
}
