use crate::datamodel::{Mention, Speaker, Utterance, Window};

use super::vocab::{Vocab, BOS, SPEAKER_A, SPEAKER_B};

/// A mention re-indexed into the concatenated id sequence; `start` is its
/// first subword.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeqMention {
    pub id: u32,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tokenized {
    pub ids: Vec<u32>,
    /// Surviving mentions in input order.
    pub mentions: Vec<SeqMention>,
}

impl Tokenized {
    pub fn mention_ids(&self) -> Vec<u32> {
        self.mentions.iter().map(|m| m.id).collect()
    }

    pub fn first_subwords(&self) -> Vec<usize> {
        self.mentions.iter().map(|m| m.start).collect()
    }
}

fn speaker_tag(s: Speaker) -> u32 {
    match s {
        Speaker::A => SPEAKER_A,
        Speaker::B => SPEAKER_B,
    }
}

/// Lays out `[BOS]` then, per utterance, its speaker tag followed by its
/// tokens. The sequence is cut at `max_len`; mentions crossing the cut are
/// dropped.
pub fn tokenize(
    utterances: &[Utterance],
    mentions: &[Mention],
    vocab: &Vocab,
    max_len: usize,
) -> Tokenized {
    let mut ids = vec![BOS];
    let mut offsets = std::collections::HashMap::new();
    for u in utterances {
        ids.push(speaker_tag(u.speaker()));
        offsets.insert(u.idx, ids.len());
        ids.extend(u.tokens.iter().map(|t| vocab.id(t)));
    }
    ids.truncate(max_len.max(1));
    let mentions = mentions
        .iter()
        .filter_map(|m| {
            let base = *offsets.get(&m.utt)?;
            let (start, end) = (base + m.start(), base + m.end());
            (end <= ids.len()).then_some(SeqMention {
                id: m.id,
                start,
                end,
            })
        })
        .collect();
    Tokenized { ids, mentions }
}

pub fn tokenize_window(window: &Window, vocab: &Vocab, max_len: usize) -> Tokenized {
    tokenize(&window.utterances, &window.mentions, vocab, max_len)
}
