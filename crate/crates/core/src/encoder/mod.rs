//! Toy tokenizer and transformer text encoder.

mod model;
mod tokenize;
mod vocab;

pub use model::{sinusoidal_positions, Encoder, EncoderConfig, ENCODER_PREFIX, FFN_MULTIPLIER};
pub use tokenize::{tokenize, tokenize_window, SeqMention, Tokenized};
pub use vocab::{Vocab, VocabError, BOS, PAD, RESERVED, SPEAKER_A, SPEAKER_B, UNK};
