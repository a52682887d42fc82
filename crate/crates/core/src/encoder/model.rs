use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::layers::{FeedForward, LayerNorm, MultiHeadAttention};
use crate::numerics::{Graph, ParamStore, Tensor, TensorError, Var};

use super::vocab::PAD;

/// Feed-forward width as a multiple of the model width.
pub const FFN_MULTIPLIER: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub d_model: usize,
    pub layers: usize,
    pub heads: usize,
    /// Maximum sequence length `p`.
    pub max_len: usize,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.d_model == 0 || self.max_len == 0 {
            return Err("d_model and max_len must be positive".into());
        }
        if self.heads == 0 || self.d_model % self.heads != 0 {
            return Err(format!(
                "d_model {} is not divisible by {} heads",
                self.d_model, self.heads
            ));
        }
        Ok(())
    }
}

/// `max_len × d` sinusoidal position table.
pub fn sinusoidal_positions(max_len: usize, d: usize) -> Tensor {
    let mut t = Tensor::zeros(&[max_len, d]);
    for pos in 0..max_len {
        for i in 0..d {
            let pair = (i / 2) as f64;
            let angle = pos as f64 / 10000f64.powf(2.0 * pair / d as f64);
            t.set(pos, i, if i % 2 == 0 { angle.sin() } else { angle.cos() });
        }
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
struct EncoderBlock {
    ln_attn: LayerNorm,
    attn: MultiHeadAttention,
    ln_ffn: LayerNorm,
    ffn: FeedForward,
}

/// Token embedding plus sinusoidal positions followed by pre-norm
/// self-attention blocks. A final layer norm is applied when there is at
/// least one block.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    pub config: EncoderConfig,
    pub vocab_size: usize,
    embed: String,
    blocks: Vec<EncoderBlock>,
    final_ln: Option<LayerNorm>,
    positions: Tensor,
}

pub const ENCODER_PREFIX: &str = "encoder.";

impl Encoder {
    pub fn new(config: EncoderConfig, vocab_size: usize) -> Encoder {
        let d = config.d_model;
        let blocks = (0..config.layers)
            .map(|i| EncoderBlock {
                ln_attn: LayerNorm::new(&format!("encoder.block{i}.ln_attn"), d),
                attn: MultiHeadAttention::new(&format!("encoder.block{i}.attn"), d, config.heads),
                ln_ffn: LayerNorm::new(&format!("encoder.block{i}.ln_ffn"), d),
                ffn: FeedForward::new(&format!("encoder.block{i}.ffn"), d, FFN_MULTIPLIER * d),
            })
            .collect();
        let final_ln = (config.layers > 0).then(|| LayerNorm::new("encoder.ln_final", d));
        let positions = sinusoidal_positions(config.max_len, d);
        Encoder {
            config,
            vocab_size,
            embed: "encoder.embed".into(),
            blocks,
            final_ln,
            positions,
        }
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        store.init_normal(&self.embed, self.vocab_size, self.config.d_model, rng);
        for b in &self.blocks {
            b.ln_attn.init(store);
            b.attn.init(store, rng);
            b.ln_ffn.init(store);
            b.ffn.init(store, rng);
        }
        if let Some(ln) = &self.final_ln {
            ln.init(store);
        }
    }

    /// Encodes `ids` (at most `max_len`) into `len(ids) × d`. `mask[i] ==
    /// false` hides token `i` from attention and zeroes its output row.
    pub fn forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        ids: &[u32],
        mask: Option<&[bool]>,
    ) -> Result<Var, TensorError> {
        let n = ids.len();
        if n > self.config.max_len {
            return Err(TensorError::Invalid(format!(
                "sequence of {n} tokens exceeds max_len {}",
                self.config.max_len
            )));
        }
        if let Some(&bad) = ids.iter().find(|&&i| i as usize >= self.vocab_size) {
            return Err(TensorError::IndexOutOfRange {
                index: bad as usize,
                extent: self.vocab_size,
            });
        }
        let d = self.config.d_model;
        let table = g.param(store, &self.embed)?;
        let idx: Vec<usize> = ids.iter().map(|&i| i as usize).collect();
        let tok = g.gather_rows(table, &idx)?;
        let pos = Tensor::matrix(n, d, self.positions.data()[..n * d].to_vec())?;
        let pos = g.constant(pos);
        let mut x = g.add(tok, pos)?;
        for b in &self.blocks {
            let h = b.ln_attn.forward(g, store, x)?;
            let a = b.attn.forward(g, store, h, h, mask)?;
            x = g.add(x, a)?;
            let h = b.ln_ffn.forward(g, store, x)?;
            let f = b.ffn.forward(g, store, h)?;
            x = g.add(x, f)?;
        }
        if let Some(ln) = &self.final_ln {
            x = ln.forward(g, store, x)?;
        }
        match mask {
            Some(m) => g.mask_rows(x, m),
            None => Ok(x),
        }
    }

    /// Fixed-shape form: pads to `max_len` and returns `max_len × d` with
    /// zero rows wherever `mask` is false or the input ended.
    pub fn encode(&self, store: &ParamStore, ids: &[u32], mask: &[bool]) -> Result<Tensor, TensorError> {
        if ids.len() != mask.len() {
            return Err(TensorError::ShapeMismatch {
                op: "encode(ids, mask)",
                left: vec![ids.len()],
                right: vec![mask.len()],
            });
        }
        let p = self.config.max_len;
        let mut padded = ids.to_vec();
        padded.resize(p.max(ids.len()), PAD);
        let mut full_mask = mask.to_vec();
        full_mask.resize(padded.len(), false);
        let mut g = Graph::new();
        let out = self.forward(&mut g, store, &padded, Some(&full_mask))?;
        Ok(g.value(out).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(layers: usize) -> (Encoder, ParamStore) {
        let cfg = EncoderConfig {
            d_model: 8,
            layers,
            heads: 2,
            max_len: 10,
        };
        let enc = Encoder::new(cfg, 12);
        let mut store = ParamStore::new();
        enc.init(&mut store, &mut ChaCha8Rng::seed_from_u64(3));
        (enc, store)
    }

    #[test]
    fn zero_layers_is_embedding_plus_positions() {
        let (enc, store) = setup(0);
        let ids = [2u32, 5, 7];
        let out = enc.encode(&store, &ids, &[true; 3]).unwrap();
        let emb = store.get("encoder.embed").unwrap();
        for (r, &id) in ids.iter().enumerate() {
            for c in 0..8 {
                assert_eq!(out.at(r, c), emb.at(id as usize, c) + enc.positions.at(r, c));
            }
        }
        assert!(out.row(5).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn padded_and_unpadded_agree() {
        let (enc, store) = setup(2);
        let ids = [2u32, 3, 8, 9];
        let mut g = Graph::new();
        let v = enc.forward(&mut g, &store, &ids, None).unwrap();
        let short = g.value(v).clone();
        let long = enc.encode(&store, &ids, &[true; 4]).unwrap();
        for r in 0..4 {
            for c in 0..8 {
                assert!((short.at(r, c) - long.at(r, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_overlong_input() {
        let (enc, store) = setup(1);
        assert!(enc.encode(&store, &[2; 11], &[true; 11]).is_err());
    }
}
