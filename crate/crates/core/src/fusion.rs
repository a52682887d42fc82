//! Object-text fusion decoder.
//!
//! Text and object inputs are first projected to a shared width. Each decoder
//! block then applies object self-attention, cross-attention from objects to
//! text, and a feed-forward layer, all pre-norm with residuals. Object slots
//! carry no positional encoding, so the decoder is permutation equivariant
//! over objects.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::FFN_MULTIPLIER;
use crate::numerics::layers::{FeedForward, LayerNorm, Linear, MultiHeadAttention};
use crate::numerics::{Graph, ParamStore, TensorError, Var};

pub const DEFAULT_BLOCKS: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Shared width `d_S`.
    pub d_model: usize,
    /// Text input width `d_T`.
    pub d_text: usize,
    /// Object feature width `d_O`.
    pub d_object: usize,
    pub blocks: usize,
    pub heads: usize,
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.d_model == 0 || self.d_text == 0 || self.d_object == 0 {
            return Err("fusion widths must be positive".into());
        }
        if self.heads == 0 || self.d_model % self.heads != 0 {
            return Err(format!(
                "fusion width {} is not divisible by {} heads",
                self.d_model, self.heads
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
struct DecoderBlock {
    ln_self: LayerNorm,
    self_attn: MultiHeadAttention,
    ln_cross: LayerNorm,
    cross_attn: MultiHeadAttention,
    ln_ffn: LayerNorm,
    ffn: FeedForward,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fusion {
    pub config: FusionConfig,
    pub text_proj: Linear,
    pub object_proj: Linear,
    blocks: Vec<DecoderBlock>,
}

impl Fusion {
    pub fn new(config: FusionConfig) -> Fusion {
        let d = config.d_model;
        let blocks = (0..config.blocks)
            .map(|i| {
                let p = format!("fusion.block{i}");
                DecoderBlock {
                    ln_self: LayerNorm::new(&format!("{p}.ln_self"), d),
                    self_attn: MultiHeadAttention::new(&format!("{p}.self_attn"), d, config.heads),
                    ln_cross: LayerNorm::new(&format!("{p}.ln_cross"), d),
                    cross_attn: MultiHeadAttention::new(&format!("{p}.cross_attn"), d, config.heads),
                    ln_ffn: LayerNorm::new(&format!("{p}.ln_ffn"), d),
                    ffn: FeedForward::new(&format!("{p}.ffn"), d, FFN_MULTIPLIER * d),
                }
            })
            .collect();
        Fusion {
            text_proj: Linear::new("fusion.text_proj", config.d_text, d, true),
            object_proj: Linear::new("fusion.object_proj", config.d_object, d, true),
            config,
            blocks,
        }
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        self.text_proj.init(store, rng);
        self.object_proj.init(store, rng);
        for b in &self.blocks {
            b.ln_self.init(store);
            b.self_attn.init(store, rng);
            b.ln_cross.init(store);
            b.cross_attn.init(store, rng);
            b.ln_ffn.init(store);
            b.ffn.init(store, rng);
        }
    }

    /// Maps `T′` (`p×d_T`) and `X` (`q×d_O`) to the shared width.
    pub fn project_inputs(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        text: Var,
        objects: Var,
    ) -> Result<(Var, Var), TensorError> {
        let t = self.text_proj.forward(g, store, text)?;
        let x = self.object_proj.forward(g, store, objects)?;
        Ok((t, x))
    }

    /// Runs the decoder blocks over projected objects, attending to the
    /// projected text where `text_mask` is true.
    pub fn decode(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        objects: Var,
        text: Var,
        text_mask: Option<&[bool]>,
    ) -> Result<Var, TensorError> {
        let mut x = objects;
        for b in &self.blocks {
            let h = b.ln_self.forward(g, store, x)?;
            let a = b.self_attn.forward(g, store, h, h, None)?;
            x = g.add(x, a)?;
            let h = b.ln_cross.forward(g, store, x)?;
            let c = b.cross_attn.forward(g, store, h, text, text_mask)?;
            x = g.add(x, c)?;
            let h = b.ln_ffn.forward(g, store, x)?;
            let f = b.ffn.forward(g, store, h)?;
            x = g.add(x, f)?;
        }
        Ok(x)
    }
}
