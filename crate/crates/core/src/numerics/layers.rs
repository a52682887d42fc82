//! Parameterized building blocks. Each layer only stores parameter names
//! and widths; values live in a [`ParamStore`].

use rand::Rng;

use super::attention::multi_head_attention;
use super::graph::{Graph, Var};
use super::params::ParamStore;
use super::tensor::TensorError;

#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub weight: String,
    pub bias: Option<String>,
    pub d_in: usize,
    pub d_out: usize,
}

impl Linear {
    pub fn new(prefix: &str, d_in: usize, d_out: usize, bias: bool) -> Self {
        Self {
            weight: format!("{prefix}.w"),
            bias: bias.then(|| format!("{prefix}.b")),
            d_in,
            d_out,
        }
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        store.init_normal(&self.weight, self.d_in, self.d_out, rng);
        if let Some(b) = &self.bias {
            store.init_zeros(b, 1, self.d_out);
        }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Result<Var, TensorError> {
        let w = g.param(store, &self.weight)?;
        let y = g.matmul(x, w)?;
        match &self.bias {
            Some(b) => {
                let b = g.param(store, b)?;
                g.add_row(y, b)
            }
            None => Ok(y),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerNorm {
    pub gain: String,
    pub bias: String,
    pub width: usize,
}

impl LayerNorm {
    pub fn new(prefix: &str, width: usize) -> Self {
        Self {
            gain: format!("{prefix}.gain"),
            bias: format!("{prefix}.bias"),
            width,
        }
    }

    /// Unit gain, zero bias.
    pub fn init(&self, store: &mut ParamStore) {
        store.init_ones(&self.gain, 1, self.width);
        store.init_zeros(&self.bias, 1, self.width);
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Result<Var, TensorError> {
        let gain = g.param(store, &self.gain)?;
        let bias = g.param(store, &self.bias)?;
        g.layer_norm(x, gain, bias)
    }
}

/// Multi-head attention with learned query/key/value/output projections.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiHeadAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub heads: usize,
}

impl MultiHeadAttention {
    pub fn new(prefix: &str, width: usize, heads: usize) -> Self {
        Self {
            query: Linear::new(&format!("{prefix}.q"), width, width, true),
            key: Linear::new(&format!("{prefix}.k"), width, width, true),
            value: Linear::new(&format!("{prefix}.v"), width, width, true),
            output: Linear::new(&format!("{prefix}.o"), width, width, true),
            heads,
        }
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        for l in [&self.query, &self.key, &self.value, &self.output] {
            l.init(store, rng);
        }
    }

    /// Queries come from `x`, keys and values from `context`.
    pub fn forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        x: Var,
        context: Var,
        key_mask: Option<&[bool]>,
    ) -> Result<Var, TensorError> {
        let q = self.query.forward(g, store, x)?;
        let k = self.key.forward(g, store, context)?;
        let v = self.value.forward(g, store, context)?;
        let att = multi_head_attention(g, q, k, v, self.heads, key_mask)?;
        self.output.forward(g, store, att)
    }
}

/// Two-layer GELU feed-forward network.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedForward {
    pub up: Linear,
    pub down: Linear,
}

impl FeedForward {
    pub fn new(prefix: &str, width: usize, hidden: usize) -> Self {
        Self {
            up: Linear::new(&format!("{prefix}.up"), width, hidden, true),
            down: Linear::new(&format!("{prefix}.down"), hidden, width, true),
        }
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        self.up.init(store, rng);
        self.down.init(store, rng);
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Result<Var, TensorError> {
        let h = self.up.forward(g, store, x)?;
        let h = g.gelu(h);
        self.down.forward(g, store, h)
    }
}
