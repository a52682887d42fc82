use rand::Rng;

use crate::datamodel::{PerLabel, RelationLabel};
use crate::numerics::{Graph, ParamStore, Tensor, TensorError, Var};

pub const TRR_PREFIX: &str = "trr.";
/// Learned no-antecedent logit, one column per label.
pub const TRR_NULL: &str = "trr.null";

pub fn trr_weight_name(label: RelationLabel) -> String {
    format!("trr.w_t1.{}", label.slug())
}

/// Per-label square expansion `W_T1[·,·,l]` over the text width, plus the
/// null-antecedent logits.
#[derive(Clone, Debug, PartialEq)]
pub struct TrrHead {
    pub d_text: usize,
}

impl TrrHead {
    pub fn new(d_text: usize) -> TrrHead {
        TrrHead { d_text }
    }

    /// Initializes all six slices regardless of the active preset.
    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        for l in RelationLabel::ALL {
            store.init_normal(&trr_weight_name(l), self.d_text, self.d_text, rng);
        }
        store.init_zeros(TRR_NULL, 1, RelationLabel::COUNT);
    }

    /// `T̂_l = T·W_T1[l]` for rows of `t`.
    pub fn expand(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        t: Var,
        label: RelationLabel,
    ) -> Result<Var, TensorError> {
        let w = g.param(store, &trr_weight_name(label))?;
        g.matmul(t, w)
    }

    /// `m×(m+1)` logits `[T̂_l T̂_lᵀ | null_l]` over mention rows `t`.
    pub fn logits(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        t: Var,
        labels: &[RelationLabel],
    ) -> Result<PerLabel<Var>, TensorError> {
        let m = g.shape(t)[0];
        let null = g.param(store, TRR_NULL)?;
        let mut out = PerLabel::new();
        for &l in labels {
            let e = self.expand(g, store, t, l)?;
            let s = g.matmul_t(e, e)?;
            let n = g.slice_cols(null, l.index(), l.index() + 1)?;
            let n = g.repeat_rows(n, m)?;
            out.insert(l, g.concat_cols(&[s, n])?);
        }
        Ok(out)
    }
}

/// Softmax mask for `m×(m+1)` TRR logits: everything except the diagonal.
pub fn trr_logit_mask(m: usize) -> Vec<bool> {
    let mut mask = vec![true; m * (m + 1)];
    for i in 0..m {
        mask[i * (m + 1) + i] = false;
    }
    mask
}

/// `T̂_l = T′·W_l` for every label present in `weights`.
pub fn trr_expand(t: &Tensor, weights: &PerLabel<Tensor>) -> Result<PerLabel<Tensor>, TensorError> {
    let mut out = PerLabel::new();
    for (l, w) in weights.iter() {
        out.insert(l, t.matmul(w)?);
    }
    Ok(out)
}

/// Gram matrices `S_l = T̂_l·T̂_lᵀ`.
pub fn trr_similarity(expanded: &PerLabel<Tensor>) -> PerLabel<Tensor> {
    let mut out = PerLabel::new();
    for (l, e) in expanded.iter() {
        out.insert(l, e.matmul_t(e).expect("matrix"));
    }
    out
}
