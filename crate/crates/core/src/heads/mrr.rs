use rand::Rng;

use crate::datamodel::{PerLabel, RelationLabel};
use crate::numerics::{Graph, ParamStore, Tensor, TensorError, Var};

pub const MRR_PREFIX: &str = "mrr.";

pub fn mrr_text_weight_name(label: RelationLabel) -> String {
    format!("mrr.w_t2.{}", label.slug())
}

pub fn mrr_object_weight_name(label: RelationLabel) -> String {
    format!("mrr.w_o.{}", label.slug())
}

/// Per-label square expansions `W_T2[·,·,l]` and `W_O[·,·,l]` over the
/// shared width.
#[derive(Clone, Debug, PartialEq)]
pub struct MrrHead {
    pub d_model: usize,
}

impl MrrHead {
    pub fn new(d_model: usize) -> MrrHead {
        MrrHead { d_model }
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        for l in RelationLabel::ALL {
            store.init_normal(&mrr_text_weight_name(l), self.d_model, self.d_model, rng);
            store.init_normal(&mrr_object_weight_name(l), self.d_model, self.d_model, rng);
        }
    }

    /// `m×q` logits `U_l = (T·W_T2[l])·(X·W_O[l])ᵀ` for mention rows `t` and
    /// fused objects `x`.
    pub fn logits(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        t: Var,
        x: Var,
        labels: &[RelationLabel],
    ) -> Result<PerLabel<Var>, TensorError> {
        let mut out = PerLabel::new();
        for &l in labels {
            let wt = g.param(store, &mrr_text_weight_name(l))?;
            let wo = g.param(store, &mrr_object_weight_name(l))?;
            let te = g.matmul(t, wt)?;
            let xe = g.matmul(x, wo)?;
            out.insert(l, g.matmul_t(te, xe)?);
        }
        Ok(out)
    }
}

/// Per-label text and object expansions.
pub fn mrr_expand(
    t: &Tensor,
    x: &Tensor,
    w_text: &PerLabel<Tensor>,
    w_object: &PerLabel<Tensor>,
) -> Result<(PerLabel<Tensor>, PerLabel<Tensor>), TensorError> {
    let mut te = PerLabel::new();
    let mut xe = PerLabel::new();
    for (l, w) in w_text.iter() {
        let wo = w_object
            .get(l)
            .ok_or_else(|| TensorError::Invalid(format!("no object weight for {l}")))?;
        te.insert(l, t.matmul(w)?);
        xe.insert(l, x.matmul(wo)?);
    }
    Ok((te, xe))
}

/// `U_l[i, j] = ⟨T̂_l[i], X̂_l[j]⟩`, mention rows by candidate columns.
pub fn mrr_similarity(
    t_hat: &PerLabel<Tensor>,
    x_hat: &PerLabel<Tensor>,
) -> Result<PerLabel<Tensor>, TensorError> {
    let mut out = PerLabel::new();
    for (l, t) in t_hat.iter() {
        let x = x_hat
            .get(l)
            .ok_or_else(|| TensorError::Invalid(format!("no object expansion for {l}")))?;
        out.insert(l, t.matmul_t(x)?);
    }
    Ok(out)
}
