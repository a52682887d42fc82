//! Scaled dot-product attention built from graph primitives.

use super::graph::{Graph, Var};
use super::tensor::TensorError;

/// `softmax(q·kᵀ/√d)·v`, where `key_mask[j] == false` hides key `j` from
/// every query.
pub fn attention(
    g: &mut Graph,
    q: Var,
    k: Var,
    v: Var,
    key_mask: Option<&[bool]>,
) -> Result<Var, TensorError> {
    let (qs, ks, vs) = (g.shape(q).to_vec(), g.shape(k).to_vec(), g.shape(v).to_vec());
    if qs.len() != 2 || ks.len() != 2 || vs.len() != 2 || qs[1] != ks[1] {
        return Err(TensorError::ShapeMismatch {
            op: "attention(q, k)",
            left: qs,
            right: ks,
        });
    }
    if ks[0] != vs[0] {
        return Err(TensorError::ShapeMismatch {
            op: "attention(k, v)",
            left: ks,
            right: vs,
        });
    }
    if let Some(m) = key_mask {
        if m.len() != ks[0] {
            return Err(TensorError::ShapeMismatch {
                op: "attention(mask)",
                left: ks,
                right: vec![m.len()],
            });
        }
    }
    let scores = g.matmul_t(q, k)?;
    let scaled = g.scale(scores, 1.0 / (qs[1] as f64).sqrt());
    let full_mask: Option<Vec<bool>> =
        key_mask.map(|m| (0..qs[0]).flat_map(|_| m.iter().copied()).collect());
    let probs = g.softmax_rows(scaled, full_mask.as_deref())?;
    g.matmul(probs, v)
}

/// Splits the feature axis of `q`, `k`, `v` into `heads` equal slices, attends
/// per head and concatenates the results.
pub fn multi_head_attention(
    g: &mut Graph,
    q: Var,
    k: Var,
    v: Var,
    heads: usize,
    key_mask: Option<&[bool]>,
) -> Result<Var, TensorError> {
    let dq = g.shape(q)[1];
    let dv = g.shape(v)[1];
    if heads == 0 || dq % heads != 0 || dv % heads != 0 {
        return Err(TensorError::Invalid(format!(
            "width {dq}/{dv} not divisible into {heads} heads"
        )));
    }
    if heads == 1 {
        return attention(g, q, k, v, key_mask);
    }
    let (hq, hv) = (dq / heads, dv / heads);
    let mut outs = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = g.slice_cols(q, h * hq, (h + 1) * hq)?;
        let kh = g.slice_cols(k, h * hq, (h + 1) * hq)?;
        let vh = g.slice_cols(v, h * hv, (h + 1) * hv)?;
        outs.push(attention(g, qh, kh, vh, key_mask)?);
    }
    g.concat_cols(&outs)
}
