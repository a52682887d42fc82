use crate::datamodel::{MmGroundTruth, PerLabel, RelationLabel, TextGroundTruth};
use crate::numerics::{Graph, Tensor, TensorError, Var};

use super::trr::trr_logit_mask;

/// Row targets for `m×(m+1)` TRR logits: uniform over the positive columns,
/// or all mass on the trailing null column when a row has none.
pub fn trr_targets(gt: &Tensor) -> Tensor {
    let m = gt.rows();
    let mut t = Tensor::zeros(&[m, m + 1]);
    for i in 0..m {
        let pos: Vec<usize> = (0..m).filter(|&j| gt.at(i, j) > 0.0).collect();
        if pos.is_empty() {
            t.set(i, m, 1.0);
        } else {
            let w = 1.0 / pos.len() as f64;
            for j in pos {
                t.set(i, j, w);
            }
        }
    }
    t
}

/// Row-normalized positives; rows with no positive stay zero.
pub fn mrr_targets(gt: &Tensor) -> Tensor {
    let mut t = gt.clone();
    let c = t.cols();
    for i in 0..t.rows() {
        let row = &mut t.data_mut()[i * c..(i + 1) * c];
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        }
    }
    t
}

fn zero(g: &mut Graph) -> Var {
    g.constant(Tensor::scalar(0.0))
}

/// Sum over `active` labels of the mean row cross entropy of the
/// diagonal-masked softmax against [`trr_targets`].
pub fn loss_trr(
    g: &mut Graph,
    logits: &PerLabel<Var>,
    gt: &TextGroundTruth,
    active: &[RelationLabel],
) -> Result<Var, TensorError> {
    let mut terms = Vec::new();
    for &l in active {
        let (Some(&s), Some(truth)) = (logits.get(l), gt.matrices.get(l)) else {
            return Err(TensorError::Invalid(format!("label {l} missing from logits or targets")));
        };
        let m = truth.rows();
        if m == 0 {
            continue;
        }
        let mask = trr_logit_mask(m);
        let p = g.softmax_rows(s, Some(&mask))?;
        terms.push(g.cross_entropy_rows(p, trr_targets(truth), &vec![true; m])?);
    }
    if terms.is_empty() {
        return Ok(zero(g));
    }
    g.add_all(&terms)
}

/// Sum over `active` labels of the mean cross entropy over rows that have at
/// least one positive candidate. Zero with zero gradient when every row is
/// masked.
pub fn loss_mrr(
    g: &mut Graph,
    logits: &PerLabel<Var>,
    gt: &MmGroundTruth,
    active: &[RelationLabel],
) -> Result<Var, TensorError> {
    let mut terms = Vec::new();
    for &l in active {
        let (Some(&u), Some(truth), Some(rows)) =
            (logits.get(l), gt.matrices.get(l), gt.row_mask.get(l))
        else {
            return Err(TensorError::Invalid(format!("label {l} missing from logits or targets")));
        };
        if truth.rows() == 0 || truth.cols() == 0 || !rows.iter().any(|&r| r) {
            continue;
        }
        let p = g.softmax_rows(u, None)?;
        terms.push(g.cross_entropy_rows(p, mrr_targets(truth), rows)?);
    }
    if terms.is_empty() {
        return Ok(zero(g));
    }
    g.add_all(&terms)
}
