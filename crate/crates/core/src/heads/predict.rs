use serde::{Deserialize, Serialize};

use crate::datamodel::RelationLabel;
use crate::numerics::{softmax_rows, Tensor, TensorError};

use super::trr::trr_logit_mask;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub index: usize,
    pub confidence: f64,
}

/// Candidates for one mention under one label, most confident first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mention: u32,
    pub label: RelationLabel,
    pub ranked: Vec<Ranked>,
}

/// Confidence descending, then index ascending.
pub fn rank(confidences: &[f64]) -> Vec<Ranked> {
    let mut r: Vec<Ranked> = confidences
        .iter()
        .enumerate()
        .map(|(index, &confidence)| Ranked { index, confidence })
        .collect();
    r.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then(a.index.cmp(&b.index))
    });
    r
}

/// Softmax over each mention row of `u` (`m×q`), ranked.
pub fn predict_objects(
    u: &Tensor,
    mentions: &[u32],
    label: RelationLabel,
) -> Result<Vec<Prediction>, TensorError> {
    if u.rows() != mentions.len() {
        return Err(TensorError::ShapeMismatch {
            op: "predict_objects",
            left: u.shape().to_vec(),
            right: vec![mentions.len()],
        });
    }
    if u.cols() == 0 {
        return Ok(mentions
            .iter()
            .map(|&mention| Prediction {
                mention,
                label,
                ranked: Vec::new(),
            })
            .collect());
    }
    let p = softmax_rows(u, None)?;
    Ok(mentions
        .iter()
        .enumerate()
        .map(|(i, &mention)| Prediction {
            mention,
            label,
            ranked: rank(p.row(i)),
        })
        .collect())
}

/// Antecedent ranking for one mention; `None` is the null antecedent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AntecedentPrediction {
    pub mention: u32,
    pub label: RelationLabel,
    pub ranked: Vec<(Option<u32>, f64)>,
}

/// Softmax over `[mention columns | null]` of `m×(m+1)` logits with the
/// diagonal excluded; the mention itself never appears in its ranking.
pub fn predict_antecedents(
    logits: &Tensor,
    mentions: &[u32],
    label: RelationLabel,
) -> Result<Vec<AntecedentPrediction>, TensorError> {
    let m = mentions.len();
    if logits.shape() != [m, m + 1] {
        return Err(TensorError::ShapeMismatch {
            op: "predict_antecedents",
            left: logits.shape().to_vec(),
            right: vec![m, m + 1],
        });
    }
    let p = softmax_rows(logits, Some(&trr_logit_mask(m)))?;
    Ok((0..m)
        .map(|i| AntecedentPrediction {
            mention: mentions[i],
            label,
            ranked: rank(p.row(i))
                .into_iter()
                .filter(|r| r.index != i)
                .map(|r| ((r.index < m).then(|| mentions[r.index]), r.confidence))
                .collect(),
        })
        .collect())
}
