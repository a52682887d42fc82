//! Per-relation similarity heads, losses and prediction ranking.
//!
//! Training gathers each mention's first-subword row before expansion. Row
//! gathering commutes with the row-wise expansion, so this equals building
//! the full token-level stack and then pooling it with
//! [`SimilarityStack::pool_first_subword`].

mod loss;
mod mrr;
mod predict;
mod trr;

pub use loss::{loss_mrr, loss_trr, mrr_targets, trr_targets};
pub use mrr::{
    mrr_expand, mrr_object_weight_name, mrr_similarity, mrr_text_weight_name, MrrHead, MRR_PREFIX,
};
pub use predict::{predict_antecedents, predict_objects, rank, AntecedentPrediction, Prediction, Ranked};
pub use trr::{trr_expand, trr_logit_mask, trr_similarity, trr_weight_name, TrrHead, TRR_NULL, TRR_PREFIX};

use crate::datamodel::PerLabel;
use crate::numerics::{Tensor, TensorError};

/// Per-label similarity matrices with a mask of valid rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityStack {
    pub matrices: PerLabel<Tensor>,
    pub row_mask: Vec<bool>,
}

impl SimilarityStack {
    pub fn new(matrices: PerLabel<Tensor>) -> SimilarityStack {
        let rows = matrices.iter().next().map_or(0, |(_, t)| t.rows());
        SimilarityStack {
            matrices,
            row_mask: vec![true; rows],
        }
    }

    /// Keeps the rows at `first_subwords`, in that order; with `square` the
    /// same selection is applied to columns (mention×mention stacks).
    pub fn pool_first_subword(
        &self,
        first_subwords: &[usize],
        square: bool,
    ) -> Result<SimilarityStack, TensorError> {
        let mut out = PerLabel::new();
        for (l, t) in self.matrices.iter() {
            if let Some(&bad) = first_subwords.iter().find(|&&i| i >= t.rows()) {
                return Err(TensorError::IndexOutOfRange {
                    index: bad,
                    extent: t.rows(),
                });
            }
            let cols: Vec<usize> = if square {
                first_subwords.to_vec()
            } else {
                (0..t.cols()).collect()
            };
            let rows: Vec<Vec<f64>> = first_subwords
                .iter()
                .map(|&i| cols.iter().map(|&j| t.at(i, j)).collect())
                .collect();
            let pooled = if rows.is_empty() {
                Tensor::zeros(&[0, cols.len()])
            } else {
                Tensor::from_rows(&rows)
            };
            out.insert(l, pooled);
        }
        Ok(SimilarityStack {
            matrices: out,
            row_mask: vec![true; first_subwords.len()],
        })
    }
}
