//! Gold target matrices at mention level.
//!
//! Rows follow the caller's mention order (normally the mentions that survive
//! tokenization). A mention-level matrix is the token-level matrix restricted
//! to first-subword rows and columns; [`scatter_rows`] recovers the latter.

use super::corpus::Mention;
use super::geometry::iou;
use super::instances::{MmInstance, TextInstance};
use super::label::{PerLabel, RelationLabel};
use crate::numerics::Tensor;

/// IoU at or above which a candidate counts as matching a gold box.
pub const IOU_THRESHOLD: f64 = 0.5;

/// Per-label `m×m` antecedent targets; `(i, j) = 1` iff mention `i` stands in
/// the relation to mention `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TextGroundTruth {
    pub matrices: PerLabel<Tensor>,
}

/// Per-label `m×q` candidate targets plus a row mask of mentions having at
/// least one positive candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct MmGroundTruth {
    pub matrices: PerLabel<Tensor>,
    pub row_mask: PerLabel<Vec<bool>>,
}

fn row_of(order: &[u32], id: u32) -> Option<usize> {
    order.iter().position(|&m| m == id)
}

pub fn text_ground_truth(
    inst: &TextInstance,
    order: &[u32],
    labels: &[RelationLabel],
) -> TextGroundTruth {
    let m = order.len();
    let mut matrices = PerLabel::new();
    for &l in labels {
        let mut t = Tensor::zeros(&[m, m]);
        for r in inst.text_relations.iter().filter(|r| r.label == l) {
            if let (Some(i), Some(j)) = (row_of(order, r.src), row_of(order, r.tgt)) {
                if i != j {
                    t.set(i, j, 1.0);
                }
            }
        }
        matrices.insert(l, t);
    }
    TextGroundTruth { matrices }
}

/// Candidate `j` is positive for a gold relation iff its box has IoU of at
/// least [`IOU_THRESHOLD`] with one of the relation's gold boxes.
pub fn mm_ground_truth(inst: &MmInstance, order: &[u32], labels: &[RelationLabel]) -> MmGroundTruth {
    let m = order.len();
    let q = inst.candidates.len();
    let mut matrices = PerLabel::new();
    let mut row_mask = PerLabel::new();
    for &l in labels {
        let mut t = Tensor::zeros(&[m, q]);
        for r in inst.visual_relations.iter().filter(|r| r.label == l) {
            let Some(i) = row_of(order, r.src) else {
                continue;
            };
            for (j, c) in inst.candidates.iter().enumerate() {
                if r.boxes.iter().any(|b| iou(b, &c.bbox) >= IOU_THRESHOLD) {
                    t.set(i, j, 1.0);
                }
            }
        }
        let mask = (0..m).map(|i| t.row(i).iter().any(|&v| v > 0.0)).collect();
        matrices.insert(l, t);
        row_mask.insert(l, mask);
    }
    MmGroundTruth { matrices, row_mask }
}

/// Expands a mention-level matrix to `p` token rows; rows that are not a
/// mention's first subword are zero and flagged `false`.
pub fn scatter_rows(m: &Tensor, first_subwords: &[usize], p: usize) -> (Tensor, Vec<bool>) {
    let mut out = Tensor::zeros(&[p, m.cols()]);
    let mut mask = vec![false; p];
    for (i, &row) in first_subwords.iter().enumerate() {
        mask[row] = true;
        for (j, &v) in m.row(i).iter().enumerate() {
            out.set(row, j, v);
        }
    }
    (out, mask)
}

/// Mention order used when no tokenization has been applied.
pub fn window_order(mentions: &[Mention]) -> Vec<u32> {
    mentions.iter().map(|m| m.id).collect()
}
