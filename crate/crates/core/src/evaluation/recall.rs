use crate::datamodel::{iou, BoundingBox};

/// One grounding query: predicted boxes in rank order and the gold boxes of
/// a (mention, relation, frame) triple.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub ranked: Vec<BoundingBox>,
    pub gold: Vec<BoundingBox>,
}

impl Query {
    /// Zero-based rank of the first prediction matching any gold box.
    pub fn first_hit(&self, iou_threshold: f64) -> Option<usize> {
        self.ranked
            .iter()
            .position(|p| self.gold.iter().any(|g| iou(p, g) >= iou_threshold))
    }

    pub fn is_hit(&self, k: usize, iou_threshold: f64) -> bool {
        self.first_hit(iou_threshold).is_some_and(|r| r < k)
    }
}

/// Fraction of queries with a gold match among the top `k` predictions;
/// `None` for an empty query set.
pub fn recall_at_k(queries: &[Query], k: usize, iou_threshold: f64) -> Option<f64> {
    if queries.is_empty() {
        return None;
    }
    let hits = queries.iter().filter(|q| q.is_hit(k, iou_threshold)).count();
    Some(hits as f64 / queries.len() as f64)
}

/// Recall from precomputed first-hit ranks.
pub fn recall_from_ranks(ranks: &[Option<usize>], k: usize) -> Option<f64> {
    if ranks.is_empty() {
        return None;
    }
    let hits = ranks.iter().filter(|r| r.is_some_and(|r| r < k)).count();
    Some(hits as f64 / ranks.len() as f64)
}
