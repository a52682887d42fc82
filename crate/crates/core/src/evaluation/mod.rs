//! Recall@k with IoU matching, per-category and per-relation tables,
//! utterance-length ablation and confidence summaries.
//!
//! The counting unit is one (mention, relation, frame) query. A query is
//! evaluated only when some candidate of its frame overlaps a gold box; it
//! is a hit at `k` when any of the top `k` candidates does.

mod confidence;
mod evaluate;
mod recall;
mod report;

use thiserror::Error;

use crate::model::ModelError;
use crate::numerics::TensorError;

pub use confidence::{confidence_stats, ConfidenceGroup, ConfidenceStats, QUANTILES};
pub use evaluate::{
    collect_queries, confidence_lists, evaluate, evaluate_grounding, evaluate_mrr, report_rows,
    utterance_length_ablation, Category, EvalConfig, Grounder, Grounding, QueryRecord,
    INDIRECT_ROW,
};
pub use recall::{recall_at_k, recall_from_ranks, Query};
pub use report::{
    compare, delta_table, AblationBlock, DeltaRow, EvalReport, Mark, ReportRow,
    REPORT_SCHEMA_VERSION,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid evaluation config: {0}")]
    Config(String),
    #[error("incompatible report: {0}")]
    Schema(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
