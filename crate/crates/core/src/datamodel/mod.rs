//! Corpus schema, relation taxonomy, windowing and gold targets.

pub mod corpus;
pub mod features;
pub mod geometry;
pub mod ground_truth;
pub mod instances;
pub mod label;

pub use corpus::{
    assign_feature_refs, load_corpus, save_corpus, sidecar_path, CandidatesRef, CorpusError,
    DialogueDocument, Frame, Mention, PartOfSpeech, Speaker, TextRelation, Utterance,
    VisualRelation, SCHEMA_VERSION,
};
pub use features::ObjectCandidate;
pub use geometry::{iou, BoundingBox, DegenerateBox};
pub use ground_truth::{
    mm_ground_truth, text_ground_truth, MmGroundTruth, TextGroundTruth, IOU_THRESHOLD,
};
pub use instances::{
    build_mm_instances, build_text_instances, MmInstance, TextInstance, Window, WindowMode,
    DEFAULT_WINDOW,
};
pub use label::{LabelPreset, PerLabel, RelationLabel};
