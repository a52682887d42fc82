//! Deterministic synthetic visually grounded dialogues.
//!
//! Two participants alternate: even utterances belong to the master, odd ones
//! to the robot. Each scene holds a few objects plus both participants.
//! Pronouns and omitted arguments only ever refer to the most recently
//! mentioned object, and only while a noun naming it is within the last
//! [`RESOLUTION_WINDOW`] utterances, so every such reference can be resolved
//! from the text.

mod audit;
mod generate;
pub mod lexicon;

pub use audit::{chain_length, resolvability_audit, AuditError, AuditFailure, AuditReport};
pub use generate::{
    generate, prototypes, GenerationStats, ObjectPrototype, SynthConfig, SynthCorpus, SynthError,
    IMAGE_HEIGHT, IMAGE_WIDTH, MASTER_SLOT, MAX_SCENE_IOU, RESOLUTION_WINDOW, ROBOT_SLOT,
};
