//! Building blocks for generating balanced multilingual image-text
//! pretraining corpora from an English LLaVA-style dataset.
//!
//! The pipeline runs in three stages:
//!
//! 1. [`sampling`] picks a small, metric-diverse calibration set using the
//!    length and readability statistics from [`textmetrics`].
//! 2. [`prompt_eval`] renders candidate translation preambles, scores each
//!    one by per-order BLEU against reference translations, and picks the
//!    winner.
//! 3. [`pipeline`] translates every assistant response into each target
//!    language through a [`translation::TranslationProvider`], gating each
//!    result with back-translation, checkpointing progress so an interrupted
//!    run resumes to byte-identical output.

pub mod config;
pub mod corpus;
pub mod hashing;
pub mod language;
pub mod pipeline;
pub mod prompt_eval;
pub mod sampling;
pub mod textmetrics;
pub mod translation;

pub use corpus::{AssistantPayload, Sample, Speaker, Turn};
pub use language::LanguageCode;
