//! Text statistics: tokenization, n-gram counts, BLEU, and readability.
//!
//! Everything here is pure and reentrant.

mod bleu;
mod ngram;
mod readability;
mod tokenize;

use thiserror::Error;

pub use bleu::{bleu, bleu_per_order, bleu_with, modified_precision, BleuConfig, BleuScore, Precision, Smoothing};
pub use ngram::{ngram_counts, NgramProfile};
pub use readability::{count_syllables, length_analysis, readability, split_sentences, LengthStats, ReadabilityReport};
pub use tokenize::{tokenize, tokenize_with, CaseMode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("n-gram order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("at least one reference is required")]
    NoReferences,
    #[error("text contains no words")]
    EmptyText,
}
