use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;

use super::MetricError;

/// Multiset of the n-grams of one token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NgramProfile {
    pub order: usize,
    pub counts: HashMap<Vec<String>, usize>,
    /// Number of windows, `max(0, len - n + 1)`.
    pub total: usize,
}

impl NgramProfile {
    pub fn count(&self, gram: &[&str]) -> usize {
        let key: Vec<String> = gram.iter().map(|s| s.to_string()).collect();
        self.counts.get(&key).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }
}

pub fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> Result<NgramProfile, MetricError> {
    if n == 0 {
        return Err(MetricError::InvalidOrder(n));
    }
    let strs: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    let mut counts = HashMap::new();
    for (gram, c) in window_counts(&strs, n) {
        counts.insert(gram.iter().map(|t| t.to_string()).collect(), c);
    }
    Ok(NgramProfile { order: n, counts, total: tokens.len().saturating_sub(n - 1) })
}

/// Sliding-window counts keyed by borrowed slices. `n` must be at least 1.
pub(crate) fn window_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}
