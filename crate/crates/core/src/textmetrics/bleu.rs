//! Sentence-level BLEU: clipped n-gram precision, brevity penalty, and the
//! uniformly weighted geometric mean.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::ngram::window_counts;
use super::MetricError;

/// Exact clipped-count precision. A zero denominator (candidate shorter
/// than the order) is the undefined sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precision {
    pub numerator: u64,
    pub denominator: u64,
}

impl Precision {
    pub fn is_undefined(&self) -> bool {
        self.denominator == 0
    }

    pub fn value(&self) -> Option<f64> {
        (!self.is_undefined()).then(|| self.numerator as f64 / self.denominator as f64)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothing {
    #[default]
    None,
    /// Adds one to numerator and denominator for orders 2 and up.
    AddOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_n: usize,
    pub smoothing: Smoothing,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig { max_n: 4, smoothing: Smoothing::None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub precisions: Vec<Precision>,
    pub brevity_penalty: f64,
    pub composite: f64,
    pub candidate_len: usize,
    pub effective_ref_len: usize,
}

pub fn modified_precision<T, R>(candidate: &[T], references: &[R], n: usize) -> Result<Precision, MetricError>
where
    T: Eq + Hash,
    R: AsRef<[T]>,
{
    if n == 0 {
        return Err(MetricError::InvalidOrder(n));
    }
    if references.is_empty() {
        return Err(MetricError::NoReferences);
    }
    Ok(clipped(candidate, references, n))
}

fn clipped<T: Eq + Hash, R: AsRef<[T]>>(candidate: &[T], references: &[R], n: usize) -> Precision {
    let cand = window_counts(candidate, n);
    let mut max_ref: HashMap<&[T], usize> = HashMap::new();
    for r in references {
        for (gram, c) in window_counts(r.as_ref(), n) {
            if cand.contains_key(gram) {
                let slot = max_ref.entry(gram).or_insert(0);
                *slot = (*slot).max(c);
            }
        }
    }
    let numerator = cand.iter().map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0))).sum::<usize>();
    Precision { numerator: numerator as u64, denominator: candidate.len().saturating_sub(n - 1) as u64 }
}

/// Length of the reference closest to `c`; ties go to the shorter one.
fn effective_ref_len<T, R: AsRef<[T]>>(c: usize, references: &[R]) -> usize {
    references.iter().map(|r| r.as_ref().len()).min_by_key(|&len| (len.abs_diff(c), len)).unwrap_or(0)
}

fn brevity_penalty(c: usize, r: usize) -> f64 {
    if c == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    }
}

fn smoothed(p: Precision, order: usize, smoothing: Smoothing) -> Precision {
    match smoothing {
        Smoothing::AddOne if order >= 2 => Precision { numerator: p.numerator + 1, denominator: p.denominator + 1 },
        _ => p,
    }
}

/// Geometric mean of the first `upto` precisions times the penalty.
///
/// Orders the candidate is too short to have (undefined precision) are left
/// out of the mean, so a short candidate identical to its reference still
/// scores 1. Any zero precision makes the result zero.
fn combine(precisions: &[Precision], upto: usize, bp: f64, smoothing: Smoothing) -> f64 {
    let mut log_sum = 0.0;
    let mut orders = 0;
    for (i, p) in precisions[..upto].iter().enumerate() {
        let p = smoothed(*p, i + 1, smoothing);
        match p.value() {
            None => {}
            Some(v) if v > 0.0 => {
                log_sum += v.ln();
                orders += 1;
            }
            Some(_) => return 0.0,
        }
    }
    if orders == 0 {
        return 0.0;
    }
    bp * (log_sum / orders as f64).exp()
}

pub fn bleu<T, R>(candidate: &[T], references: &[R], max_n: usize) -> Result<BleuScore, MetricError>
where
    T: Eq + Hash,
    R: AsRef<[T]>,
{
    bleu_with(candidate, references, &BleuConfig { max_n, ..Default::default() })
}

pub fn bleu_with<T, R>(candidate: &[T], references: &[R], config: &BleuConfig) -> Result<BleuScore, MetricError>
where
    T: Eq + Hash,
    R: AsRef<[T]>,
{
    if config.max_n == 0 {
        return Err(MetricError::InvalidOrder(0));
    }
    if references.is_empty() {
        return Err(MetricError::NoReferences);
    }
    let precisions: Vec<Precision> = (1..=config.max_n).map(|n| clipped(candidate, references, n)).collect();
    let c = candidate.len();
    let r = effective_ref_len(c, references);
    let bp = brevity_penalty(c, r);
    let composite = combine(&precisions, config.max_n, bp, config.smoothing);
    Ok(BleuScore { precisions, brevity_penalty: bp, composite, candidate_len: c, effective_ref_len: r })
}

/// Cumulative BLEU-1 through BLEU-4 with uniform weights, unsmoothed.
pub fn bleu_per_order<T, R>(candidate: &[T], references: &[R]) -> Result<[f64; 4], MetricError>
where
    T: Eq + Hash,
    R: AsRef<[T]>,
{
    let score = bleu(candidate, references, 4)?;
    let mut out = [0.0; 4];
    for (n, slot) in out.iter_mut().enumerate() {
        *slot = combine(&score.precisions, n + 1, score.brevity_penalty, Smoothing::None);
    }
    Ok(out)
}
