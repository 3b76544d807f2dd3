//! Metric-diverse calibration sampling.
//!
//! Each English response becomes a 4-D vector (characters, words, FRE,
//! FKGL). Vectors are z-scored and a greedy maximin traversal picks `k`
//! of them, anchored at the vector nearest the centroid.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::AssistantPayload;
use crate::textmetrics::{length_analysis, readability};

pub const DEFAULT_K: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub sample_id: String,
    pub la_chars: f64,
    pub la_words: f64,
    pub fre: f64,
    pub fkgl: f64,
}

impl MetricVector {
    fn components(&self) -> [f64; 4] {
        [self.la_chars, self.la_words, self.fre, self.fkgl]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPayload {
    pub sample_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricVectors {
    pub vectors: Vec<MetricVector>,
    pub skipped: Vec<SkippedPayload>,
}

/// One vector per sample, from its first assistant payload. Payloads
/// without words are reported in `skipped`.
pub fn compute_metric_vectors(payloads: &[AssistantPayload]) -> MetricVectors {
    let mut out = MetricVectors::default();
    let mut seen = HashSet::new();
    for p in payloads {
        if !seen.insert(p.sample_id.as_str()) {
            continue;
        }
        match readability(&p.text) {
            Ok(r) => {
                let la = length_analysis(&p.text);
                out.vectors.push(MetricVector {
                    sample_id: p.sample_id.clone(),
                    la_chars: la.chars as f64,
                    la_words: la.words as f64,
                    fre: r.fre,
                    fkgl: r.fkgl,
                });
            }
            Err(e) => {
                log::warn!("skipping sample {}: {e}", p.sample_id);
                out.skipped.push(SkippedPayload { sample_id: p.sample_id.clone(), reason: e.to_string() });
            }
        }
    }
    out
}

/// Z-scores each dimension (population std) and drops dimensions with
/// zero variance.
fn normalize(vectors: &[MetricVector]) -> Vec<Vec<f64>> {
    let n = vectors.len() as f64;
    let raw: Vec<[f64; 4]> = vectors.iter().map(MetricVector::components).collect();
    let mut stats = Vec::new();
    for d in 0..4 {
        let mean = raw.iter().map(|v| v[d]).sum::<f64>() / n;
        let var = raw.iter().map(|v| (v[d] - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if std > 1e-12 * mean.abs().max(1.0) {
            stats.push((d, mean, std));
        }
    }
    raw.iter().map(|v| stats.iter().map(|&(d, mean, std)| (v[d] - mean) / std).collect()).collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Index with the largest score; ties go to the smallest sample id.
fn argmax_by_id(vectors: &[MetricVector], candidates: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    candidates
        .fold(None::<(usize, f64)>, |best, (i, s)| match best {
            Some((b, bs)) if bs > s || (bs == s && vectors[b].sample_id <= vectors[i].sample_id) => Some((b, bs)),
            _ => Some((i, s)),
        })
        .map(|(i, _)| i)
}

/// Greedy maximin selection of `min(k, len)` sample ids.
///
/// `seed` is recorded by callers for reproducibility; the traversal itself
/// is deterministic and does not consume randomness.
pub fn select_diverse(vectors: &[MetricVector], k: usize, _seed: u64) -> Vec<String> {
    let k = k.min(vectors.len());
    if k == 0 {
        return Vec::new();
    }
    let points = normalize(vectors);
    // The centroid of z-scored data is the origin.
    let origin = vec![0.0; points[0].len()];
    let anchor =
        argmax_by_id(vectors, points.iter().enumerate().map(|(i, p)| (i, -distance(p, &origin)))).expect("nonempty");

    let mut chosen = vec![false; vectors.len()];
    let mut nearest: Vec<f64> = points.iter().map(|p| distance(p, &points[anchor])).collect();
    let mut picked = Vec::with_capacity(k);
    for round in 0..k {
        let next = argmax_by_id(vectors, nearest.iter().enumerate().filter(|(i, _)| !chosen[*i]).map(|(i, &d)| (i, d)))
            .expect("k <= len");
        chosen[next] = true;
        picked.push(vectors[next].sample_id.clone());
        if round == 0 {
            // the anchor only seeds the first pick
            nearest = points.iter().map(|p| distance(p, &points[next])).collect();
        } else {
            for (i, p) in points.iter().enumerate() {
                nearest[i] = nearest[i].min(distance(p, &points[next]));
            }
        }
    }
    picked
}

/// Minimum pairwise distance of the given ids in z-scored space.
pub fn min_pairwise_distance(vectors: &[MetricVector], ids: &[String]) -> f64 {
    let points = normalize(vectors);
    let idx: Vec<usize> = ids.iter().filter_map(|id| vectors.iter().position(|v| &v.sample_id == id)).collect();
    let mut best = f64::INFINITY;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            best = best.min(distance(&points[i], &points[j]));
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedSample {
    #[serde(flatten)]
    pub metrics: MetricVector,
    /// English source text, carried so later stages need not re-read the corpus.
    pub text: String,
}

/// File emitted by `sample` and consumed by preamble evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionManifest {
    pub k: usize,
    pub seed: u64,
    pub candidates: usize,
    pub skipped: Vec<SkippedPayload>,
    pub selected: Vec<SelectedSample>,
}

impl SelectionManifest {
    pub fn build(payloads: &[AssistantPayload], k: usize, seed: u64) -> Self {
        let MetricVectors { vectors, skipped } = compute_metric_vectors(payloads);
        let ids = select_diverse(&vectors, k, seed);
        let selected = ids
            .iter()
            .map(|id| {
                let metrics = vectors.iter().find(|v| &v.sample_id == id).cloned().expect("selected from vectors");
                let text = payloads.iter().find(|p| &p.sample_id == id).map(|p| p.text.clone()).unwrap_or_default();
                SelectedSample { metrics, text }
            })
            .collect();
        SelectionManifest { k, seed, candidates: vectors.len(), skipped, selected }
    }
}
