//! Browser bindings for the metric and sampling stages. Each export takes
//! plain strings and returns a JSON document; the plain Rust functions
//! behind them are usable and testable natively.

use linguaforge::corpus::AssistantPayload;
use linguaforge::sampling::{
    compute_metric_vectors, min_pairwise_distance, select_diverse, MetricVector, SkippedPayload,
};
use linguaforge::textmetrics::{bleu, bleu_per_order, readability, tokenize, ReadabilityReport};
use linguaforge::LanguageCode;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderScore {
    pub n: usize,
    /// Clipped n-gram matches over candidate n-grams.
    pub numerator: u64,
    pub denominator: u64,
    /// Cumulative BLEU-n.
    pub bleu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BleuReport {
    pub candidate_tokens: usize,
    pub references: usize,
    pub brevity_penalty: f64,
    pub composite: f64,
    pub orders: Vec<OrderScore>,
}

/// Scores `candidate` against one reference per non-empty line of
/// `references`, tokenized for `language`.
pub fn bleu_report(candidate: &str, references: &str, language: &str) -> Result<BleuReport, String> {
    let lang = LanguageCode::new(language.trim()).map_err(|e| e.to_string())?;
    let cand = tokenize(candidate, &lang);
    let refs: Vec<Vec<String>> =
        references.lines().filter(|l| !l.trim().is_empty()).map(|l| tokenize(l, &lang)).collect();
    if refs.is_empty() {
        return Err("enter at least one reference".into());
    }
    let score = bleu(&cand, &refs, 4).map_err(|e| e.to_string())?;
    let cumulative = bleu_per_order(&cand, &refs).map_err(|e| e.to_string())?;
    let orders = score
        .precisions
        .iter()
        .zip(cumulative)
        .enumerate()
        .map(|(i, (p, b))| OrderScore { n: i + 1, numerator: p.numerator, denominator: p.denominator, bleu: b })
        .collect();
    Ok(BleuReport {
        candidate_tokens: cand.len(),
        references: refs.len(),
        brevity_penalty: score.brevity_penalty,
        composite: score.composite,
        orders,
    })
}

pub fn readability_report(text: &str) -> Result<ReadabilityReport, String> {
    readability(text).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Picked {
    /// 1-based input line.
    pub line: usize,
    pub text: String,
    pub metrics: MetricVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub candidates: usize,
    pub selected: Vec<Picked>,
    pub skipped: Vec<SkippedPayload>,
    /// Smallest z-scored distance between two picks; absent below two picks.
    pub min_distance: Option<f64>,
}

/// Greedy maximin selection of `k` lines, one candidate per non-empty line.
pub fn diverse_selection(texts: &str, k: usize) -> Selection {
    let lines: Vec<(usize, &str)> =
        texts.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| (i + 1, l)).collect();
    let payloads: Vec<AssistantPayload> = lines
        .iter()
        .map(|&(line, text)| AssistantPayload {
            sample_id: format!("{line:06}"),
            turn_index: 1,
            text: text.to_string(),
        })
        .collect();
    let metrics = compute_metric_vectors(&payloads);
    let ids = select_diverse(&metrics.vectors, k, 0);
    let distance = min_pairwise_distance(&metrics.vectors, &ids);
    let selected = ids
        .iter()
        .map(|id| {
            let line: usize = id.parse().expect("ids are line numbers");
            let text = lines.iter().find(|(l, _)| *l == line).map(|(_, t)| t.to_string()).unwrap_or_default();
            let metrics = metrics.vectors.iter().find(|v| &v.sample_id == id).cloned().expect("picked from vectors");
            Picked { line, text, metrics }
        })
        .collect();
    Selection {
        candidates: metrics.vectors.len(),
        selected,
        skipped: metrics.skipped,
        min_distance: distance.is_finite().then_some(distance),
    }
}

fn to_js<T: Serialize>(result: Result<T, String>) -> Result<String, JsError> {
    let value = result.map_err(|e| JsError::new(&e))?;
    Ok(serde_json::to_string(&value).expect("report serializes"))
}

#[wasm_bindgen(js_name = bleuReport)]
pub fn bleu_report_js(candidate: &str, references: &str, language: &str) -> Result<String, JsError> {
    to_js(bleu_report(candidate, references, language))
}

#[wasm_bindgen(js_name = readabilityReport)]
pub fn readability_report_js(text: &str) -> Result<String, JsError> {
    to_js(readability_report(text))
}

#[wasm_bindgen(js_name = diverseSelection)]
pub fn diverse_selection_js(texts: &str, k: usize) -> Result<String, JsError> {
    to_js(Ok(diverse_selection(texts, k)))
}
