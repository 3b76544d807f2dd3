//! Translation preambles: rendering, BLEU tournament, and radar export.
//!
//! A preamble is the instruction block placed in front of each translation
//! request. Candidates are scored by translating a small evaluation set and
//! computing cumulative BLEU-1..4 against reference translations; the
//! preamble with the highest mean wins.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::language::LanguageCode;
use crate::sampling::SelectionManifest;
use crate::textmetrics::{bleu_per_order, tokenize};
use crate::translation::{call_with_retry, AttemptRecord, RetryPolicy, TranslationProvider, TranslationRequest};

/// Placeholder replaced by the target language's English name.
pub const LANGUAGE_PLACEHOLDER: &str = "{language}";

pub const ORDERS: usize = 4;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("English is the source language and cannot be a translation target")]
    SourceLanguageTarget,
    #[error("invalid preamble template: {0}")]
    InvalidTemplate(String),
    #[error("duplicate preamble id {0}")]
    DuplicatePreamble(u32),
    #[error("missing reference for sample {sample_id:?} in {language}")]
    MissingReference { sample_id: String, language: LanguageCode },
    #[error("report has no complete preamble")]
    EmptyReport,
    #[error("failed to load {path}: {message}")]
    Load { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptExample {
    pub input: String,
    pub output: String,
    /// Only shown when translating into this language; shown always if unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<LanguageCode>,
}

/// One candidate preamble, stored as a TOML file:
///
/// ```toml
/// id = 6
/// instructions = """
/// You are an expert in translations.
/// Your job is to translate the input to {language} in
/// the given chat."""
/// considerations = ["Names and numbers are preserved."]
/// constraints = "Output only the translation."
///
/// [[examples]]
/// language = "fr"
/// input = "A cat."
/// output = "Un chat."
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreambleTemplate {
    pub id: u32,
    pub instructions: String,
    #[serde(default)]
    pub considerations: Vec<String>,
    #[serde(default)]
    pub constraints: Option<String>,
    #[serde(default)]
    pub examples: Vec<PromptExample>,
}

impl PreambleTemplate {
    /// The layout adopted for the production run, with generic
    /// considerations and no worked examples.
    pub fn builtin() -> Self {
        PreambleTemplate {
            id: 6,
            instructions: "You are an expert in translations.\nYour job is to translate the input to {language} in\nthe given chat.".into(),
            considerations: vec![
                "The meaning, tone and level of detail of the input are preserved.".into(),
                "Names, numbers and units are carried over accurately.".into(),
                "The translation reads naturally to a native {language} speaker.".into(),
            ],
            constraints: Some("Output only the {language} translation, without explanations or notes.".into()),
            examples: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.instructions.trim().is_empty() {
            return Err(PromptError::InvalidTemplate(format!("preamble {} has empty instructions", self.id)));
        }
        if !self.instructions.contains(LANGUAGE_PLACEHOLDER) {
            return Err(PromptError::InvalidTemplate(format!(
                "preamble {} instructions must name the target via {LANGUAGE_PLACEHOLDER}",
                self.id
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let load_err = |message: String| PromptError::Load { path: path.to_path_buf(), message };
        let raw = std::fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        let template: PreambleTemplate = toml::from_str(&raw).map_err(|e| load_err(e.to_string()))?;
        template.validate()?;
        Ok(template)
    }

    /// Loads every `*.toml` file in `dir`, sorted by id.
    pub fn load_dir(dir: &Path) -> Result<Vec<Self>, PromptError> {
        let entries = std::fs::read_dir(dir)
            .map_err(|e| PromptError::Load { path: dir.to_path_buf(), message: e.to_string() })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        paths.sort();
        let mut out = paths.iter().map(|p| Self::load(p)).collect::<Result<Vec<_>, _>>()?;
        out.sort_by_key(|p| p.id);
        check_unique(&out)?;
        Ok(out)
    }
}

fn check_unique(preambles: &[PreambleTemplate]) -> Result<(), PromptError> {
    let mut seen = HashSet::new();
    for p in preambles {
        if !seen.insert(p.id) {
            return Err(PromptError::DuplicatePreamble(p.id));
        }
    }
    Ok(())
}

/// Renders the full prompt for translating `input_text` into `target`.
pub fn render_prompt(
    template: &PreambleTemplate,
    target: &LanguageCode,
    input_text: &str,
) -> Result<String, PromptError> {
    if target.is_source() {
        return Err(PromptError::SourceLanguageTarget);
    }
    template.validate()?;
    let name = target.name();
    let fill = |s: &str| s.replace(LANGUAGE_PLACEHOLDER, &name);

    let mut out = String::from("## Instructions\n");
    out.push_str(fill(template.instructions.trim_end()).as_str());
    out.push('\n');
    if !template.considerations.is_empty() {
        out.push_str("\nEnsure that:\n");
        for c in &template.considerations {
            let _ = writeln!(out, "- {}", fill(c));
        }
    }
    if let Some(note) = &template.constraints {
        let _ = writeln!(out, "\nNote: {}", fill(note));
    }
    let examples: Vec<_> =
        template.examples.iter().filter(|e| e.language.as_ref().is_none_or(|l| l == target)).collect();
    if !examples.is_empty() {
        out.push_str("\n## Examples\n");
        for (i, ex) in examples.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = write!(out, "### Example {}\nInput:\n{}\nExpected Output:\n{}\n", i + 1, ex.input, ex.output);
        }
    }
    let _ = write!(out, "\n## Translate\nInput:\n{input_text}\nExpected Output:\n");
    Ok(out)
}

/// Pulls the translation out of a model reply that may echo the prompt
/// layout: keeps what follows the last `Expected Output:` marker, up to the
/// next section header or `Input:` line.
pub fn extract_translation(reply: &str) -> String {
    const ANCHOR: &str = "Expected Output:";
    let tail = match reply.rfind(ANCHOR) {
        Some(i) => &reply[i + ANCHOR.len()..],
        None => reply,
    };
    let mut kept = Vec::new();
    for line in tail.lines() {
        let t = line.trim_start();
        if t.starts_with("## ") || t.starts_with("### ") || t.starts_with("Input:") {
            break;
        }
        kept.push(line);
    }
    kept.join("\n").trim().to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPrompt {
    pub id: String,
    pub text: String,
}

impl EvalPrompt {
    pub fn from_selection(manifest: &SelectionManifest) -> Vec<EvalPrompt> {
        manifest.selected.iter().map(|s| EvalPrompt { id: s.metrics.sample_id.clone(), text: s.text.clone() }).collect()
    }
}

/// Evaluation prompts plus their reference translations, as read from a
/// pairs file: `{"prompts": [{"id", "text"}], "references": {id: {lang: text}}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalSet {
    pub prompts: Vec<EvalPrompt>,
    pub references: BTreeMap<String, BTreeMap<LanguageCode, String>>,
}

impl EvalSet {
    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let load_err = |message: String| PromptError::Load { path: path.to_path_buf(), message };
        let raw = std::fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        serde_json::from_str(&raw).map_err(|e| load_err(e.to_string()))
    }

    /// Every target language that appears in the references, sorted.
    pub fn languages(&self) -> Vec<LanguageCode> {
        let mut langs: Vec<_> = self.references.values().flat_map(|m| m.keys().cloned()).collect();
        langs.sort();
        langs.dedup();
        langs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPair {
    pub sample_id: String,
    pub source_en: String,
    pub reference: String,
    pub language: LanguageCode,
}

/// One pair per (prompt, language), prompts outermost.
pub fn build_eval_dataset(
    prompts: &[EvalPrompt],
    references: &BTreeMap<String, BTreeMap<LanguageCode, String>>,
    languages: &[LanguageCode],
) -> Result<Vec<EvalPair>, PromptError> {
    let mut pairs = Vec::with_capacity(prompts.len() * languages.len());
    for prompt in prompts {
        for lang in languages {
            if lang.is_source() {
                return Err(PromptError::SourceLanguageTarget);
            }
            let reference =
                references.get(&prompt.id).and_then(|m| m.get(lang)).filter(|r| !r.trim().is_empty()).ok_or_else(
                    || PromptError::MissingReference { sample_id: prompt.id.clone(), language: lang.clone() },
                )?;
            pairs.push(EvalPair {
                sample_id: prompt.id.clone(),
                source_en: prompt.text.clone(),
                reference: reference.clone(),
                language: lang.clone(),
            });
        }
    }
    Ok(pairs)
}

/// Mean BLEU-`order` of one preamble on one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub preamble_id: u32,
    pub language: LanguageCode,
    pub order: usize,
    pub mean_bleu: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingCell {
    pub preamble_id: u32,
    pub sample_id: String,
    pub language: LanguageCode,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreambleReport {
    pub cells: Vec<ReportCell>,
    /// Unweighted mean over each preamble's (language, order) cells.
    pub grand_means: BTreeMap<u32, f64>,
    pub missing: Vec<MissingCell>,
    pub partial: bool,
}

impl PreambleReport {
    pub fn from_cells(mut cells: Vec<ReportCell>, missing: Vec<MissingCell>) -> Self {
        cells.sort_by(|a, b| (a.preamble_id, &a.language, a.order).cmp(&(b.preamble_id, &b.language, b.order)));
        let mut sums: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
        for c in &cells {
            let e = sums.entry(c.preamble_id).or_insert((0.0, 0));
            e.0 += c.mean_bleu;
            e.1 += 1;
        }
        let grand_means = sums.into_iter().map(|(id, (s, n))| (id, s / n as f64)).collect();
        let partial = !missing.is_empty();
        PreambleReport { cells, grand_means, missing, partial }
    }

    pub fn cell(&self, preamble_id: u32, language: &LanguageCode, order: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.preamble_id == preamble_id && &c.language == language && c.order == order)
            .map(|c| c.mean_bleu)
    }

    fn complete(&self, preamble_id: u32) -> bool {
        !self.missing.iter().any(|m| m.preamble_id == preamble_id)
    }
}

/// Scores every preamble on every pair. Provider failures (after retries)
/// are recorded as missing cells and mark the report partial.
pub fn evaluate_preambles(
    preambles: &[PreambleTemplate],
    pairs: &[EvalPair],
    provider: &dyn TranslationProvider,
    retry: &RetryPolicy,
    observer: &mut dyn FnMut(AttemptRecord),
) -> Result<PreambleReport, PromptError> {
    check_unique(preambles)?;
    let english = LanguageCode::english();
    let mut sums: BTreeMap<(u32, LanguageCode), ([f64; ORDERS], usize)> = BTreeMap::new();
    let mut missing = Vec::new();

    for preamble in preambles {
        for pair in pairs {
            let prompt = render_prompt(preamble, &pair.language, &pair.source_en)?;
            let request =
                TranslationRequest::new(&pair.source_en, english.clone(), pair.language.clone(), preamble.id, prompt)
                    .map_err(|e| PromptError::InvalidTemplate(e.to_string()))?;
            let slot = sums.entry((preamble.id, pair.language.clone())).or_insert(([0.0; ORDERS], 0));
            match call_with_retry(provider, &request, retry, observer) {
                Ok(result) => {
                    let candidate = tokenize(&result.text, &pair.language);
                    let reference = tokenize(&pair.reference, &pair.language);
                    let scores = bleu_per_order(&candidate, &[reference]).expect("one reference, order 4");
                    for (acc, s) in slot.0.iter_mut().zip(scores) {
                        *acc += s;
                    }
                    slot.1 += 1;
                }
                Err(e) => {
                    log::warn!("preamble {} on {}/{}: {e}", preamble.id, pair.sample_id, pair.language);
                    missing.push(MissingCell {
                        preamble_id: preamble.id,
                        sample_id: pair.sample_id.clone(),
                        language: pair.language.clone(),
                        error: e.to_string(),
                    });
                }
            }
        }
    }

    let cells = sums
        .into_iter()
        .filter(|(_, (_, n))| *n > 0)
        .flat_map(|((id, lang), (s, n))| {
            (0..ORDERS).map(move |i| ReportCell {
                preamble_id: id,
                language: lang.clone(),
                order: i + 1,
                mean_bleu: s[i] / n as f64,
                pairs: n,
            })
        })
        .collect();
    Ok(PreambleReport::from_cells(cells, missing))
}

/// Highest grand mean among complete preambles; ties go to the lowest id.
pub fn select_best_preamble(report: &PreambleReport) -> Result<u32, PromptError> {
    report
        .grand_means
        .iter()
        .filter(|(id, _)| report.complete(**id))
        .fold(None::<(u32, f64)>, |best, (&id, &m)| match best {
            Some((_, bm)) if bm >= m => best,
            _ => Some((id, m)),
        })
        .map(|(id, _)| id)
        .ok_or(PromptError::EmptyReport)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarRow {
    pub preamble_id: u32,
    pub n: usize,
    pub mean_bleu: f64,
}

/// Cross-language mean per (preamble, order).
pub fn export_radar_data(report: &PreambleReport) -> Result<Vec<RadarRow>, PromptError> {
    if report.cells.is_empty() {
        return Err(PromptError::EmptyReport);
    }
    let mut acc: BTreeMap<(u32, usize), (f64, usize)> = BTreeMap::new();
    for c in &report.cells {
        let e = acc.entry((c.preamble_id, c.order)).or_insert((0.0, 0));
        e.0 += c.mean_bleu;
        e.1 += 1;
    }
    Ok(acc.into_iter().map(|((preamble_id, n), (s, k))| RadarRow { preamble_id, n, mean_bleu: s / k as f64 }).collect())
}

pub fn radar_csv(rows: &[RadarRow]) -> String {
    let mut out = String::from("preamble_id,n,mean_bleu\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:.6}", r.preamble_id, r.n, r.mean_bleu);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::translation::mock::{EchoProvider, FaultInjector, ReferenceProvider};

    fn lang(c: &str) -> LanguageCode {
        LanguageCode::new(c).unwrap()
    }

    fn template(id: u32) -> PreambleTemplate {
        PreambleTemplate { id, ..PreambleTemplate::builtin() }
    }

    #[test]
    fn renders_listing_layout() {
        let mut t = PreambleTemplate::builtin();
        t.examples.push(PromptExample { input: "A cat.".into(), output: "猫。".into(), language: Some(lang("ja")) });
        t.examples.push(PromptExample {
            input: "A cat.".into(),
            output: "Un chat.".into(),
            language: Some(lang("fr")),
        });
        let p = render_prompt(&t, &lang("ja"), "A dog.").unwrap();
        assert!(p.starts_with("## Instructions\nYou are an expert in translations.\n"));
        assert!(p.contains("translate the input to Japanese"));
        assert!(p.contains("\nEnsure that:\n- "));
        assert!(p.contains("\nNote: Output only the Japanese translation"));
        assert!(p.contains("## Examples\n### Example 1\nInput:\nA cat.\nExpected Output:\n猫。\n"));
        assert!(!p.contains("Un chat."));
        assert!(p.ends_with("Input:\nA dog.\nExpected Output:\n"));
        assert_eq!(p, render_prompt(&t, &lang("ja"), "A dog.").unwrap());
    }

    #[test]
    fn omits_empty_sections() {
        let t = PreambleTemplate {
            id: 1,
            instructions: "Translate to {language}.".into(),
            considerations: vec![],
            constraints: None,
            examples: vec![],
        };
        let p = render_prompt(&t, &lang("fr"), "Hi").unwrap();
        assert_eq!(p, "## Instructions\nTranslate to French.\n\n## Translate\nInput:\nHi\nExpected Output:\n");
    }

    #[test]
    fn english_target_rejected() {
        assert!(matches!(
            render_prompt(&PreambleTemplate::builtin(), &LanguageCode::english(), "x"),
            Err(PromptError::SourceLanguageTarget)
        ));
    }

    #[test]
    fn template_must_name_language() {
        let t = PreambleTemplate { instructions: "Translate.".into(), ..template(2) };
        assert!(matches!(render_prompt(&t, &lang("fr"), "x"), Err(PromptError::InvalidTemplate(_))));
    }

    #[test]
    fn extraction() {
        assert_eq!(extract_translation("Un chat."), "Un chat.");
        assert_eq!(extract_translation("## Translate\nInput:\nA cat.\nExpected Output:\n Un chat. \n"), "Un chat.");
        assert_eq!(extract_translation("Expected Output:\nUn chat.\n\n### Example 2\nInput:\nx"), "Un chat.");
        assert_eq!(extract_translation("Expected Output: Un chat."), "Un chat.");
    }

    fn references(ids: &[&str], langs: &[LanguageCode]) -> BTreeMap<String, BTreeMap<LanguageCode, String>> {
        ids.iter()
            .map(|id| (id.to_string(), langs.iter().map(|l| (l.clone(), format!("ref {id} {l}"))).collect()))
            .collect()
    }

    #[test]
    fn eval_dataset_sizes() {
        let targets = LanguageCode::default_targets();
        let ids = ["p1", "p2", "p3", "p4", "p5", "p6"];
        let prompts: Vec<_> =
            ids.iter().map(|id| EvalPrompt { id: id.to_string(), text: format!("text {id}") }).collect();
        let pairs = build_eval_dataset(&prompts, &references(&ids, &targets), &targets).unwrap();
        assert_eq!(pairs.len(), 42);

        let one = build_eval_dataset(&prompts[..1], &references(&ids, &targets), &targets[..1]).unwrap();
        assert_eq!(one.len(), 1);

        let mut refs = references(&ids, &targets);
        refs.get_mut("p4").unwrap().remove(&lang("hi"));
        match build_eval_dataset(&prompts, &refs, &targets) {
            Err(PromptError::MissingReference { sample_id, language }) => {
                assert_eq!(sample_id, "p4");
                assert_eq!(language, lang("hi"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn echo_with_reference_equal_source_scores_one() {
        let fr = lang("fr");
        let pairs = vec![EvalPair {
            sample_id: "a".into(),
            source_en: "a dog runs across the beach".into(),
            reference: "a dog runs across the beach".into(),
            language: fr.clone(),
        }];
        let report = evaluate_preambles(
            &[template(1), template(2)],
            &pairs,
            &EchoProvider,
            &RetryPolicy::immediate(1),
            &mut |_| {},
        )
        .unwrap();
        assert_eq!(report.cells.len(), 2 * 4);
        assert!(report.cells.iter().all(|c| c.mean_bleu == 1.0));
        assert_eq!(report.grand_means[&1], 1.0);
        assert!(!report.partial);
    }

    #[test]
    fn rigged_provider_favours_six() {
        let targets = [lang("fr"), lang("ru")];
        let mut provider = ReferenceProvider::new(6);
        let mut pairs = Vec::new();
        for (i, (src, fr, ru)) in [
            ("a cat sleeps on a sofa", "un chat dort sur un canapé", "кошка спит на диване у окна"),
            ("two men ride bicycles", "deux hommes font du vélo", "двое мужчин едут на велосипедах"),
        ]
        .iter()
        .enumerate()
        {
            for (l, r) in targets.iter().zip([fr, ru]) {
                provider.insert(src, l.clone(), r);
                pairs.push(EvalPair {
                    sample_id: format!("s{i}"),
                    source_en: src.to_string(),
                    reference: r.to_string(),
                    language: l.clone(),
                });
            }
        }
        let preambles: Vec<_> = (1..=6).map(template).collect();
        let report =
            evaluate_preambles(&preambles, &pairs, &provider, &RetryPolicy::immediate(1), &mut |_| {}).unwrap();
        assert_eq!(report.cells.len(), 6 * 2 * 4);
        assert_eq!(select_best_preamble(&report).unwrap(), 6);
        for id in 1..6 {
            assert!(report.grand_means[&6] > report.grand_means[&id]);
        }
    }

    #[test]
    fn provider_failure_marks_partial() {
        let fr = lang("fr");
        let pairs = vec![
            EvalPair {
                sample_id: "a".into(),
                source_en: "good text here".into(),
                reference: "good text here".into(),
                language: fr.clone(),
            },
            EvalPair {
                sample_id: "b".into(),
                source_en: "broken".into(),
                reference: "cassé".into(),
                language: fr.clone(),
            },
        ];
        let provider = FaultInjector::new(EchoProvider).permanent("broken");
        let report =
            evaluate_preambles(&[template(3)], &pairs, &provider, &RetryPolicy::immediate(2), &mut |_| {}).unwrap();
        assert!(report.partial);
        assert_eq!(report.missing.len(), 1);
        assert_eq!(report.cells.len(), 4);
        assert!(matches!(select_best_preamble(&report), Err(PromptError::EmptyReport)));
    }

    fn uniform_report(means: &[(u32, f64)]) -> PreambleReport {
        let cells = means
            .iter()
            .flat_map(|&(id, m)| {
                LanguageCode::default_targets().into_iter().flat_map(move |l| {
                    (1..=4).map(move |n| ReportCell {
                        preamble_id: id,
                        language: l.clone(),
                        order: n,
                        mean_bleu: m,
                        pairs: 6,
                    })
                })
            })
            .collect();
        PreambleReport::from_cells(cells, vec![])
    }

    #[test]
    fn best_preamble_selection() {
        assert_eq!(select_best_preamble(&uniform_report(&[(1, 0.30), (5, 0.38), (6, 0.46)])).unwrap(), 6);
        assert_eq!(select_best_preamble(&uniform_report(&[(4, 0.2)])).unwrap(), 4);
        assert_eq!(select_best_preamble(&uniform_report(&[(4, 0.5), (2, 0.5)])).unwrap(), 2);
        assert!(matches!(select_best_preamble(&uniform_report(&[])), Err(PromptError::EmptyReport)));
    }

    #[test]
    fn radar_rows() {
        let report = uniform_report(&[(1, 0.1), (2, 0.2), (3, 0.3), (4, 0.4), (5, 0.5), (6, 0.6)]);
        let rows = export_radar_data(&report).unwrap();
        assert_eq!(rows.len(), 24);
        assert_eq!((rows[0].preamble_id, rows[0].n), (1, 1));
        assert!((rows[23].mean_bleu - 0.6).abs() < 1e-12);
        let csv = radar_csv(&rows);
        assert!(csv.starts_with("preamble_id,n,mean_bleu\n1,1,0.100000\n"));
        assert_eq!(csv.lines().count(), 25);
        assert!(matches!(export_radar_data(&uniform_report(&[])), Err(PromptError::EmptyReport)));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = evaluate_preambles(
            &[template(1), template(1)],
            &[],
            &EchoProvider,
            &RetryPolicy::immediate(1),
            &mut |_| {},
        );
        assert!(matches!(err, Err(PromptError::DuplicatePreamble(1))));
    }
}
