use serde::{Deserialize, Serialize};

use super::{
    call_with_retry, AttemptRecord, RetryPolicy, TranslationError, TranslationProvider, TranslationRequest,
    TranslationResult,
};
use crate::language::{LanguageCode, Script};
use crate::textmetrics::{bleu, tokenize};

pub const DEFAULT_THRESHOLD: f64 = 0.3;

/// Cheap output checks applied to every forward translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationConfig {
    pub check_empty: bool,
    /// Require at least one character of the target script for non-Latin targets.
    pub check_script: bool,
    /// Allowed output/input length ratio.
    pub length_ratio: Option<[f64; 2]>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig { check_empty: true, check_script: true, length_ratio: Some([0.3, 3.0]) }
    }
}

impl ValidationConfig {
    pub fn disabled() -> Self {
        ValidationConfig { check_empty: false, check_script: false, length_ratio: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum ValidationIssue {
    EmptyOutput,
    MissingTargetScript { target: LanguageCode },
    LengthRatio { ratio: f64 },
}

fn length_units(text: &str, language: &LanguageCode) -> usize {
    tokenize(text, language).len()
}

fn char_units(text: &str) -> usize {
    text.chars().filter(|c| !c.is_whitespace()).count()
}

pub fn validate_output(
    source_text: &str,
    source: &LanguageCode,
    output: &str,
    target: &LanguageCode,
    config: &ValidationConfig,
) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    if config.check_empty && output.trim().is_empty() {
        issues.push(ValidationIssue::EmptyOutput);
        return issues;
    }
    if config.check_script && target.script() != Script::Latin && !target.script().appears_in(output) {
        issues.push(ValidationIssue::MissingTargetScript { target: target.clone() });
    }
    if let Some([lo, hi]) = config.length_ratio {
        // mixed spaced/unspaced pairs are compared in characters
        let (num, den) = if source.script().is_unsegmented() != target.script().is_unsegmented() {
            (char_units(output), char_units(source_text))
        } else {
            (length_units(output, target), length_units(source_text, source))
        };
        if den > 0 {
            let ratio = num as f64 / den as f64;
            if !(lo..=hi).contains(&ratio) {
                issues.push(ValidationIssue::LengthRatio { ratio });
            }
        }
    }
    issues
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationConfig {
    pub threshold: f64,
    pub validation: ValidationConfig,
    pub retry: RetryPolicy,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        VerificationConfig {
            threshold: DEFAULT_THRESHOLD,
            validation: ValidationConfig::default(),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    FlaggedForReview,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifiedTranslation {
    pub forward: TranslationResult,
    pub back: TranslationResult,
    /// BLEU of the back-translation against the original English.
    pub gate_bleu: f64,
    pub verdict: Verdict,
    pub issues: Vec<ValidationIssue>,
}

pub fn back_translation_prompt(source: &LanguageCode, text: &str) -> String {
    format!(
        "Translate the following {} text to English. Reply with the translation only.\n\nInput:\n{text}\nExpected Output:\n",
        source.name()
    )
}

/// Forward-translates English `text`, back-translates the result, and
/// accepts it when the back-translation scores at least `threshold` BLEU
/// against the original and no validation check fires.
pub fn translate_with_verification(
    text: &str,
    target: &LanguageCode,
    provider: &dyn TranslationProvider,
    preamble_id: u32,
    forward_prompt: &str,
    config: &VerificationConfig,
    observer: &mut dyn FnMut(AttemptRecord),
) -> Result<VerifiedTranslation, TranslationError> {
    if text.trim().is_empty() {
        return Err(TranslationError::InvalidRequest("empty source text".into()));
    }
    if !(0.0..=1.0).contains(&config.threshold) {
        return Err(TranslationError::InvalidRequest(format!("threshold {} outside [0, 1]", config.threshold)));
    }
    let english = LanguageCode::english();
    let forward_req = TranslationRequest::new(text, english.clone(), target.clone(), preamble_id, forward_prompt)?;
    let forward = call_with_retry(provider, &forward_req, &config.retry, observer)?;

    let back_req = TranslationRequest::new(
        forward.text.clone(),
        target.clone(),
        english.clone(),
        0,
        back_translation_prompt(target, &forward.text),
    )?;
    let back = match call_with_retry(provider, &back_req, &config.retry, observer) {
        Ok(b) => b,
        Err(cause) => return Err(TranslationError::VerificationUnavailable { forward, cause }),
    };

    let original = tokenize(text, &english);
    let returned = tokenize(&back.text, &english);
    let gate_bleu = bleu(&returned, &[original], 4).map(|s| s.composite).unwrap_or(0.0);
    let issues = validate_output(text, &english, &forward.text, target, &config.validation);
    let verdict =
        if gate_bleu >= config.threshold && issues.is_empty() { Verdict::Accepted } else { Verdict::FlaggedForReview };
    Ok(VerifiedTranslation { forward, back, gate_bleu, verdict, issues })
}
