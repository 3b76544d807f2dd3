use crate::language::LanguageCode;

/// Whether tokens keep their original case.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CaseMode {
    #[default]
    Preserve,
    Fold,
}

/// Splits on whitespace, or into single characters for languages written
/// without word spacing (zh, ja).
pub fn tokenize(text: &str, language: &LanguageCode) -> Vec<String> {
    tokenize_with(text, language, CaseMode::Preserve)
}

pub fn tokenize_with(text: &str, language: &LanguageCode, case: CaseMode) -> Vec<String> {
    let fold = |s: &str| match case {
        CaseMode::Preserve => s.to_string(),
        CaseMode::Fold => s.to_lowercase(),
    };
    if language.script().is_unsegmented() {
        text.chars().filter(|c| !c.is_whitespace()).map(|c| fold(c.encode_utf8(&mut [0; 4]))).collect()
    } else {
        text.split_whitespace().map(fold).collect()
    }
}
