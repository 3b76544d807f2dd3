//! Length analysis and Flesch readability scores for English text.
//!
//! Counting rules:
//! * a word is a whitespace-separated token containing a letter or digit;
//! * a sentence ends at a run of `.`, `!` or `?` followed by whitespace or
//!   the end of text (abbreviations are not special-cased);
//! * syllables are maximal runs of `a e i o u y`, minus one for a trailing
//!   `e` after a consonant, with a floor of one per word.

use serde::{Deserialize, Serialize};

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityReport {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
    pub chars: usize,
    /// Flesch Reading Ease.
    pub fre: f64,
    /// Flesch-Kincaid Grade Level.
    pub fkgl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthStats {
    pub chars: usize,
    pub words: usize,
    pub sentences: usize,
}

fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace().filter(|t| is_word(t))
}

/// Sentence segments of `text`, terminators included.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let mut end = i + c.len_utf8();
        while let Some(&(j, d)) = chars.peek() {
            if matches!(d, '.' | '!' | '?') {
                end = j + d.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        let at_boundary = match chars.peek() {
            None => true,
            Some(&(_, d)) => d.is_whitespace(),
        };
        if at_boundary {
            out.push(&text[start..end]);
            start = end;
        }
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out.into_iter().filter(|s| words(s).next().is_some()).map(str::trim).collect()
}

pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<u8> = word.to_lowercase().bytes().filter(u8::is_ascii_lowercase).collect();
    if letters.is_empty() {
        return 1;
    }
    let vowel = |b: u8| matches!(b, b'a' | b'e' | b'i' | b'o' | b'u' | b'y');
    let mut groups = 0;
    let mut prev = false;
    for &b in &letters {
        let v = vowel(b);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    let n = letters.len();
    if n >= 2 && letters[n - 1] == b'e' && !vowel(letters[n - 2]) {
        groups -= 1;
    }
    groups.max(1)
}

pub fn length_analysis(text: &str) -> LengthStats {
    let words = words(text).count();
    let sentences = if words == 0 { 0 } else { split_sentences(text).len().max(1) };
    LengthStats { chars: text.chars().count(), words, sentences }
}

pub fn readability(text: &str) -> Result<ReadabilityReport, MetricError> {
    let LengthStats { chars, words: n_words, sentences } = length_analysis(text);
    if n_words == 0 {
        return Err(MetricError::EmptyText);
    }
    let syllables: usize = words(text).map(count_syllables).sum();
    let wps = n_words as f64 / sentences as f64;
    let spw = syllables as f64 / n_words as f64;
    Ok(ReadabilityReport {
        words: n_words,
        sentences,
        syllables,
        chars,
        fre: 206.835 - 1.015 * wps - 84.6 * spw,
        fkgl: 0.39 * wps + 11.8 * spw - 15.59,
    })
}
