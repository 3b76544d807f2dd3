use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterDecision {
    Keep,
    Drop,
    Flag,
}

/// Pluggable content screen applied to each source sample before planning.
pub trait ContentFilter: Send + Sync {
    fn name(&self) -> &str;
    fn classify(&self, sample: &Sample) -> FilterDecision;
}

/// Case-insensitive whole-word matcher. Terms may span several words.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlocklistFilter {
    pub drop_terms: Vec<String>,
    pub flag_terms: Vec<String>,
}

fn normalize(text: &str) -> String {
    let words: Vec<String> = text
        .split(|c: char| !c.is_alphanumeric() && c != '\'')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    format!(" {} ", words.join(" "))
}

impl BlocklistFilter {
    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(drop_terms: I) -> Self {
        BlocklistFilter { drop_terms: normalize_terms(drop_terms), flag_terms: Vec::new() }
    }

    pub fn with_flag_terms<I: IntoIterator<Item = S>, S: AsRef<str>>(mut self, terms: I) -> Self {
        self.flag_terms = normalize_terms(terms);
        self
    }

    /// One term per line. Lines starting with `#` are comments; a `flag:`
    /// prefix routes matches to review instead of dropping them.
    pub fn parse(text: &str) -> Self {
        let mut drop_terms = Vec::new();
        let mut flag_terms = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            match line.strip_prefix("flag:") {
                Some(term) => flag_terms.push(term.trim().to_string()),
                None => drop_terms.push(line.to_string()),
            }
        }
        BlocklistFilter::new(drop_terms).with_flag_terms(flag_terms)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn is_empty(&self) -> bool {
        self.drop_terms.is_empty() && self.flag_terms.is_empty()
    }
}

fn normalize_terms<I: IntoIterator<Item = S>, S: AsRef<str>>(terms: I) -> Vec<String> {
    let mut out: Vec<String> =
        terms.into_iter().map(|t| normalize(t.as_ref())).filter(|t| !t.trim().is_empty()).collect();
    out.sort();
    out.dedup();
    out
}

impl ContentFilter for BlocklistFilter {
    fn name(&self) -> &str {
        "blocklist"
    }

    fn classify(&self, sample: &Sample) -> FilterDecision {
        let text = normalize(&sample.turns.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" "));
        if self.drop_terms.iter().any(|t| text.contains(t.as_str())) {
            FilterDecision::Drop
        } else if self.flag_terms.iter().any(|t| text.contains(t.as_str())) {
            FilterDecision::Flag
        } else {
            FilterDecision::Keep
        }
    }
}

pub fn toxicity_stage(sample: &Sample, filter: &dyn ContentFilter) -> FilterDecision {
    filter.classify(sample)
}
