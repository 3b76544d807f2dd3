//! Language codes and the registry that knows their display names and
//! writing systems.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Writing system used by a language; drives tokenization and the
/// target-script validation check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Script {
    Latin,
    Han,
    /// Kana plus Han ideographs.
    Japanese,
    Cyrillic,
    Devanagari,
    Arabic,
}

impl Script {
    /// True when the script is written without spaces between words.
    pub fn is_unsegmented(self) -> bool {
        matches!(self, Script::Han | Script::Japanese)
    }

    pub fn contains(self, c: char) -> bool {
        let cp = c as u32;
        let han = matches!(cp, 0x4E00..=0x9FFF | 0x3400..=0x4DBF | 0xF900..=0xFAFF | 0x20000..=0x2A6DF);
        match self {
            Script::Latin => c.is_ascii_alphabetic() || matches!(cp, 0x00C0..=0x024F),
            Script::Han => han,
            Script::Japanese => han || matches!(cp, 0x3040..=0x309F | 0x30A0..=0x30FF | 0xFF66..=0xFF9D),
            Script::Cyrillic => matches!(cp, 0x0400..=0x052F),
            Script::Devanagari => matches!(cp, 0x0900..=0x097F | 0xA8E0..=0xA8FF),
            Script::Arabic => {
                matches!(cp, 0x0600..=0x06FF | 0x0750..=0x077F | 0x08A0..=0x08FF | 0xFB50..=0xFDFF | 0xFE70..=0xFEFF)
            }
        }
    }

    /// True if at least one character of `text` belongs to this script.
    pub fn appears_in(self, text: &str) -> bool {
        text.chars().any(|c| self.contains(c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageInfo {
    pub code: String,
    /// English display name, used in prompts ("translate the input to Japanese").
    pub name: String,
    pub script: Script,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LanguageError {
    #[error("language code {0:?} is not a lowercase ISO-639-1 code")]
    BadFormat(String),
    #[error("language code {0:?} is not registered")]
    Unknown(String),
    #[error("language code {0:?} is built in and cannot be redefined")]
    Builtin(String),
}

const BUILTINS: [(&str, &str, Script); 8] = [
    ("en", "English", Script::Latin),
    ("zh", "Chinese", Script::Han),
    ("fr", "French", Script::Latin),
    ("es", "Spanish", Script::Latin),
    ("ru", "Russian", Script::Cyrillic),
    ("hi", "Hindi", Script::Devanagari),
    ("ja", "Japanese", Script::Japanese),
    ("ar", "Arabic", Script::Arabic),
];

fn registry() -> &'static RwLock<BTreeMap<String, LanguageInfo>> {
    static REGISTRY: OnceLock<RwLock<BTreeMap<String, LanguageInfo>>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let map = BUILTINS
            .iter()
            .map(|&(code, name, script)| {
                (code.to_string(), LanguageInfo { code: code.into(), name: name.into(), script })
            })
            .collect();
        RwLock::new(map)
    })
}

fn check_format(code: &str) -> Result<(), LanguageError> {
    if code.len() == 2 && code.bytes().all(|b| b.is_ascii_lowercase()) {
        Ok(())
    } else {
        Err(LanguageError::BadFormat(code.to_string()))
    }
}

/// Adds a language beyond the eight built-ins. Re-registering an
/// existing custom code replaces its entry.
pub fn register_language(code: &str, name: &str, script: Script) -> Result<LanguageCode, LanguageError> {
    check_format(code)?;
    if BUILTINS.iter().any(|(c, _, _)| *c == code) {
        return Err(LanguageError::Builtin(code.to_string()));
    }
    registry()
        .write()
        .expect("language registry poisoned")
        .insert(code.to_string(), LanguageInfo { code: code.into(), name: name.into(), script });
    Ok(LanguageCode(Arc::from(code)))
}

/// A registered, lowercase ISO-639-1 language code.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageCode(Arc<str>);

impl LanguageCode {
    pub fn new(code: &str) -> Result<Self, LanguageError> {
        check_format(code)?;
        if registry().read().expect("language registry poisoned").contains_key(code) {
            Ok(LanguageCode(Arc::from(code)))
        } else {
            Err(LanguageError::Unknown(code.to_string()))
        }
    }

    /// English, the unique source language.
    pub fn english() -> Self {
        LanguageCode(Arc::from("en"))
    }

    /// The eight built-in codes, English first.
    pub fn builtins() -> Vec<LanguageCode> {
        BUILTINS.iter().map(|(c, _, _)| LanguageCode(Arc::from(*c))).collect()
    }

    /// The seven built-in translation targets.
    pub fn default_targets() -> Vec<LanguageCode> {
        Self::builtins().into_iter().filter(|c| !c.is_source()).collect()
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_source(&self) -> bool {
        &*self.0 == "en"
    }

    pub fn info(&self) -> LanguageInfo {
        registry()
            .read()
            .expect("language registry poisoned")
            .get(&*self.0)
            .cloned()
            .expect("constructed codes are always registered")
    }

    pub fn name(&self) -> String {
        self.info().name
    }

    pub fn script(&self) -> Script {
        self.info().script
    }
}

impl fmt::Debug for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for LanguageCode {
    type Err = LanguageError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LanguageCode::new(s)
    }
}

impl TryFrom<String> for LanguageCode {
    type Error = LanguageError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        LanguageCode::new(&s)
    }
}

impl From<LanguageCode> for String {
    fn from(code: LanguageCode) -> Self {
        code.0.to_string()
    }
}
