//! Deterministic providers for tests, dry runs, and fault injection.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{ProviderError, TranslationProvider, TranslationRequest};
use crate::language::{LanguageCode, Script};
use crate::textmetrics::tokenize;

/// Returns the input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoProvider;

impl TranslationProvider for EchoProvider {
    fn name(&self) -> &str {
        "echo"
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, ProviderError> {
        Ok(request.text.clone())
    }
}

/// Prefixes the text with a tag written in the target's script and strips
/// it again on the way back to English, so `back(forward(x)) == x` and the
/// output passes the target-script check.
#[derive(Debug, Clone, Copy, Default)]
pub struct TaggingProvider;

impl TaggingProvider {
    pub fn tag(language: &LanguageCode) -> String {
        let native = match language.script() {
            Script::Han => "中文",
            Script::Japanese => "日本語",
            Script::Cyrillic => "русский",
            Script::Devanagari => "हिंदी",
            Script::Arabic => "عربي",
            Script::Latin => "",
        };
        if native.is_empty() {
            format!("[{language}]")
        } else {
            format!("[{native}]")
        }
    }
}

impl TranslationProvider for TaggingProvider {
    fn name(&self) -> &str {
        "tagging"
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, ProviderError> {
        let source_tag = format!("{} ", Self::tag(&request.source));
        let plain = request.text.strip_prefix(&source_tag).unwrap_or(&request.text);
        if request.target.is_source() {
            Ok(plain.to_string())
        } else {
            Ok(format!("{} {plain}", Self::tag(&request.target)))
        }
    }
}

/// Word-by-word table lookup; unknown words pass through.
#[derive(Debug, Clone, Default)]
pub struct DictionaryProvider {
    tables: HashMap<(String, String), HashMap<String, String>>,
}

impl DictionaryProvider {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `word -> translation` for `source -> target` and the inverse
    /// entry for `target -> source`.
    pub fn insert(&mut self, source: &str, target: &str, word: &str, translation: &str) {
        self.tables.entry((source.into(), target.into())).or_default().insert(word.into(), translation.into());
        self.tables
            .entry((target.into(), source.into()))
            .or_default()
            .entry(translation.into())
            .or_insert_with(|| word.into());
    }

    /// Loads `{"en-fr": {"cat": "chat", ...}, ...}`.
    pub fn from_json_file(path: &Path) -> std::io::Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let parsed: HashMap<String, HashMap<String, String>> =
            serde_json::from_str(&raw).map_err(std::io::Error::other)?;
        let mut dict = Self::new();
        for (pair, words) in parsed {
            let (src, tgt) =
                pair.split_once('-').ok_or_else(|| std::io::Error::other(format!("bad language pair {pair:?}")))?;
            for (w, t) in words {
                dict.insert(src, tgt, &w, &t);
            }
        }
        Ok(dict)
    }
}

impl TranslationProvider for DictionaryProvider {
    fn name(&self) -> &str {
        "dictionary"
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, ProviderError> {
        let key = (request.source.to_string(), request.target.to_string());
        let table = self.tables.get(&key);
        let words: Vec<&str> = request
            .text
            .split_whitespace()
            .map(|w| table.and_then(|t| t.get(w)).map(String::as_str).unwrap_or(w))
            .collect();
        Ok(words.join(" "))
    }
}

fn request_rng(seed: u64, request_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(request_id.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Echo with each token dropped independently with probability `rate`,
/// deterministically per request.
#[derive(Debug, Clone, Copy)]
pub struct DropoutProvider {
    pub rate: f64,
    pub seed: u64,
}

impl TranslationProvider for DropoutProvider {
    fn name(&self) -> &str {
        "dropout"
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, ProviderError> {
        let mut rng = request_rng(self.seed, &request.request_id);
        let kept: Vec<&str> = request.text.split_whitespace().filter(|_| !rng.gen_bool(self.rate)).collect();
        if kept.is_empty() {
            // keep at least one token so the output is never blank
            Ok(request.text.split_whitespace().next().unwrap_or_default().to_string())
        } else {
            Ok(kept.join(" "))
        }
    }
}

/// Returns a known reference translation verbatim for one favoured
/// preamble. Every other preamble gets the reference reversed with every
/// `(id + 1)`-th token dropped, so it loses at all n-gram orders. Unknown
/// sources are echoed.
#[derive(Debug, Clone, Default)]
pub struct ReferenceProvider {
    favored: u32,
    references: HashMap<(String, LanguageCode), String>,
}

impl ReferenceProvider {
    pub fn new(favored: u32) -> Self {
        ReferenceProvider { favored, references: HashMap::new() }
    }

    pub fn insert(&mut self, source: &str, target: LanguageCode, reference: &str) {
        self.references.insert((source.to_string(), target), reference.to_string());
    }
}

impl TranslationProvider for ReferenceProvider {
    fn name(&self) -> &str {
        "reference"
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, ProviderError> {
        let Some(reference) = self.references.get(&(request.text.clone(), request.target.clone())) else {
            return Ok(request.text.clone());
        };
        if request.preamble_id == self.favored {
            return Ok(reference.clone());
        }
        let step = request.preamble_id as usize + 1;
        let all = tokenize(reference, &request.target);
        let mut tokens: Vec<String> =
            all.iter().enumerate().filter(|(i, _)| i % step != 0).map(|(_, t)| t.clone()).collect();
        if tokens.is_empty() {
            tokens = all;
        }
        tokens.reverse();
        let sep = if request.target.script().is_unsegmented() { "" } else { " " };
        Ok(tokens.join(sep))
    }
}

#[derive(Debug, Clone, Copy)]
enum Fault {
    Transient(usize),
    Permanent,
}

/// Wraps a provider and fails scripted requests, matched by source text.
#[derive(Debug)]
pub struct FaultInjector<P> {
    inner: P,
    plan: HashMap<String, Fault>,
    seen: Mutex<HashMap<String, usize>>,
}

impl<P> FaultInjector<P> {
    pub fn new(inner: P) -> Self {
        FaultInjector { inner, plan: HashMap::new(), seen: Mutex::new(HashMap::new()) }
    }

    /// The first `failures` calls for `text` fail with a transport error.
    pub fn transient(mut self, text: &str, failures: usize) -> Self {
        self.plan.insert(text.to_string(), Fault::Transient(failures));
        self
    }

    /// Every call for `text` fails.
    pub fn permanent(mut self, text: &str) -> Self {
        self.plan.insert(text.to_string(), Fault::Permanent);
        self
    }

    pub fn calls_for(&self, text: &str) -> usize {
        self.seen.lock().unwrap().get(text).copied().unwrap_or(0)
    }
}

impl<P: TranslationProvider> TranslationProvider for FaultInjector<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, ProviderError> {
        let n = {
            let mut seen = self.seen.lock().unwrap();
            let n = seen.entry(request.text.clone()).or_insert(0);
            *n += 1;
            *n
        };
        match self.plan.get(&request.text) {
            Some(Fault::Transient(k)) if n <= *k => Err(ProviderError::Transport(format!("injected fault {n}/{k}"))),
            Some(Fault::Permanent) => Err(ProviderError::Transport("injected permanent fault".into())),
            _ => self.inner.translate(request),
        }
    }
}

/// Adds a fixed latency per call and records call and concurrency counts.
#[derive(Debug)]
pub struct Instrumented<P> {
    inner: P,
    delay: Duration,
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
}

impl<P> Instrumented<P> {
    pub fn new(inner: P, delay: Duration) -> Self {
        Instrumented {
            inner,
            delay,
            calls: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }
}

impl<P: TranslationProvider> TranslationProvider for Instrumented<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        let out = self.inner.translate(request);
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        out
    }
}
