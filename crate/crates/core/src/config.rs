//! Run configuration file.
//!
//! ```toml
//! run_id = "demo"
//! input = "data/pretrain.json"     # relative paths resolve against this file
//! output_dir = "runs"
//! languages = ["zh", "fr", "es", "ru", "hi", "ja", "ar"]
//! preamble = "preambles/preamble6.toml"   # optional, built-in template otherwise
//! threshold = 0.3
//! parallelism = 8
//! checkpoint_every = 100
//! blocklist = "blocklist.txt"      # optional
//! seed = 0
//!
//! [provider]
//! kind = "http"                    # echo | tagging | dictionary | http
//! base_url = "http://localhost:8000/v1"
//! model = "aya-23-35b"
//!
//! [retry]
//! max_attempts = 3
//!
//! [validation]
//! length_ratio = [0.3, 3.0]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::corpus::dataset_stem;
use crate::language::LanguageCode;
use crate::pipeline::{BlocklistFilter, RunSpec};
use crate::prompt_eval::{PreambleTemplate, PromptError};
use crate::translation::mock::{DictionaryProvider, EchoProvider, TaggingProvider};
#[cfg(feature = "http")]
use crate::translation::{HttpProvider, HttpProviderConfig};
use crate::translation::{RetryPolicy, TranslationProvider, ValidationConfig, VerificationConfig, DEFAULT_THRESHOLD};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Preamble(#[from] PromptError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProviderSettings {
    /// Returns its input; for dry runs.
    Echo,
    /// Deterministic language-tagging mock.
    Tagging,
    /// Word-for-word lookup from a JSON dictionary file.
    Dictionary { path: PathBuf },
    #[cfg(feature = "http")]
    Http(HttpProviderConfig),
}

impl ProviderSettings {
    /// Settings that affect translations, for the config hash.
    fn identity(&self) -> serde_json::Value {
        match self {
            ProviderSettings::Echo => json!({"kind": "echo"}),
            ProviderSettings::Tagging => json!({"kind": "tagging"}),
            ProviderSettings::Dictionary { path } => json!({"kind": "dictionary", "path": path}),
            #[cfg(feature = "http")]
            ProviderSettings::Http(c) => json!({"kind": "http", "base_url": c.base_url, "model": c.model}),
        }
    }

    pub fn build(&self) -> Result<Box<dyn TranslationProvider>, ConfigError> {
        Ok(match self {
            ProviderSettings::Echo => Box::new(EchoProvider),
            ProviderSettings::Tagging => Box::new(TaggingProvider),
            ProviderSettings::Dictionary { path } => Box::new(
                DictionaryProvider::from_json_file(path)
                    .map_err(|e| ConfigError::Read { path: path.clone(), message: e.to_string() })?,
            ),
            #[cfg(feature = "http")]
            ProviderSettings::Http(c) => {
                Box::new(HttpProvider::from_env(c).map_err(|e| ConfigError::Invalid(e.to_string()))?)
            }
        })
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}
fn default_languages() -> Vec<LanguageCode> {
    LanguageCode::default_targets()
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_parallelism() -> usize {
    8
}
fn default_checkpoint_every() -> usize {
    100
}
fn default_provider() -> ProviderSettings {
    ProviderSettings::Tagging
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run_id: String,
    pub input: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_languages")]
    pub languages: Vec<LanguageCode>,
    #[serde(default)]
    pub preamble: Option<PathBuf>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
    #[serde(default)]
    pub blocklist: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_provider")]
    pub provider: ProviderSettings,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default)]
    pub validation: ValidationConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.to_path_buf(), message: e.to_string() })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            ConfigError::Invalid(m) => ConfigError::Read { path: path.to_path_buf(), message: m },
            other => other,
        })
    }

    /// Parses TOML and resolves relative paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut self.input);
        resolve(&mut self.output_dir);
        if let Some(p) = self.preamble.as_mut() {
            resolve(p);
        }
        if let Some(p) = self.blocklist.as_mut() {
            resolve(p);
        }
        if let ProviderSettings::Dictionary { path } = &mut self.provider {
            resolve(path);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.run_id.is_empty() || !self.run_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return invalid(format!("run_id {:?} must be non-empty and use only [A-Za-z0-9._-]", self.run_id));
        }
        if self.run_id.starts_with('.') {
            return invalid(format!("run_id {:?} must not start with '.'", self.run_id));
        }
        if self.languages.is_empty() {
            return invalid("languages must name at least one target".into());
        }
        for (i, l) in self.languages.iter().enumerate() {
            if l.is_source() {
                return invalid("languages must not include the source language en".into());
            }
            if self.languages[..i].contains(l) {
                return invalid(format!("language {l} listed twice"));
            }
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return invalid(format!("threshold {} outside [0, 1]", self.threshold));
        }
        if self.parallelism == 0 {
            return invalid("parallelism must be at least 1".into());
        }
        if self.checkpoint_every == 0 {
            return invalid("checkpoint_every must be at least 1".into());
        }
        if self.retry.max_attempts == 0 {
            return invalid("retry.max_attempts must be at least 1".into());
        }
        if let Some([lo, hi]) = self.validation.length_ratio {
            if !(lo > 0.0 && lo <= hi) {
                return invalid(format!("validation.length_ratio [{lo}, {hi}] is not a positive range"));
            }
        }
        Ok(())
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(&self.run_id)
    }

    pub fn preamble_template(&self) -> Result<PreambleTemplate, ConfigError> {
        match &self.preamble {
            Some(p) => Ok(PreambleTemplate::load(p)?),
            None => Ok(PreambleTemplate::builtin()),
        }
    }

    pub fn content_filter(&self) -> Result<Option<BlocklistFilter>, ConfigError> {
        self.blocklist
            .as_ref()
            .map(|p| {
                BlocklistFilter::load(p).map_err(|e| ConfigError::Read { path: p.clone(), message: e.to_string() })
            })
            .transpose()
    }

    /// Resolves the preamble and blocklist into a pipeline spec.
    pub fn run_spec(&self) -> Result<RunSpec, ConfigError> {
        let filter = self.content_filter()?;
        Ok(RunSpec {
            run_id: self.run_id.clone(),
            seed: self.seed,
            targets: self.languages.clone(),
            preamble: self.preamble_template()?,
            verification: VerificationConfig {
                threshold: self.threshold,
                validation: self.validation.clone(),
                retry: self.retry.clone(),
            },
            parallelism: self.parallelism,
            checkpoint_every: self.checkpoint_every,
            dataset_stem: dataset_stem(&self.input),
            fingerprint: json!({"provider": self.provider.identity(), "blocklist": filter}),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}
