//! Machine-translation providers and the back-translation quality gate.

#[cfg(feature = "http")]
mod http;
pub mod mock;
mod retry;
mod verify;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::hash_fields;
use crate::language::LanguageCode;

#[cfg(feature = "http")]
pub use http::{HttpProvider, HttpProviderConfig, API_KEY_ENV};
pub use retry::{call_with_retry, AttemptOutcome, AttemptRecord, RetryPolicy};
pub use verify::{
    translate_with_verification, validate_output, ValidationConfig, ValidationIssue, Verdict, VerificationConfig,
    VerifiedTranslation, DEFAULT_THRESHOLD,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("rate limited (retry after {retry_after:?})")]
    RateLimited { retry_after: Option<Duration> },
    #[error("request timed out")]
    Timeout,
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("provider returned an empty translation")]
    EmptyTranslation,
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("transport error: {0}")]
    Transport(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        !matches!(self, ProviderError::AuthFailure(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ProviderError::RateLimited { .. } => "rate_limited",
            ProviderError::Timeout => "timeout",
            ProviderError::MalformedResponse(_) => "malformed_response",
            ProviderError::EmptyTranslation => "empty_translation",
            ProviderError::AuthFailure(_) => "auth_failure",
            ProviderError::Transport(_) => "transport",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranslationError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("back-translation failed: {cause}")]
    VerificationUnavailable { forward: TranslationResult, cause: ProviderError },
}

/// One translation call. `request_id` is a stable content hash of
/// `(text, source, target, preamble_id)`; the rendered prompt is carried
/// along but does not contribute to the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationRequest {
    pub text: String,
    pub source: LanguageCode,
    pub target: LanguageCode,
    pub preamble_id: u32,
    pub request_id: String,
    pub prompt: String,
}

impl TranslationRequest {
    pub fn new(
        text: impl Into<String>,
        source: LanguageCode,
        target: LanguageCode,
        preamble_id: u32,
        prompt: impl Into<String>,
    ) -> Result<Self, TranslationError> {
        if source == target {
            return Err(TranslationError::InvalidRequest(format!("source and target are both {source}")));
        }
        let text = text.into();
        let request_id = request_id(&text, &source, &target, preamble_id);
        Ok(TranslationRequest { text, source, target, preamble_id, request_id, prompt: prompt.into() })
    }
}

pub fn request_id(text: &str, source: &LanguageCode, target: &LanguageCode, preamble_id: u32) -> String {
    hash_fields([
        text.as_bytes(),
        source.as_str().as_bytes(),
        target.as_str().as_bytes(),
        preamble_id.to_string().as_bytes(),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationResult {
    pub text: String,
    pub provider_name: String,
    pub latency_ms: f64,
    pub attempt: u32,
}

/// A machine-translation backend. Implementations must tolerate
/// concurrent calls.
pub trait TranslationProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Returns the translated text only; latency and attempt numbers are
    /// recorded by [`call_with_retry`].
    fn translate(&self, request: &TranslationRequest) -> Result<String, ProviderError>;
}

impl<P: TranslationProvider + ?Sized> TranslationProvider for std::sync::Arc<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, ProviderError> {
        (**self).translate(request)
    }
}

impl<P: TranslationProvider + ?Sized> TranslationProvider for &P {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, ProviderError> {
        (**self).translate(request)
    }
}
