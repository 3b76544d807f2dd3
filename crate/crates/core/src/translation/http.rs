//! Chat-completion style HTTP provider.
//!
//! Request body:
//! ```json
//! {"model": "<model>", "temperature": 0.0,
//!  "messages": [{"role": "user", "content": "<rendered prompt>"}]}
//! ```
//! Expected response: `{"choices": [{"message": {"content": "<text>"}}]}`.
//! The translation is pulled out of `content` with
//! [`crate::prompt_eval::extract_translation`].

use std::num::NonZeroU32;
use std::time::Duration;

use governor::clock::{Clock, DefaultClock};
use governor::{DefaultDirectRateLimiter, Quota, RateLimiter};
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ProviderError, TranslationProvider, TranslationRequest};
use crate::prompt_eval::extract_translation;

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "LF_PROVIDER_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpProviderConfig {
    pub base_url: String,
    pub model: String,
    pub timeout_secs: u64,
    /// Token-bucket rate shared by every worker using this provider.
    pub requests_per_second: u32,
    pub burst: u32,
}

impl Default for HttpProviderConfig {
    fn default() -> Self {
        HttpProviderConfig {
            base_url: "http://localhost:8000/v1".into(),
            model: "aya-23-35b".into(),
            timeout_secs: 120,
            requests_per_second: 4,
            burst: 4,
        }
    }
}

pub struct HttpProvider {
    client: Client,
    endpoint: String,
    model: String,
    api_key: Option<String>,
    limiter: DefaultDirectRateLimiter,
}

impl HttpProvider {
    /// Reads the API key from `LF_PROVIDER_API_KEY` if set.
    pub fn from_env(config: &HttpProviderConfig) -> Result<Self, ProviderError> {
        Self::new(config, std::env::var(API_KEY_ENV).ok())
    }

    pub fn new(config: &HttpProviderConfig, api_key: Option<String>) -> Result<Self, ProviderError> {
        let client = Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let rate = NonZeroU32::new(config.requests_per_second.max(1)).unwrap();
        let burst = NonZeroU32::new(config.burst.max(1)).unwrap();
        Ok(HttpProvider {
            client,
            endpoint: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            model: config.model.clone(),
            api_key,
            limiter: RateLimiter::direct(Quota::per_second(rate).allow_burst(burst)),
        })
    }

    fn wait_for_slot(&self) {
        let clock = DefaultClock::default();
        while let Err(not_until) = self.limiter.check() {
            std::thread::sleep(not_until.wait_time_from(clock.now()));
        }
    }
}

fn retry_after(headers: &reqwest::header::HeaderMap) -> Option<Duration> {
    headers
        .get(reqwest::header::RETRY_AFTER)?
        .to_str()
        .ok()?
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|s| s.is_finite() && *s >= 0.0)
        .map(Duration::from_secs_f64)
}

impl TranslationProvider for HttpProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, ProviderError> {
        self.wait_for_slot();
        let body = json!({
            "model": self.model,
            "temperature": 0.0,
            "messages": [{"role": "user", "content": request.prompt}],
        });
        let mut call = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            call = call.bearer_auth(key);
        }
        let response = call.send().map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Transport(e.to_string())
            }
        })?;

        let status = response.status();
        match status {
            StatusCode::TOO_MANY_REQUESTS => {
                return Err(ProviderError::RateLimited { retry_after: retry_after(response.headers()) })
            }
            StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => {
                return Err(ProviderError::AuthFailure(format!("HTTP {status}")))
            }
            StatusCode::REQUEST_TIMEOUT | StatusCode::GATEWAY_TIMEOUT => return Err(ProviderError::Timeout),
            s if !s.is_success() => return Err(ProviderError::Transport(format!("HTTP {status}"))),
            _ => {}
        }

        let raw = response.text().map_err(|e| ProviderError::Transport(e.to_string()))?;
        if raw.trim().is_empty() {
            return Err(ProviderError::EmptyTranslation);
        }
        let parsed: Value = serde_json::from_str(&raw).map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
        let content = parsed
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| ProviderError::MalformedResponse("missing choices[0].message.content".into()))?;
        let text = extract_translation(content);
        if text.is_empty() {
            Err(ProviderError::EmptyTranslation)
        } else {
            Ok(text)
        }
    }
}
