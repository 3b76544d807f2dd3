use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ProviderError, TranslationProvider, TranslationRequest, TranslationResult};
use crate::hashing::sha256_hex;

/// Exponential backoff with full jitter. The jitter stream is seeded from
/// the request id so retries are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, base_delay_ms: 1000, max_delay_ms: 60_000 }
    }
}

impl RetryPolicy {
    /// No waiting between attempts.
    pub fn immediate(max_attempts: u32) -> Self {
        RetryPolicy { max_attempts, base_delay_ms: 0, max_delay_ms: 0 }
    }

    /// Delay before attempt `attempt + 1`, after `attempt` failures.
    pub fn backoff(&self, attempt: u32, request_id: &str) -> Duration {
        let cap = self.base_delay_ms.saturating_mul(1u64 << (attempt.saturating_sub(1)).min(32)).min(self.max_delay_ms);
        if cap == 0 {
            return Duration::ZERO;
        }
        let seed: [u8; 32] = Sha256::digest(request_id.as_bytes()).into();
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(attempt as u64);
        Duration::from_millis(rng.gen_range(0..=cap))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum AttemptOutcome {
    Ok { response_hash: String },
    Error { kind: String, message: String },
}

/// One provider attempt, as written to the debug log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub request_id: String,
    pub source: String,
    pub target: String,
    pub attempt: u32,
    pub latency_ms: f64,
    #[serde(flatten)]
    pub outcome: AttemptOutcome,
}

/// Calls `provider` until it succeeds, returns a non-retryable error, or
/// the policy's attempts are exhausted. Every attempt is reported to
/// `observer`.
pub fn call_with_retry(
    provider: &dyn TranslationProvider,
    request: &TranslationRequest,
    policy: &RetryPolicy,
    observer: &mut dyn FnMut(AttemptRecord),
) -> Result<TranslationResult, ProviderError> {
    let max = policy.max_attempts.max(1);
    let mut attempt = 0;
    loop {
        attempt += 1;
        let started = Instant::now();
        let outcome = provider.translate(request).and_then(|text| {
            if text.trim().is_empty() {
                Err(ProviderError::EmptyTranslation)
            } else {
                Ok(text)
            }
        });
        let latency_ms = started.elapsed().as_secs_f64() * 1e3;
        let record = |outcome| AttemptRecord {
            request_id: request.request_id.clone(),
            source: request.source.to_string(),
            target: request.target.to_string(),
            attempt,
            latency_ms,
            outcome,
        };
        match outcome {
            Ok(text) => {
                // truncated hash keeps the log small
                let response_hash = sha256_hex(text.as_bytes())[..16].to_string();
                observer(record(AttemptOutcome::Ok { response_hash }));
                return Ok(TranslationResult { text, provider_name: provider.name().to_string(), latency_ms, attempt });
            }
            Err(err) => {
                observer(record(AttemptOutcome::Error { kind: err.kind().into(), message: err.to_string() }));
                if attempt >= max || !err.is_retryable() {
                    return Err(err);
                }
                let wait = match &err {
                    ProviderError::RateLimited { retry_after: Some(after) } => *after,
                    _ => policy.backoff(attempt, &request.request_id),
                };
                if !wait.is_zero() {
                    log::debug!("retrying {} in {wait:?} after {err}", request.request_id);
                    std::thread::sleep(wait);
                }
            }
        }
    }
}
