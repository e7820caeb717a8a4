//! Model client contract, retries, and response extraction.
//!
//! Every network call the pipeline makes to a generation model goes through a
//! [`ModelClient`]. Adapters: [`http::ChatClient`] for OpenAI-compatible chat
//! endpoints, [`mock::MockClient`] for offline runs, and the transcript
//! [`transcript::RecordingClient`] / [`transcript::ReplayClient`] pair.

pub mod extract;
pub mod http;
pub mod mock;
pub mod transcript;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{estimate_tokens, Prompt};

pub use extract::extract_source;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("request timed out")]
    Timeout,
    #[error("provider error: {message}")]
    ProviderError { message: String, retryable: bool },
    #[error("prompt needs ~{estimate} tokens, max_tokens is {max_tokens}")]
    BudgetExceeded { estimate: usize, max_tokens: usize },
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
}

impl LlmError {
    pub fn provider(message: impl Into<String>) -> Self {
        LlmError::ProviderError {
            message: message.into(),
            retryable: false,
        }
    }

    pub fn is_transient(&self) -> bool {
        match self {
            LlmError::RateLimited(_) | LlmError::Timeout => true,
            LlmError::ProviderError { retryable, .. } => *retryable,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: usize,
    pub seed: u64,
    pub model_id: String,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.1,
            top_p: 0.9,
            max_tokens: 10_000,
            seed: 42,
            model_id: "mock".into(),
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature >= 0.0) {
            return Err(LlmError::InvalidParams(format!("temperature {}", self.temperature)));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(LlmError::InvalidParams(format!("top_p {}", self.top_p)));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidParams("max_tokens must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: usize,
    pub completion_tokens: usize,
}

/// One completion as returned by an adapter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generation {
    pub text: String,
    /// Provider-reported usage, when available.
    pub usage: Option<Usage>,
}

impl From<String> for Generation {
    fn from(text: String) -> Self {
        Generation { text, usage: None }
    }
}

pub trait ModelClient: Send + Sync {
    /// Sends one prompt. Implementations must not retry on their own.
    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Generation, LlmError>;
}

#[derive(Debug, Clone)]
pub struct ModelResponse {
    pub raw_text: String,
    pub extracted_source: Option<String>,
    pub usage: Usage,
    pub latency: Duration,
    pub retries: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 500,
            max_delay_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_retries: u32) -> Self {
        RetryPolicy {
            max_retries,
            base_delay_ms: 0,
            max_delay_ms: 0,
        }
    }

    /// Wait before retry number `attempt` (1-based): base * 2^(attempt-1),
    /// capped.
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u64 << (attempt.saturating_sub(1)).min(20);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

/// Sends `prompt`, retrying transient failures with exponential backoff.
pub fn complete(
    prompt: &Prompt,
    params: &GenerationParams,
    client: &dyn ModelClient,
    retry: &RetryPolicy,
) -> Result<ModelResponse, LlmError> {
    params.validate()?;
    if prompt.token_estimate > params.max_tokens {
        return Err(LlmError::BudgetExceeded {
            estimate: prompt.token_estimate,
            max_tokens: params.max_tokens,
        });
    }
    let start = Instant::now();
    let mut retries = 0;
    let generation = loop {
        match client.generate(&prompt.text, params) {
            Ok(g) => break g,
            Err(e) if e.is_transient() && retries < retry.max_retries => {
                retries += 1;
                log::debug!("transient model error ({e}), retry {retries}");
                std::thread::sleep(retry.delay(retries));
            }
            Err(e) => return Err(e),
        }
    };
    let usage = generation.usage.unwrap_or(Usage {
        prompt_tokens: prompt.token_estimate,
        completion_tokens: estimate_tokens(&generation.text),
    });
    Ok(ModelResponse {
        extracted_source: extract_source(&generation.text),
        raw_text: generation.text,
        usage,
        latency: start.elapsed(),
        retries,
    })
}

#[cfg(test)]
mod tests {
    use super::mock::MockClient;
    use super::*;
    use crate::context::{build_bare_prompt, DEFAULT_TOKEN_CAP};

    #[test]
    fn echo_mock_returns_fixture() {
        let fixture = "int func0(void) {\n    return 0;\n}\n";
        let client = MockClient::constant(fixture);
        let p = build_bare_prompt("ret", DEFAULT_TOKEN_CAP).unwrap();
        let r = complete(&p, &GenerationParams::default(), &client, &RetryPolicy::no_delay(0)).unwrap();
        assert_eq!(r.raw_text, fixture);
        assert_eq!(r.extracted_source.as_deref(), Some(fixture));
        assert_eq!(r.retries, 0);
    }

    #[test]
    fn retries_then_succeeds() {
        let client = MockClient::scripted(vec![
            Err(LlmError::RateLimited("slow down".into())),
            Err(LlmError::Timeout),
            Ok("int f() { return 1; }".into()),
        ]);
        let p = build_bare_prompt("ret", DEFAULT_TOKEN_CAP).unwrap();
        let r = complete(&p, &GenerationParams::default(), &client, &RetryPolicy::no_delay(3)).unwrap();
        assert_eq!(r.retries, 2);
        assert_eq!(client.calls(), 3);
    }

    #[test]
    fn gives_up_after_limit() {
        let client = MockClient::scripted(vec![Err(LlmError::RateLimited("x".into())); 5]);
        let p = build_bare_prompt("ret", DEFAULT_TOKEN_CAP).unwrap();
        let r = complete(&p, &GenerationParams::default(), &client, &RetryPolicy::no_delay(3));
        assert!(matches!(r, Err(LlmError::RateLimited(_))));
        assert_eq!(client.calls(), 4);
    }

    #[test]
    fn permanent_errors_not_retried() {
        let client = MockClient::scripted(vec![Err(LlmError::AuthFailure("bad key".into()))]);
        let p = build_bare_prompt("ret", DEFAULT_TOKEN_CAP).unwrap();
        let r = complete(&p, &GenerationParams::default(), &client, &RetryPolicy::no_delay(3));
        assert!(matches!(r, Err(LlmError::AuthFailure(_))));
        assert_eq!(client.calls(), 1);
    }

    #[test]
    fn budget_guard() {
        let client = MockClient::constant("x");
        let p = build_bare_prompt("ret", DEFAULT_TOKEN_CAP).unwrap();
        let params = GenerationParams {
            max_tokens: 1,
            ..Default::default()
        };
        let r = complete(&p, &params, &client, &RetryPolicy::no_delay(0));
        assert!(matches!(r, Err(LlmError::BudgetExceeded { .. })));
        assert_eq!(client.calls(), 0);
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let r = RetryPolicy {
            max_retries: 5,
            base_delay_ms: 100,
            max_delay_ms: 350,
        };
        let d: Vec<u64> = (1..=4).map(|a| r.delay(a).as_millis() as u64).collect();
        assert_eq!(d, vec![100, 200, 350, 350]);
    }

    #[test]
    fn param_validation() {
        let mut p = GenerationParams::default();
        assert!(p.validate().is_ok());
        p.top_p = 0.0;
        assert!(p.validate().is_err());
        p.top_p = 1.0;
        p.temperature = -0.1;
        assert!(p.validate().is_err());
    }
}
