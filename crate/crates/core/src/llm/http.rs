//! Adapter for OpenAI-compatible chat completion endpoints.
//!
//! The credential is read from the environment variable named by
//! [`ChatClientConfig::api_key_env`] (default `DECOMP_LLM_API_KEY`) when the
//! client is created, so a missing key fails before any request is sent. The
//! seed is sent as the `seed` field; providers that ignore it make runs
//! non-reproducible, which is why transcripts exist.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Generation, GenerationParams, LlmError, ModelClient, Usage};

pub const DEFAULT_API_KEY_ENV: &str = "DECOMP_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChatClientConfig {
    /// Full URL of the chat completions endpoint.
    pub endpoint: String,
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
}

impl Default for ChatClientConfig {
    fn default() -> Self {
        ChatClientConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_secs: 300,
            max_in_flight: 8,
        }
    }
}

struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

impl Gate {
    fn enter(&self) -> GateGuard<'_> {
        let mut n = self.in_flight.lock().expect("gate lock");
        while *n >= self.limit {
            n = self.freed.wait(n).expect("gate lock");
        }
        *n += 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().expect("gate lock") -= 1;
        self.0.freed.notify_one();
    }
}

pub struct ChatClient {
    endpoint: String,
    api_key: String,
    http: reqwest::blocking::Client,
    gate: Gate,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

impl ChatClient {
    pub fn new(cfg: &ChatClientConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(&cfg.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| LlmError::AuthFailure(format!("environment variable {} is not set", cfg.api_key_env)))?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| LlmError::provider(e.to_string()))?;
        Ok(ChatClient {
            endpoint: cfg.endpoint.clone(),
            api_key,
            http,
            gate: Gate {
                in_flight: Mutex::new(0),
                freed: Condvar::new(),
                limit: cfg.max_in_flight.max(1),
            },
        })
    }
}

fn status_error(status: reqwest::StatusCode, body: String) -> LlmError {
    match status.as_u16() {
        401 | 403 => LlmError::AuthFailure(body),
        429 => LlmError::RateLimited(body),
        408 | 504 => LlmError::Timeout,
        s => LlmError::ProviderError {
            message: format!("HTTP {s}: {body}"),
            retryable: status.is_server_error(),
        },
    }
}

impl ModelClient for ChatClient {
    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Generation, LlmError> {
        let body = json!({
            "model": params.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
            "seed": params.seed,
        });
        let _slot = self.gate.enter();
        let resp = self
            .http
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    LlmError::Timeout
                } else {
                    LlmError::ProviderError {
                        message: e.to_string(),
                        retryable: e.is_connect(),
                    }
                }
            })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(status_error(status, resp.text().unwrap_or_default()));
        }
        let parsed: ChatResponse = resp
            .json()
            .map_err(|e| LlmError::provider(format!("bad response body: {e}")))?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::provider("response has no message content"))?;
        Ok(Generation {
            text,
            usage: parsed.usage,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn serve_once(status: &str, body: &str) -> (String, std::thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let reply = format!(
            "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        );
        let handle = std::thread::spawn(move || {
            let (mut sock, _) = listener.accept().unwrap();
            let mut req = Vec::new();
            let mut buf = [0u8; 4096];
            loop {
                let n = sock.read(&mut buf).unwrap();
                req.extend_from_slice(&buf[..n]);
                let text = String::from_utf8_lossy(&req);
                if let Some(h) = text.find("\r\n\r\n") {
                    let len = text[..h]
                        .lines()
                        .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                        .unwrap_or(0);
                    if req.len() >= h + 4 + len {
                        break;
                    }
                }
                if n == 0 {
                    break;
                }
            }
            sock.write_all(reply.as_bytes()).unwrap();
            String::from_utf8_lossy(&req).into_owned()
        });
        (url, handle)
    }

    fn client(url: &str, env: &str) -> ChatClient {
        std::env::set_var(env, "test-key");
        ChatClient::new(&ChatClientConfig {
            endpoint: url.into(),
            api_key_env: env.into(),
            timeout_secs: 10,
            max_in_flight: 2,
        })
        .unwrap()
    }

    #[test]
    fn missing_key_fails_early() {
        let r = ChatClient::new(&ChatClientConfig {
            endpoint: "http://127.0.0.1:9/never".into(),
            api_key_env: "CTXDECOMP_TEST_UNSET_KEY".into(),
            ..Default::default()
        });
        assert!(matches!(r, Err(LlmError::AuthFailure(_))));
    }

    #[test]
    fn sends_params_and_reads_content() {
        let (url, server) = serve_once(
            "200 OK",
            r#"{"choices":[{"message":{"role":"assistant","content":"int f() { }"}}],"usage":{"prompt_tokens":12,"completion_tokens":5}}"#,
        );
        let c = client(&url, "CTXDECOMP_TEST_KEY_A");
        let g = c.generate("hello", &GenerationParams::default()).unwrap();
        assert_eq!(g.text, "int f() { }");
        assert_eq!(
            g.usage,
            Some(Usage {
                prompt_tokens: 12,
                completion_tokens: 5
            })
        );
        let req = server.join().unwrap();
        assert!(req.contains("authorization: Bearer test-key") || req.contains("Authorization: Bearer test-key"));
        let body: serde_json::Value = serde_json::from_str(&req[req.find("\r\n\r\n").unwrap() + 4..]).unwrap();
        assert_eq!(body["temperature"], 0.1);
        assert_eq!(body["top_p"], 0.9);
        assert_eq!(body["seed"], 42);
        assert_eq!(body["messages"][0]["content"], "hello");
    }

    #[test]
    fn status_mapping() {
        let (url, server) = serve_once("429 Too Many Requests", r#"{"error":"slow"}"#);
        let c = client(&url, "CTXDECOMP_TEST_KEY_B");
        let r = c.generate("x", &GenerationParams::default());
        assert!(matches!(r, Err(LlmError::RateLimited(_))));
        server.join().unwrap();
        assert!(matches!(
            status_error(reqwest::StatusCode::UNAUTHORIZED, String::new()),
            LlmError::AuthFailure(_)
        ));
        assert!(status_error(reqwest::StatusCode::BAD_GATEWAY, String::new()).is_transient());
        assert!(!status_error(reqwest::StatusCode::BAD_REQUEST, String::new()).is_transient());
    }
}
