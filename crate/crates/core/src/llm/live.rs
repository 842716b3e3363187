use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Backend, ModelProfile, RawSample, SampleError, SampleRequest, SamplingConfig};
use crate::promptkit::PromptBundle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    pub endpoint: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            max_retries: 4,
            backoff_ms: 1000,
            max_backoff_ms: 30_000,
            timeout_secs: 600,
        }
    }
}

/// Chat-completion client; one request per sample (`n = 1`).
pub struct LiveBackend {
    cfg: LiveConfig,
    key: String,
    agent: ureq::Agent,
}

enum Attempt {
    Done(RawSample),
    Retry(String, Option<Duration>),
    Fail(SampleError),
}

impl LiveBackend {
    /// Reads the key from `cfg.api_key_env`.
    pub fn from_env(cfg: LiveConfig) -> Result<Self, SampleError> {
        match std::env::var(&cfg.api_key_env) {
            Ok(k) if !k.trim().is_empty() => Ok(Self::with_key(cfg, k.trim().to_string())),
            _ => Err(SampleError::Terminal(format!("API key not set: export {}", cfg.api_key_env))),
        }
    }

    pub fn with_key(cfg: LiveConfig, key: String) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        LiveBackend { cfg, key, agent }
    }

    fn backoff(&self, attempt: u32, hint: Option<Duration>) -> Duration {
        let exp = self.cfg.backoff_ms.saturating_mul(1u64 << attempt.min(16));
        let d = Duration::from_millis(exp.min(self.cfg.max_backoff_ms));
        hint.map_or(d, |h| h.min(Duration::from_millis(self.cfg.max_backoff_ms)).max(d))
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let resp = self
            .agent
            .post(&self.cfg.endpoint)
            .header("Authorization", &format!("Bearer {}", self.key))
            .send_json(body);
        let mut resp = match resp {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(format!("transport: {e}"), None),
        };
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body: {e}"), None),
        };
        match status {
            200 => match parse_response(&text) {
                Ok(raw) => Attempt::Done(raw),
                Err(e) => Attempt::Retry(e, None),
            },
            401 | 403 | 404 => Attempt::Fail(SampleError::Terminal(format!("HTTP {status}: {}", provider_message(&text)))),
            429 if text.contains("insufficient_quota") => {
                Attempt::Fail(SampleError::Terminal(format!("HTTP 429: {}", provider_message(&text))))
            }
            408 | 409 | 429 | 500..=599 => Attempt::Retry(format!("HTTP {status}: {}", provider_message(&text)), retry_after),
            _ => Attempt::Fail(SampleError::Failed(format!("HTTP {status}: {}", provider_message(&text)))),
        }
    }
}

/// The JSON body for one sample.
pub fn request_body(bundle: &PromptBundle, profile: &ModelProfile, cfg: &SamplingConfig) -> Value {
    let mut body = json!({
        "model": profile.model_id,
        "messages": [{ "role": "user", "content": bundle.text }],
        "n": 1,
    });
    if let Some((t, p)) = cfg.wire_params(profile) {
        body["temperature"] = json!(t);
        body["top_p"] = json!(p);
    }
    body
}

fn provider_message(text: &str) -> String {
    serde_json::from_str::<Value>(text)
        .ok()
        .and_then(|v| v.pointer("/error/message").and_then(Value::as_str).map(str::to_string))
        .unwrap_or_else(|| text.chars().take(300).collect())
}

/// Extracts text and usage from a chat-completion reply.
pub fn parse_response(text: &str) -> Result<RawSample, String> {
    let v: Value = serde_json::from_str(text).map_err(|e| format!("malformed response: {e}"))?;
    let content = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| "response has no choices[0].message.content".to_string())?;
    let num = |p: &str| v.pointer(p).and_then(Value::as_u64);
    Ok(RawSample {
        text: content.to_string(),
        tokens_in: num("/usage/prompt_tokens").unwrap_or(0),
        tokens_out: num("/usage/completion_tokens").unwrap_or(0),
        reasoning_tokens: num("/usage/completion_tokens_details/reasoning_tokens"),
        cost_usd: None,
        failure: None,
    })
}

impl Backend for LiveBackend {
    fn name(&self) -> String {
        format!("live:{}", self.cfg.endpoint)
    }

    fn sample(&self, req: &SampleRequest<'_>) -> Result<RawSample, SampleError> {
        let body = request_body(req.bundle, req.profile, req.cfg);
        let mut last = String::new();
        for attempt in 0..=self.cfg.max_retries {
            match self.attempt(&body) {
                Attempt::Done(raw) => return Ok(raw),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(msg, hint) => {
                    log::warn!("{}: attempt {} failed: {msg}", req.key(), attempt + 1);
                    last = msg;
                    if attempt < self.cfg.max_retries {
                        std::thread::sleep(self.backoff(attempt, hint));
                    }
                }
            }
        }
        Err(SampleError::Failed(format!("gave up after {} attempts: {last}", self.cfg.max_retries + 1)))
    }
}
