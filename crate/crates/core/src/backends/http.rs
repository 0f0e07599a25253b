//! Generic JSON-over-HTTP backend.
//!
//! Every call is a `POST` to one endpoint. Request body:
//!
//! ```json
//! {
//!   "session_id": "dec-…",
//!   "operation": "describe" | "transform" | "generate" | "regenerate",
//!   "task": "word_select" | "word_compress" | "word_decompress" | "reflect_compare",
//!   "messages": [{"role": "user" | "assistant", "content": "…", "image": "<hash>"}],
//!   "image_png_base64": "…"
//! }
//! ```
//!
//! `task` is present only for `transform`; `image_png_base64` only when the
//! operation needs an input image. `messages` is the full session history
//! followed by the new user message, so a stateless service can still honour
//! session semantics.
//!
//! Responses are `{"output": {"text": "…"}}` for describe/transform and
//! `{"output": {"image_png_base64": "…"}}` for generate/regenerate. A refusal
//! is HTTP 422 or `{"error": {"code": "content_refused", "message": "…"}}`.

use std::env;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde_json::{json, Value};

use super::retry::{RetryPolicy, Sleeper, ThreadSleeper};
use super::{
    edit_target, render_generate, render_regenerate, require_nonempty, Backend, BackendCapabilities, BackendError,
    BackendSession, ImageRef, TextTask,
};

pub const ENV_API_URL: &str = "SEMCODEC_API_URL";
pub const ENV_API_KEY: &str = "SEMCODEC_API_KEY";
pub const ENV_BACKEND: &str = "SEMCODEC_BACKEND";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportResponse {
    pub status: u16,
    pub retry_after: Option<Duration>,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("transport error: {0}")]
pub struct TransportError(pub String);

/// Sends one JSON request. No retries at this layer.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, api_key: Option<&str>, body: &Value) -> Result<TransportResponse, TransportError>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new(timeout: Duration) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for ReqwestTransport {
    fn post_json(&self, url: &str, api_key: Option<&str>, body: &Value) -> Result<TransportResponse, TransportError> {
        let mut req = self.client.post(url).json(body);
        if let Some(key) = api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let body = resp.text().map_err(|e| TransportError(e.to_string()))?;
        Ok(TransportResponse {
            status,
            retry_after,
            body,
        })
    }
}

fn lookup<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(value, |v, key| v.get(key))
}

/// Returns the string at dotted `path`, or `MalformedResponse` naming it.
pub(crate) fn require_str<'a>(value: &'a Value, path: &str) -> Result<&'a str, BackendError> {
    lookup(value, path)
        .and_then(Value::as_str)
        .ok_or_else(|| BackendError::MalformedResponse { field: path.to_string() })
}

fn refusal(status: u16, body: &Value) -> Option<String> {
    let code = lookup(body, "error.code").and_then(Value::as_str);
    if status == 422 || code == Some("content_refused") {
        let message = lookup(body, "error.message").and_then(Value::as_str).unwrap_or("refused by provider");
        return Some(message.to_string());
    }
    None
}

/// One logical call with bounded exponential backoff.
///
/// Retries transport failures, 408, 429 and 5xx up to `retry.max_attempts`
/// total attempts. A successful response must be JSON containing a string at
/// every path in `required`.
pub fn http_call(
    transport: &dyn Transport,
    sleeper: &dyn Sleeper,
    endpoint: &str,
    api_key: Option<&str>,
    request: &Value,
    retry: &RetryPolicy,
    required: &[&str],
) -> Result<Value, BackendError> {
    let attempts = retry.max_attempts.max(1);
    let mut last_failure = BackendError::BackendUnavailable {
        attempts: 0,
        reason: "no attempt made".into(),
    };
    for attempt in 0..attempts {
        if attempt > 0 {
            let wait = match &last_failure {
                BackendError::RateLimited { retry_after: Some(d) } => *d,
                _ => retry.delay(attempt - 1),
            };
            sleeper.sleep(wait);
        }
        let resp = match transport.post_json(endpoint, api_key, request) {
            Ok(r) => r,
            Err(e) => {
                last_failure = BackendError::BackendUnavailable {
                    attempts: attempt + 1,
                    reason: e.to_string(),
                };
                continue;
            }
        };
        match resp.status {
            200..=299 => {
                let value: Value =
                    serde_json::from_str(&resp.body).map_err(|_| BackendError::MalformedResponse { field: "$".into() })?;
                for path in required {
                    require_str(&value, path)?;
                }
                return Ok(value);
            }
            429 => {
                last_failure = BackendError::RateLimited {
                    retry_after: resp.retry_after,
                };
            }
            408 | 500..=599 => {
                last_failure = BackendError::BackendUnavailable {
                    attempts: attempt + 1,
                    reason: format!("HTTP {}", resp.status),
                };
            }
            status => {
                let body: Value = serde_json::from_str(&resp.body).unwrap_or(Value::Null);
                if let Some(msg) = refusal(status, &body) {
                    return Err(BackendError::ContentRefused(msg));
                }
                return Err(BackendError::InvalidRequest(format!("HTTP {status}: {}", resp.body)));
            }
        }
    }
    Err(match last_failure {
        BackendError::BackendUnavailable { reason, .. } => BackendError::BackendUnavailable { attempts, reason },
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub endpoint: String,
    /// Never serialized; only ever read from the environment or set in code.
    pub api_key: Option<String>,
    pub retry: RetryPolicy,
    pub timeout: Duration,
    pub supports_session_edit: bool,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: None,
            retry: RetryPolicy::default(),
            timeout: Duration::from_secs(300),
            supports_session_edit: true,
        }
    }

    /// Reads `SEMCODEC_API_URL` (required) and `SEMCODEC_API_KEY`.
    pub fn from_env() -> Result<Self, BackendError> {
        let endpoint = env::var(ENV_API_URL)
            .map_err(|_| BackendError::InvalidRequest(format!("{ENV_API_URL} is not set")))?;
        let mut cfg = Self::new(endpoint);
        cfg.api_key = env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        Ok(cfg)
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    transport: Box<dyn Transport>,
    sleeper: Box<dyn Sleeper>,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        let transport = ReqwestTransport::new(config.timeout).map_err(|e| BackendError::BackendUnavailable {
            attempts: 0,
            reason: e.to_string(),
        })?;
        Ok(Self::with_transport(config, Box::new(transport), Box::new(ThreadSleeper)))
    }

    pub fn with_transport(config: HttpConfig, transport: Box<dyn Transport>, sleeper: Box<dyn Sleeper>) -> Self {
        Self {
            config,
            transport,
            sleeper,
        }
    }

    fn request(&self, session: &BackendSession, operation: &str, content: &str, image: Option<&ImageRef>) -> Value {
        let mut messages: Vec<Value> = session.history().iter().map(|m| json!(m)).collect();
        let mut user = json!({"role": "user", "content": content});
        if let Some(img) = image {
            user["image"] = json!(img.content_hash());
        }
        messages.push(user);
        json!({
            "session_id": session.id(),
            "operation": operation,
            "messages": messages,
        })
    }

    fn attach_image(request: &mut Value, image: &ImageRef) -> Result<(), BackendError> {
        let png = image.to_png_bytes().map_err(|e| BackendError::Image(e.to_string()))?;
        request["image_png_base64"] = json!(BASE64.encode(png));
        Ok(())
    }

    fn call(&self, request: &Value, field: &str) -> Result<Value, BackendError> {
        http_call(
            self.transport.as_ref(),
            self.sleeper.as_ref(),
            &self.config.endpoint,
            self.config.api_key.as_deref(),
            request,
            &self.config.retry,
            &[field],
        )
    }

    fn call_image(&self, request: &Value) -> Result<ImageRef, BackendError> {
        const FIELD: &str = "output.image_png_base64";
        let value = self.call(request, FIELD)?;
        let encoded = require_str(&value, FIELD)?;
        let bytes = BASE64
            .decode(encoded)
            .map_err(|_| BackendError::MalformedResponse { field: FIELD.into() })?;
        ImageRef::from_encoded(&bytes).map_err(|_| BackendError::MalformedResponse { field: FIELD.into() })
    }

    fn call_text(&self, request: &Value) -> Result<String, BackendError> {
        const FIELD: &str = "output.text";
        let value = self.call(request, FIELD)?;
        Ok(require_str(&value, FIELD)?.to_string())
    }
}

impl Backend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn capabilities(&self) -> BackendCapabilities {
        BackendCapabilities {
            supports_session_edit: self.config.supports_session_edit,
        }
    }

    fn describe(&self, session: &mut BackendSession, image: &ImageRef, prompt: &str) -> Result<String, BackendError> {
        require_nonempty("describe prompt", prompt)?;
        let mut req = self.request(session, "describe", prompt, Some(image));
        Self::attach_image(&mut req, image)?;
        let text = self.call_text(&req)?;
        session.push_user(prompt, Some(image));
        session.push_assistant_text(text.clone());
        Ok(text)
    }

    fn transform(
        &self,
        session: &mut BackendSession,
        task: &TextTask,
        instruction: &str,
        payload: &str,
    ) -> Result<String, BackendError> {
        require_nonempty("instruction", instruction)?;
        require_nonempty("payload", payload)?;
        let content = task.render(instruction, payload);
        let mut req = self.request(session, "transform", &content, None);
        req["task"] = json!(task.name());
        let text = self.call_text(&req)?;
        session.push_user(content, None);
        session.push_assistant_text(text.clone());
        Ok(text)
    }

    fn generate(
        &self,
        session: &mut BackendSession,
        instruction: &str,
        description: &str,
    ) -> Result<ImageRef, BackendError> {
        require_nonempty("generate instruction", instruction)?;
        require_nonempty("description", description)?;
        let content = render_generate(instruction, description);
        let req = self.request(session, "generate", &content, None);
        let image = self.call_image(&req)?;
        session.push_user(content, None);
        session.push_assistant_image(image.clone());
        Ok(image)
    }

    fn regenerate(&self, session: &mut BackendSession, instruction: &str, edit: &str) -> Result<ImageRef, BackendError> {
        let previous = edit_target(self.capabilities(), session)?;
        require_nonempty("regenerate instruction", instruction)?;
        let content = render_regenerate(instruction, edit);
        let mut req = self.request(session, "regenerate", &content, Some(&previous));
        Self::attach_image(&mut req, &previous)?;
        let image = self.call_image(&req)?;
        session.push_user(content, None);
        session.push_assistant_image(image.clone());
        Ok(image)
    }
}
