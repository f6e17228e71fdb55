//! Chat-completion client with constrained outputs.
//!
//! The client talks to a [`Backend`]: either an OpenAI-compatible HTTP server
//! ([`HttpBackend`]) or the scripted [`MockBackend`]. Constrained calls are
//! passed through natively when the backend supports guided decoding and are
//! always validated client-side, with a bounded repair loop on failure.

mod http;
mod mock;
pub mod schema;

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use http::HttpBackend;
pub use mock::{MockBackend, MockFixture, MockRule, Pick};
pub use schema::{discretization_schema, draft_schema, region_index_pattern, ConstraintSchema, JsonSchema, SchemaError};

pub const ENV_BACKEND_URL: &str = "BODYMAP_BACKEND_URL";
pub const ENV_MODEL: &str = "BODYMAP_MODEL";
pub const ENV_API_KEY: &str = "BODYMAP_API_KEY";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error("transport error talking to {url}: {message}")]
    Transport { url: String, message: String },
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    Protocol(String),
    #[error("mock backend: {0}")]
    Mock(String),
    #[error("no reply satisfied the {kind} constraint after {} attempts", candidates.len())]
    ConstraintExhausted { kind: &'static str, candidates: Vec<RejectedCandidate> },
}

/// A reply that failed validation, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedCandidate {
    pub reply: String,
    pub reason: String,
}

/// Connection and sampling settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub base_url: String,
    pub model: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub temperature: f64,
    pub top_p: f64,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    /// Forces native constraint pass-through on or off; `None` asks the
    /// backend.
    pub native_constraints: Option<bool>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            base_url: "http://localhost:8000/v1".into(),
            model: "default".into(),
            api_key: None,
            temperature: 0.6,
            top_p: 0.95,
            timeout_secs: 60,
            max_retries: 3,
            max_in_flight: 8,
            native_constraints: None,
        }
    }
}

impl BackendConfig {
    pub fn check(&self) -> Result<(), LlmError> {
        let bad = |m: String| Err(LlmError::Config(m));
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad(format!("top_p {} outside (0, 1]", self.top_p));
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1".into());
        }
        if self.timeout_secs == 0 {
            return bad("timeout must be positive".into());
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    /// Overlays `BODYMAP_BACKEND_URL`, `BODYMAP_MODEL` and `BODYMAP_API_KEY`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(v) = lookup(ENV_BACKEND_URL) {
            self.base_url = v;
        }
        if let Some(v) = lookup(ENV_MODEL) {
            self.model = v;
        }
        if let Some(v) = lookup(ENV_API_KEY) {
            self.api_key = Some(v);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

/// One chat-completion call as it goes over the wire.
#[derive(Debug, Clone)]
pub struct BackendRequest<'a> {
    pub model: &'a str,
    pub messages: &'a [ChatMessage],
    pub temperature: f64,
    pub top_p: f64,
    /// Constraint to pass through natively, if any.
    pub constraint: Option<&'a ConstraintSchema>,
}

impl BackendRequest<'_> {
    /// JSON body in the OpenAI chat-completions shape. Native constraints use
    /// the vLLM extension fields `guided_json`, `guided_regex` and
    /// `guided_choice`.
    pub fn to_wire(&self) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": self.messages,
            "temperature": self.temperature,
            "top_p": self.top_p,
        });
        let extra = match self.constraint {
            Some(ConstraintSchema::JsonSchema(s)) => Some(("guided_json", s.source().clone())),
            Some(ConstraintSchema::Pattern { source, .. }) => Some(("guided_regex", json!(source))),
            Some(ConstraintSchema::Enumeration(values)) => Some(("guided_choice", json!(values))),
            Some(ConstraintSchema::None) | None => None,
        };
        if let Some((key, value)) = extra {
            body[key] = value;
        }
        body
    }
}

/// Something that answers chat-completion requests.
pub trait Backend: Send + Sync {
    /// Whether the backend enforces constraints itself.
    fn native_constraints(&self) -> bool;

    fn complete(&self, request: &BackendRequest<'_>) -> Result<String, LlmError>;
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    ready: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn new(n: usize) -> Self {
        Slots { free: Mutex::new(n), ready: Condvar::new() }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.ready.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.ready.notify_one();
    }
}

/// Shareable client; cheap to clone.
#[derive(Clone)]
pub struct LlmClient {
    config: BackendConfig,
    backend: Arc<dyn Backend>,
    slots: Arc<Slots>,
}

impl std::fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmClient").field("config", &self.config).finish_non_exhaustive()
    }
}

impl LlmClient {
    pub fn new(config: BackendConfig, backend: Arc<dyn Backend>) -> Result<Self, LlmError> {
        config.check()?;
        let slots = Arc::new(Slots::new(config.max_in_flight));
        Ok(LlmClient { config, backend, slots })
    }

    /// Client for the HTTP backend described by `config`.
    pub fn http(config: BackendConfig) -> Result<Self, LlmError> {
        let backend = HttpBackend::new(&config)?;
        Self::new(config, Arc::new(backend))
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn uses_native(&self) -> bool {
        self.config.native_constraints.unwrap_or_else(|| self.backend.native_constraints())
    }

    fn send(&self, messages: &[ChatMessage], constraint: Option<&ConstraintSchema>) -> Result<String, LlmError> {
        let _slot = self.slots.acquire();
        let request = BackendRequest {
            model: &self.config.model,
            messages,
            temperature: self.config.temperature,
            top_p: self.config.top_p,
            constraint,
        };
        self.backend.complete(&request)
    }

    /// Unconstrained completion; failures are returned immediately.
    pub fn complete_freeform(&self, prompt: &str) -> Result<String, LlmError> {
        self.send(&[ChatMessage::user(prompt)], None)
    }

    /// Completion whose reply satisfies `schema`. Invalid replies are sent
    /// back with a correction note up to `max_retries` times.
    pub fn complete_constrained(&self, prompt: &str, schema: &ConstraintSchema) -> Result<String, LlmError> {
        let native = self.uses_native().then_some(schema);
        let mut messages = vec![ChatMessage::user(prompt)];
        let mut candidates = Vec::new();
        for _ in 0..=self.config.max_retries {
            let reply = self.send(&messages, native)?;
            match schema.validate(&reply) {
                Ok(()) => return Ok(reply),
                Err(reason) => {
                    log::debug!("constrained reply rejected: {reason}");
                    messages.push(ChatMessage::assistant(reply.clone()));
                    messages.push(ChatMessage::user(correction_note(schema, &reason)));
                    candidates.push(RejectedCandidate { reply, reason });
                }
            }
        }
        Err(LlmError::ConstraintExhausted { kind: schema.kind(), candidates })
    }
}

fn correction_note(schema: &ConstraintSchema, reason: &str) -> String {
    let requirement = match schema {
        ConstraintSchema::JsonSchema(_) => "Reply with a single JSON object that satisfies this schema and nothing else:",
        ConstraintSchema::Pattern { .. } => "Reply with text matching this regular expression and nothing else:",
        ConstraintSchema::Enumeration(_) => "Reply with exactly one of these values and nothing else:",
        ConstraintSchema::None => "Reply again.",
    };
    format!("Your previous reply was rejected ({reason}). {requirement}\n{}", schema.describe())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::shipped_atlas;

    fn client(mock: MockBackend, retries: u32) -> (LlmClient, Arc<MockBackend>) {
        let mock = Arc::new(mock);
        let cfg = BackendConfig { max_retries: retries, ..BackendConfig::default() };
        (LlmClient::new(cfg, mock.clone()).unwrap(), mock)
    }

    fn region_schema() -> ConstraintSchema {
        ConstraintSchema::json_schema(discretization_schema(shipped_atlas())).unwrap()
    }

    #[test]
    fn freeform_passthrough_carries_sampling_defaults() {
        let (c, mock) = client(MockBackend::scripted(["R"]), 3);
        assert_eq!(c.complete_freeform("hello").unwrap(), "R");
        let body = &mock.requests()[0];
        assert_eq!(body["temperature"], 0.6);
        assert_eq!(body["top_p"], 0.95);
        assert_eq!(body["messages"][0]["content"], "hello");
        assert!(body.get("guided_json").is_none());
    }

    #[test]
    fn conforming_reply_is_accepted_verbatim() {
        let (c, mock) = client(MockBackend::scripted([r#"{"region":"42","condition":"2"}"#]), 3);
        assert_eq!(c.complete_constrained("p", &region_schema()).unwrap(), r#"{"region":"42","condition":"2"}"#);
        assert_eq!(mock.requests().len(), 1);
    }

    #[test]
    fn one_repair_round() {
        let (c, mock) =
            client(MockBackend::scripted([r#"{"region":"999","condition":"2"}"#, r#"{"region":"7","condition":"2"}"#]), 3);
        let out = c.complete_constrained("p", &region_schema()).unwrap();
        assert_eq!(out, r#"{"region":"7","condition":"2"}"#);
        let reqs = mock.requests();
        assert_eq!(reqs.len(), 2);
        let msgs = reqs[1]["messages"].as_array().unwrap();
        assert_eq!(msgs.len(), 3);
        assert_eq!(msgs[1]["role"], "assistant");
        assert!(msgs[2]["content"].as_str().unwrap().contains("rejected"));
    }

    #[test]
    fn exhausted_retries_report_every_candidate() {
        let (c, mock) = client(MockBackend::scripted(["I think it is the knee."]), 3);
        match c.complete_constrained("p", &region_schema()) {
            Err(LlmError::ConstraintExhausted { candidates, kind }) => {
                assert_eq!(candidates.len(), 4);
                assert_eq!(kind, "json_schema");
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(mock.requests().len(), 4);
        let (c, mock) = client(MockBackend::scripted(["nope"]), 0);
        assert!(c.complete_constrained("p", &region_schema()).is_err());
        assert_eq!(mock.requests().len(), 1);
    }

    #[test]
    fn native_constraints_are_passed_through() {
        let mut mock = MockBackend::scripted(["3"]);
        mock.set_native_constraints(true);
        let (c, mock) = client(mock, 3);
        c.complete_constrained("p", &ConstraintSchema::enumeration(["1", "2", "3"]).unwrap()).unwrap();
        c.complete_constrained("p", &ConstraintSchema::pattern("[0-9]").unwrap()).unwrap();
        c.complete_constrained("p", &region_schema()).unwrap_err();
        let reqs = mock.requests();
        assert_eq!(reqs[0]["guided_choice"], json!(["1", "2", "3"]));
        assert_eq!(reqs[1]["guided_regex"], "[0-9]");
        assert_eq!(reqs[2]["guided_json"]["properties"]["condition"]["enum"][6], "7");
    }

    #[test]
    fn config_bounds() {
        let ok = BackendConfig::default();
        assert!(ok.check().is_ok());
        assert!(BackendConfig { temperature: 2.5, ..ok.clone() }.check().is_err());
        assert!(BackendConfig { top_p: 0.0, ..ok.clone() }.check().is_err());
        assert!(BackendConfig { max_in_flight: 0, ..ok.clone() }.check().is_err());
        let mut env = ok.clone();
        env.apply_env(|k| (k == ENV_MODEL).then(|| "m".to_string()));
        assert_eq!(env.model, "m");
        assert_eq!(env.base_url, ok.base_url);
    }

    #[test]
    fn unreachable_backend_fails_fast() {
        let cfg = BackendConfig { base_url: "http://127.0.0.1:9".into(), timeout_secs: 5, ..BackendConfig::default() };
        let c = LlmClient::http(cfg).unwrap();
        let start = std::time::Instant::now();
        assert!(matches!(c.complete_freeform("x"), Err(LlmError::Transport { .. })));
        assert!(start.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn in_flight_requests_are_bounded() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        struct Slow {
            now: AtomicUsize,
            peak: AtomicUsize,
        }
        impl Backend for Slow {
            fn native_constraints(&self) -> bool {
                false
            }
            fn complete(&self, _: &BackendRequest<'_>) -> Result<String, LlmError> {
                let n = self.now.fetch_add(1, Ordering::SeqCst) + 1;
                self.peak.fetch_max(n, Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(20));
                self.now.fetch_sub(1, Ordering::SeqCst);
                Ok("ok".into())
            }
        }
        let backend = Arc::new(Slow { now: AtomicUsize::new(0), peak: AtomicUsize::new(0) });
        let c = LlmClient::new(BackendConfig { max_in_flight: 2, ..BackendConfig::default() }, backend.clone()).unwrap();
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| c.complete_freeform("x").unwrap());
            }
        });
        assert!(backend.peak.load(Ordering::SeqCst) <= 2);
    }
}
