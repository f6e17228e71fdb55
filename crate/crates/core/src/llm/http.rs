//! OpenAI-compatible HTTP backend.

use serde_json::Value;

use super::{Backend, BackendConfig, BackendRequest, LlmError};

/// Posts to `{base_url}/chat/completions`.
pub struct HttpBackend {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
    native: bool,
}

impl HttpBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, LlmError> {
        let base = config.base_url.trim_end_matches('/');
        if !(base.starts_with("http://") || base.starts_with("https://")) {
            return Err(LlmError::Config(format!("base_url must be an http(s) URL, got \"{}\"", config.base_url)));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpBackend {
            agent,
            url: format!("{base}/chat/completions"),
            api_key: config.api_key.clone(),
            native: config.native_constraints.unwrap_or(true),
        })
    }
}

/// Extracts the reply text. A separate `reasoning_content` field (as emitted by
/// servers that split reasoning out) is put back in front of the answer with a
/// closing think tag so downstream extraction sees one shape.
pub(crate) fn reply_text(body: &Value) -> Result<String, LlmError> {
    let message = body
        .pointer("/choices/0/message")
        .ok_or_else(|| LlmError::Protocol("response has no choices[0].message".into()))?;
    let content = message
        .get("content")
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::Protocol("choices[0].message.content is missing".into()))?;
    Ok(match message.get("reasoning_content").and_then(Value::as_str) {
        Some(reasoning) if !reasoning.is_empty() => format!("{reasoning}</think>{content}"),
        _ => content.to_string(),
    })
}

impl Backend for HttpBackend {
    fn native_constraints(&self) -> bool {
        self.native
    }

    fn complete(&self, request: &BackendRequest<'_>) -> Result<String, LlmError> {
        let body = serde_json::to_string(&request.to_wire()).expect("request serializes");
        let mut call = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let transport = |e: ureq::Error| LlmError::Transport { url: self.url.clone(), message: e.to_string() };
        let mut response = call.send(body).map_err(transport)?;
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(transport)?;
        if !(200..300).contains(&status) {
            return Err(LlmError::Status { status, body: text.chars().take(500).collect() });
        }
        let json: Value = serde_json::from_str(&text).map_err(|e| LlmError::Protocol(format!("response is not JSON: {e}")))?;
        reply_text(&json)
    }
}
