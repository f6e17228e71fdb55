//! Scripted offline backend.
//!
//! A fixture is a JSON document:
//!
//! ```json
//! {
//!   "native_constraints": false,
//!   "rules": [
//!     {"name": "convert", "contains": ["Convert it into"], "ends_with": null,
//!      "pick": "attempt", "replies": ["{...}"]}
//!   ]
//! }
//! ```
//!
//! The first rule whose `contains` substrings all occur in the first user
//! message (and whose `ends_with`, if set, matches its trimmed end) answers
//! the request. `pick: "attempt"` returns the reply at the repair attempt
//! number (the count of assistant messages so far), clamped to the last
//! reply; `pick: "prompt_hash"` selects by a stable hash of the prompt, so
//! the answer does not depend on call order.

use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Backend, BackendRequest, LlmError, Role};
use crate::seed::fnv1a;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pick {
    #[default]
    Attempt,
    PromptHash,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub contains: Vec<String>,
    #[serde(default)]
    pub ends_with: Option<String>,
    #[serde(default)]
    pub pick: Pick,
    pub replies: Vec<String>,
}

impl MockRule {
    fn matches(&self, prompt: &str) -> bool {
        self.contains.iter().all(|c| prompt.contains(c.as_str()))
            && self.ends_with.as_deref().is_none_or(|e| prompt.trim_end().ends_with(e))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockFixture {
    #[serde(default)]
    pub native_constraints: bool,
    pub rules: Vec<MockRule>,
}

pub struct MockBackend {
    fixture: MockFixture,
    requests: Mutex<Vec<Value>>,
}

impl MockBackend {
    pub fn new(fixture: MockFixture) -> Result<Self, LlmError> {
        if let Some(rule) = fixture.rules.iter().find(|r| r.replies.is_empty()) {
            return Err(LlmError::Mock(format!("rule \"{}\" has no replies", rule.name)));
        }
        Ok(MockBackend { fixture, requests: Mutex::new(Vec::new()) })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Mock(format!("{}: {e}", path.display())))?;
        let fixture = serde_json::from_str(&text).map_err(|e| LlmError::Mock(format!("{}: {e}", path.display())))?;
        Self::new(fixture)
    }

    /// A single catch-all rule answering with `replies` by attempt number.
    pub fn scripted<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let rule = MockRule {
            name: "scripted".into(),
            contains: Vec::new(),
            ends_with: None,
            pick: Pick::Attempt,
            replies: replies.into_iter().map(Into::into).collect(),
        };
        Self::new(MockFixture { native_constraints: false, rules: vec![rule] }).expect("scripted replies")
    }

    pub fn set_native_constraints(&mut self, native: bool) {
        self.fixture.native_constraints = native;
    }

    /// Wire bodies of every request received, in arrival order.
    pub fn requests(&self) -> Vec<Value> {
        self.requests.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl Backend for MockBackend {
    fn native_constraints(&self) -> bool {
        self.fixture.native_constraints
    }

    fn complete(&self, request: &BackendRequest<'_>) -> Result<String, LlmError> {
        self.requests.lock().unwrap_or_else(|e| e.into_inner()).push(request.to_wire());
        let prompt = request
            .messages
            .iter()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .ok_or_else(|| LlmError::Mock("request has no user message".into()))?;
        let rule = self.fixture.rules.iter().find(|r| r.matches(prompt)).ok_or_else(|| {
            let tail: String = prompt.trim_end().chars().rev().take(80).collect::<Vec<_>>().into_iter().rev().collect();
            LlmError::Mock(format!("no rule matches prompt ending \"{tail}\""))
        })?;
        let index = match rule.pick {
            Pick::Attempt => request.messages.iter().filter(|m| m.role == Role::Assistant).count(),
            Pick::PromptHash => (fnv1a(prompt.as_bytes()) % rule.replies.len() as u64) as usize,
        };
        Ok(rule.replies[index.min(rule.replies.len() - 1)].clone())
    }
}
