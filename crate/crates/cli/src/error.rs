use std::fmt;

use bodymap_core::analysis::AnalysisError;
use bodymap_core::atlas::AtlasError;
use bodymap_core::baseline::BaselineError;
use bodymap_core::dataset::DatasetError;
use bodymap_core::llm::LlmError;
use bodymap_core::metadata::KbError;
use bodymap_core::pipeline::PipelineError;
use bodymap_core::prompt::PromptError;
use bodymap_core::render::RenderError;

/// A failure reported as `error[<category>]: <message>` on one line.
#[derive(Debug)]
pub struct CliError {
    pub category: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(category: &'static str, message: impl Into<String>) -> Self {
        let message: String = message.into();
        CliError { category, message: message.split_whitespace().collect::<Vec<_>>().join(" ") }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", message)
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("config", message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new("io", message)
    }

    pub fn exit_code(&self) -> i32 {
        match self.category {
            "usage" => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.category, self.message)
    }
}

macro_rules! category {
    ($($ty:ty => $name:literal),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::new($name, e.to_string())
            }
        })*
    };
}

category! {
    AtlasError => "atlas",
    KbError => "kb",
    PromptError => "prompt",
    LlmError => "backend",
    PipelineError => "pipeline",
    BaselineError => "baseline",
    DatasetError => "dataset",
    RenderError => "render",
    AnalysisError => "analysis",
}
