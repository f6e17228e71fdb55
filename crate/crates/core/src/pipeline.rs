//! Three-step LLM generation: free-form text, JSON draft, discretized
//! abnormalities.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{RegionAtlas, CONDITION_COUNT, REGION_COUNT};
use crate::documentation::{Abnormality, DiagnosisSpec, Documentation, Provenance};
use crate::llm::{discretization_schema, draft_schema, ConstraintSchema, LlmClient, LlmError, RejectedCandidate};
use crate::metadata::{sample_metadata, BreedKnowledgeBase, Sex};
use crate::par::{map_range, Parallelism};
use crate::prompt::{extract_after_reasoning, PromptSet, THINK_CLOSE};
use crate::seed::{derive_seed, label_tag, rng_from_seed};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValidationError {
    #[error("region index out of range: {0}")]
    RegionOutOfRange(u16),
    #[error("condition index out of range: {0}")]
    ConditionOutOfRange(u16),
    #[error("invalid diagnosis: {0}")]
    Diagnosis(String),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid batch configuration: {0}")]
    Config(String),
    #[error("cannot read diagnosis pool {path}: {source}")]
    Pool {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A documentation after validation, with the number of dropped duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub doc: Documentation,
    pub duplicates_dropped: usize,
}

/// Enforces index ranges and one condition per region. Later findings on an
/// already marked region are dropped.
pub fn validate_documentation(mut doc: Documentation, atlas: &RegionAtlas) -> Result<Validated, ValidationError> {
    doc.diagnosis.check().map_err(ValidationError::Diagnosis)?;
    for a in &doc.abnormalities {
        if atlas.region(a.region).is_err() || !(1..=REGION_COUNT).contains(&a.region.0) {
            return Err(ValidationError::RegionOutOfRange(a.region.0));
        }
        if atlas.condition(a.condition).is_err() || !(1..=CONDITION_COUNT).contains(&a.condition.0) {
            return Err(ValidationError::ConditionOutOfRange(a.condition.0));
        }
    }
    let before = doc.abnormalities.len();
    let mut seen = HashSet::new();
    doc.abnormalities.retain(|a| seen.insert(a.region));
    Ok(Validated { duplicates_dropped: before - doc.abnormalities.len(), doc })
}

/// The typed object produced by the conversion step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentationDraft {
    pub breed: String,
    pub age: u32,
    pub sex: Sex,
    pub weight: f64,
    pub palpation_findings: Vec<String>,
}

/// How batch items pick their diagnosis from the plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    #[default]
    Uniform,
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisPlan {
    pool: Vec<DiagnosisSpec>,
    mode: PlanMode,
}

impl DiagnosisPlan {
    pub fn new(pool: Vec<DiagnosisSpec>, mode: PlanMode) -> Result<Self, PipelineError> {
        if pool.is_empty() {
            return Err(PipelineError::Config("diagnosis plan is empty".into()));
        }
        for d in &pool {
            d.check().map_err(PipelineError::Config)?;
        }
        Ok(DiagnosisPlan { pool, mode })
    }

    pub fn single(diagnosis: DiagnosisSpec) -> Result<Self, PipelineError> {
        Self::new(vec![diagnosis], PlanMode::RoundRobin)
    }

    /// One diagnosis name per line; blank lines and `#` comments are skipped.
    pub fn load_pool(path: impl AsRef<Path>, mode: PlanMode) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| PipelineError::Pool { path: path.display().to_string(), source })?;
        let pool = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(DiagnosisSpec::named)
            .collect();
        Self::new(pool, mode)
    }

    pub fn pool(&self) -> &[DiagnosisSpec] {
        &self.pool
    }

    pub fn pick(&self, index: usize, master_seed: u64) -> &DiagnosisSpec {
        match self.mode {
            PlanMode::RoundRobin => &self.pool[index % self.pool.len()],
            PlanMode::Uniform => {
                let mut rng = rng_from_seed(derive_seed(master_seed, &[index as u64, label_tag("diagnosis")]));
                &self.pool[rng.gen_range(0..self.pool.len())]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Metadata,
    Prompt,
    Freeform,
    Conversion,
    Discretization,
    Validation,
}

/// Intermediate texts of one generation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freeform: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub had_reasoning: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draft: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub findings: Vec<FindingTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindingTrace {
    pub text: String,
    pub reply: String,
}

/// A generation that did not produce a documentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectRecord {
    pub id: String,
    pub index: usize,
    pub seed: u64,
    pub diagnosis: DiagnosisSpec,
    pub stage: Stage,
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<RejectedCandidate>,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub doc: Documentation,
    pub duplicates_dropped: usize,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BatchOutput {
    pub docs: Vec<Documentation>,
    pub rejects: Vec<RejectRecord>,
    pub duplicates_dropped: usize,
}

/// Per-item seed of a batch.
pub fn item_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, &[index as u64])
}

pub struct Generator<'a> {
    client: &'a LlmClient,
    atlas: &'a RegionAtlas,
    kb: &'a BreedKnowledgeBase,
    prompts: &'a PromptSet,
    draft_schema: ConstraintSchema,
    finding_schema: ConstraintSchema,
    /// Ask the model to wrap its reasoning in think tags.
    pub explicit_reasoning: bool,
    pub delimiter: String,
    pub id_prefix: String,
}

impl<'a> Generator<'a> {
    pub fn new(client: &'a LlmClient, atlas: &'a RegionAtlas, kb: &'a BreedKnowledgeBase, prompts: &'a PromptSet) -> Self {
        Generator {
            client,
            atlas,
            kb,
            prompts,
            draft_schema: ConstraintSchema::json_schema(draft_schema()).expect("static schema"),
            finding_schema: ConstraintSchema::json_schema(discretization_schema(atlas)).expect("atlas schema"),
            explicit_reasoning: true,
            delimiter: THINK_CLOSE.to_string(),
            id_prefix: "llm-".into(),
        }
    }

    pub fn id_for(&self, index: usize) -> String {
        format!("{}{index:06}", self.id_prefix)
    }

    pub fn generate_one(&self, index: usize, diagnosis: &DiagnosisSpec, seed: u64) -> Result<Generated, Box<RejectRecord>> {
        let mut trace = Trace::default();
        let id = self.id_for(index);
        let reject = |stage: Stage, error: String, candidates: Vec<RejectedCandidate>, trace: &Trace| {
            Box::new(RejectRecord {
                id: id.clone(),
                index,
                seed,
                diagnosis: diagnosis.clone(),
                stage,
                error,
                candidates,
                trace: trace.clone(),
            })
        };
        let llm_reject = |stage: Stage, e: LlmError, trace: &Trace| match e {
            LlmError::ConstraintExhausted { candidates, .. } => {
                reject(stage, "no reply satisfied the constraint".into(), candidates, trace)
            }
            other => reject(stage, other.to_string(), Vec::new(), trace),
        };

        let mut rng = rng_from_seed(seed);
        let metadata = sample_metadata(self.kb, &mut rng).map_err(|e| reject(Stage::Metadata, e.to_string(), vec![], &trace))?;
        let prompt = self
            .prompts
            .build_generation_prompt(self.atlas, &self.prompts.few_shot, &metadata, diagnosis, self.explicit_reasoning)
            .map_err(|e| reject(Stage::Prompt, e.to_string(), vec![], &trace))?;

        let raw = self.client.complete_freeform(&prompt).map_err(|e| llm_reject(Stage::Freeform, e, &trace))?;
        let (freeform, had_reasoning) = extract_after_reasoning(&raw, &self.delimiter);
        trace.freeform = Some(freeform.clone());
        trace.had_reasoning = Some(had_reasoning);

        let conversion = self
            .prompts
            .build_conversion_prompt(&freeform, &self.draft_schema.describe())
            .map_err(|e| reject(Stage::Conversion, e.to_string(), vec![], &trace))?;
        let draft_text =
            self.client.complete_constrained(&conversion, &self.draft_schema).map_err(|e| llm_reject(Stage::Conversion, e, &trace))?;
        trace.draft = Some(draft_text.clone());
        let draft: DocumentationDraft = serde_json::from_str(draft_text.trim())
            .map_err(|e| reject(Stage::Conversion, format!("draft does not parse: {e}"), vec![], &trace))?;

        let mut abnormalities = Vec::with_capacity(draft.palpation_findings.len());
        for finding in &draft.palpation_findings {
            let prompt = self
                .prompts
                .build_discretization_prompt(self.atlas, finding)
                .map_err(|e| reject(Stage::Discretization, e.to_string(), vec![], &trace))?;
            let reply = self
                .client
                .complete_constrained(&prompt, &self.finding_schema)
                .map_err(|e| llm_reject(Stage::Discretization, e, &trace))?;
            trace.findings.push(FindingTrace { text: finding.clone(), reply: reply.clone() });
            let abnormality =
                parse_finding(&reply).map_err(|e| reject(Stage::Discretization, e, vec![], &trace))?;
            abnormalities.push(abnormality);
        }

        let doc = Documentation {
            id: id.clone(),
            metadata: Some(metadata),
            diagnosis: diagnosis.clone(),
            abnormalities,
            provenance: Provenance::GeneratedLlm,
            seed,
        };
        let validated =
            validate_documentation(doc, self.atlas).map_err(|e| reject(Stage::Validation, e.to_string(), vec![], &trace))?;
        if validated.duplicates_dropped > 0 {
            log::warn!("{id}: dropped {} duplicate region finding(s)", validated.duplicates_dropped);
        }
        Ok(Generated { doc: validated.doc, duplicates_dropped: validated.duplicates_dropped, trace })
    }

    /// Generates `count` items. Item `i` uses seed `item_seed(master_seed, i)`,
    /// so the output does not depend on `parallelism`.
    pub fn generate_batch(
        &self,
        plan: &DiagnosisPlan,
        count: usize,
        master_seed: u64,
        parallelism: Parallelism,
    ) -> Result<BatchOutput, PipelineError> {
        if count == 0 {
            return Err(PipelineError::Config("count must be at least 1".into()));
        }
        let results = map_range(count, parallelism, |i| self.generate_one(i, plan.pick(i, master_seed), item_seed(master_seed, i)));
        let mut out = BatchOutput::default();
        for r in results {
            match r {
                Ok(g) => {
                    out.duplicates_dropped += g.duplicates_dropped;
                    out.docs.push(g.doc);
                }
                Err(reject) => out.rejects.push(*reject),
            }
        }
        Ok(out)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FindingReply {
    region: String,
    condition: String,
}

fn parse_finding(reply: &str) -> Result<Abnormality, String> {
    let r: FindingReply = serde_json::from_str(reply.trim()).map_err(|e| format!("finding reply does not parse: {e}"))?;
    let region = r.region.parse::<u16>().map_err(|_| format!("bad region index \"{}\"", r.region))?;
    let condition = r.condition.parse::<u16>().map_err(|_| format!("bad condition index \"{}\"", r.condition))?;
    Ok(Abnormality::new(region, condition))
}
