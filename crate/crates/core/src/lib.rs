//! Synthetic canine body-map documentations.
//!
//! The crate covers the whole offline toolchain: the region/condition atlas
//! that discretizes a body map, breed metadata sampling, prompt assembly,
//! a chat-completion client with constrained outputs (plus a scripted mock),
//! the three-step generation pipeline, rule-based baselines, sketch-style
//! rendering, dataset analysis and classifier-ready export.

pub mod analysis;
pub mod atlas;
pub mod baseline;
pub mod dataset;
pub mod documentation;
pub mod llm;
pub mod metadata;
pub mod par;
pub mod pipeline;
pub mod prompt;
pub mod render;
pub mod seed;

pub use atlas::{Condition, ConditionIndex, Region, RegionAtlas, RegionIndex};
pub use documentation::{Abnormality, DiagnosisSpec, Documentation, Location, Provenance};
pub use metadata::{BreedKnowledgeBase, PatientMetadata, Sex};
pub use par::Parallelism;
pub mod defaults;

#[cfg(test)]
pub(crate) mod test_support {
    use std::sync::OnceLock;

    use crate::atlas::RegionAtlas;
    use crate::metadata::BreedKnowledgeBase;

    pub fn atlas_json() -> &'static str {
        static JSON: OnceLock<String> = OnceLock::new();
        JSON.get_or_init(|| std::fs::read_to_string(crate::defaults::atlas_path()).unwrap())
    }

    pub fn shipped_atlas() -> &'static RegionAtlas {
        static ATLAS: OnceLock<RegionAtlas> = OnceLock::new();
        ATLAS.get_or_init(|| RegionAtlas::load(crate::defaults::atlas_path()).unwrap())
    }

    pub fn shipped_kb() -> &'static BreedKnowledgeBase {
        static KB: OnceLock<BreedKnowledgeBase> = OnceLock::new();
        KB.get_or_init(|| BreedKnowledgeBase::load(crate::defaults::kb_path()).unwrap())
    }
}
