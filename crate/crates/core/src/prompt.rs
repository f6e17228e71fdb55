//! Prompt assembly for the three generation steps.
//!
//! Every prompt keeps its dynamic inputs at the very end so that consecutive
//! requests share the longest possible prefix.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use crate::atlas::{AtlasError, RegionAtlas};
use crate::documentation::{DiagnosisSpec, Documentation};
use crate::metadata::PatientMetadata;

/// Default reasoning delimiter.
pub const THINK_CLOSE: &str = "</think>";

/// Section headings of the generation prompt, in order.
pub const GENERATION_SECTIONS: [&str; 6] = [
    "## Task Definition and Background",
    "## Condition Descriptions",
    "## Region Descriptions",
    "## Example Documentations",
    "## Instruction Set",
    "## Patient Metadata",
];

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("missing template {path}: {source}")]
    MissingTemplate {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed few-shot file {path}: {source}")]
    FewShot {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("template {template}: no value for placeholder {{{{{name}}}}}")]
    MissingValue { template: String, name: String },
    #[error("template {template}: unexpected value for {name}")]
    UnexpectedValue { template: String, name: String },
    #[error("template {template}: {reason}")]
    BadTemplate { template: String, reason: String },
    #[error("{0} is empty")]
    EmptyInput(&'static str),
    #[error(transparent)]
    Atlas(#[from] AtlasError),
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{([a-z_][a-z0-9_]*)\}\}").expect("static regex"))
}

/// Text with `{{name}}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    name: String,
    text: String,
    required: BTreeSet<String>,
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let required = placeholder_re().captures_iter(&text).map(|c| c[1].to_string()).collect();
        PromptTemplate { name: name.into(), text, required }
    }

    pub fn required(&self) -> &BTreeSet<String> {
        &self.required
    }

    /// Byte offset of the first placeholder (end of the static prefix).
    pub fn static_prefix_len(&self) -> usize {
        placeholder_re().find(&self.text).map_or(self.text.len(), |m| m.start())
    }

    /// Substitutes every placeholder in one pass; all required values must be
    /// given and no extra ones are accepted.
    pub fn render(&self, values: &BTreeMap<&str, &str>) -> Result<String, PromptError> {
        if let Some(missing) = self.required.iter().find(|n| !values.contains_key(n.as_str())) {
            return Err(PromptError::MissingValue { template: self.name.clone(), name: missing.clone() });
        }
        if let Some(extra) = values.keys().find(|k| !self.required.contains(**k)) {
            return Err(PromptError::UnexpectedValue { template: self.name.clone(), name: extra.to_string() });
        }
        Ok(placeholder_re().replace_all(&self.text, |c: &regex::Captures| values[&c[1]].to_string()).into_owned())
    }

    fn expect_tail(&self, order: &[&str]) -> Result<(), PromptError> {
        let found: Vec<&str> = placeholder_re().captures_iter(&self.text).map(|c| c.get(1).unwrap().as_str()).collect();
        let bad = |reason: String| PromptError::BadTemplate { template: self.name.clone(), reason };
        if found.len() < order.len() || found[found.len() - order.len()..] != *order {
            return Err(bad(format!("must end with the placeholders {order:?}, found {found:?}")));
        }
        let last = placeholder_re().find_iter(&self.text).last().expect("placeholders present");
        if !self.text[last.end()..].trim().is_empty() {
            return Err(bad("text follows the final placeholder".into()));
        }
        Ok(())
    }
}

fn read_template(dir: &Path, file: &str) -> Result<PromptTemplate, PromptError> {
    let path = dir.join(file);
    let text = std::fs::read_to_string(&path).map_err(|source| PromptError::MissingTemplate { path, source })?;
    Ok(PromptTemplate::new(file, text))
}

/// All templates and few-shot examples of a prompt directory.
#[derive(Debug, Clone)]
pub struct PromptSet {
    pub generation: PromptTemplate,
    pub instructions: String,
    pub reasoning: String,
    pub conversion: PromptTemplate,
    pub discretization: PromptTemplate,
    pub few_shot: Vec<Documentation>,
}

impl PromptSet {
    /// Loads `generation.txt`, `instructions.txt`, `reasoning.txt`,
    /// `conversion.txt`, `discretization.txt` and `few_shot.json`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, PromptError> {
        let dir = dir.as_ref();
        let generation = read_template(dir, "generation.txt")?;
        let instructions = read_template(dir, "instructions.txt")?.text;
        let reasoning = read_template(dir, "reasoning.txt")?.text;
        let conversion = read_template(dir, "conversion.txt")?;
        let discretization = read_template(dir, "discretization.txt")?;
        let few_shot_path = dir.join("few_shot.json");
        let few_shot_text = std::fs::read_to_string(&few_shot_path)
            .map_err(|source| PromptError::MissingTemplate { path: few_shot_path.clone(), source })?;
        let few_shot = serde_json::from_str(&few_shot_text)
            .map_err(|source| PromptError::FewShot { path: few_shot_path, source })?;

        generation.expect_tail(&["patient"])?;
        conversion.expect_tail(&["schema", "documentation"])?;
        discretization.expect_tail(&["abnormality"])?;
        for (t, names) in [
            (&generation, &["conditions", "regions", "examples", "instructions", "patient"][..]),
            (&conversion, &["schema", "documentation"][..]),
            (&discretization, &["regions", "conditions", "abnormality"][..]),
        ] {
            let expect: BTreeSet<String> = names.iter().map(|s| s.to_string()).collect();
            if t.required != expect {
                return Err(PromptError::BadTemplate {
                    template: t.name.clone(),
                    reason: format!("expected placeholders {expect:?}, found {:?}", t.required),
                });
            }
        }
        Ok(PromptSet { generation, instructions, reasoning, conversion, discretization, few_shot })
    }

    /// The free-form generation prompt. `explicit_reasoning` adds the request
    /// to reason inside `<think>`/`</think>` for models that do not do so on
    /// their own.
    pub fn build_generation_prompt(
        &self,
        atlas: &RegionAtlas,
        few_shot: &[Documentation],
        metadata: &PatientMetadata,
        diagnosis: &DiagnosisSpec,
        explicit_reasoning: bool,
    ) -> Result<String, PromptError> {
        build_generation_prompt(
            &self.generation,
            atlas,
            few_shot,
            &self.instructions,
            explicit_reasoning.then_some(self.reasoning.as_str()),
            metadata,
            diagnosis,
        )
    }

    pub fn build_conversion_prompt(&self, freeform: &str, schema: &str) -> Result<String, PromptError> {
        build_conversion_prompt(&self.conversion, freeform, schema)
    }

    pub fn build_discretization_prompt(&self, atlas: &RegionAtlas, abnormality: &str) -> Result<String, PromptError> {
        build_discretization_prompt(&self.discretization, atlas, abnormality)
    }
}

fn condition_list(atlas: &RegionAtlas) -> String {
    atlas.conditions().iter().map(|c| format!("<{}, {}>", c.index, c.label)).collect::<Vec<_>>().join("\n")
}

fn region_list(atlas: &RegionAtlas) -> String {
    atlas.regions().iter().map(|r| format!("<{}, {}>", r.index, r.label)).collect::<Vec<_>>().join("\n")
}

fn diagnosis_lines(out: &mut String, diagnosis: &DiagnosisSpec) {
    let _ = writeln!(out, "Diagnosis: {}", diagnosis.name.trim());
    if let Some(g) = diagnosis.grade {
        let _ = writeln!(out, "Grade: {g}");
    }
    if let Some(l) = diagnosis.location {
        let _ = writeln!(out, "Location: {l}");
    }
}

/// Patient block appended at the end of the generation prompt.
pub fn patient_section(metadata: &PatientMetadata, diagnosis: &DiagnosisSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Breed: {}", metadata.breed);
    let _ = writeln!(s, "Sex: {}", metadata.sex);
    let _ = writeln!(s, "Age: {} years", metadata.age);
    let _ = writeln!(s, "Weight: {:.1} kg", metadata.weight);
    diagnosis_lines(&mut s, diagnosis);
    s.trim_end().to_string()
}

fn example_block(atlas: &RegionAtlas, few_shot: &[Documentation]) -> Result<String, PromptError> {
    let mut blocks = Vec::with_capacity(few_shot.len());
    for (i, doc) in few_shot.iter().enumerate() {
        let mut head = format!("Example {} ({}", i + 1, doc.diagnosis.name);
        if let Some(g) = doc.diagnosis.grade {
            let _ = write!(head, ", grade {g}");
        }
        if let Some(l) = doc.diagnosis.location {
            let _ = write!(head, ", {l}");
        }
        head.push_str("):");
        blocks.push(format!("{head}\n{}", atlas.encode_abnormalities(&doc.abnormalities)?));
    }
    Ok(blocks.join("\n\n"))
}

pub fn build_generation_prompt(
    template: &PromptTemplate,
    atlas: &RegionAtlas,
    few_shot: &[Documentation],
    instructions: &str,
    reasoning: Option<&str>,
    metadata: &PatientMetadata,
    diagnosis: &DiagnosisSpec,
) -> Result<String, PromptError> {
    let examples = example_block(atlas, few_shot)?;
    let mut instruction_text = instructions.trim_end().to_string();
    if let Some(r) = reasoning {
        instruction_text.push_str("\n\n");
        instruction_text.push_str(r.trim());
    }
    let conditions = condition_list(atlas);
    let regions = region_list(atlas);
    let patient = patient_section(metadata, diagnosis);
    let values = BTreeMap::from([
        ("conditions", conditions.as_str()),
        ("regions", regions.as_str()),
        ("examples", examples.as_str()),
        ("instructions", instruction_text.as_str()),
        ("patient", patient.as_str()),
    ]);
    template.render(&values)
}

pub fn build_conversion_prompt(template: &PromptTemplate, freeform: &str, schema: &str) -> Result<String, PromptError> {
    if freeform.trim().is_empty() {
        return Err(PromptError::EmptyInput("free-form documentation"));
    }
    template.render(&BTreeMap::from([("schema", schema), ("documentation", freeform.trim())]))
}

pub fn build_discretization_prompt(
    template: &PromptTemplate,
    atlas: &RegionAtlas,
    abnormality: &str,
) -> Result<String, PromptError> {
    if abnormality.trim().is_empty() {
        return Err(PromptError::EmptyInput("abnormality description"));
    }
    let regions = region_list(atlas);
    let conditions = condition_list(atlas);
    template.render(&BTreeMap::from([
        ("regions", regions.as_str()),
        ("conditions", conditions.as_str()),
        ("abnormality", abnormality.trim()),
    ]))
}

/// Splits a reply at the last reasoning delimiter.
pub fn extract_after_reasoning(response: &str, delimiter: &str) -> (String, bool) {
    match (delimiter.is_empty(), response.rfind(delimiter)) {
        (false, Some(at)) => (response[at + delimiter.len()..].trim().to_string(), true),
        _ => (response.trim().to_string(), false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::documentation::Location;
    use crate::metadata::Sex;
    use crate::test_support::shipped_atlas;

    fn prompts() -> PromptSet {
        PromptSet::load(crate::defaults::prompts_dir()).unwrap()
    }

    fn meta(breed: &str, age: u32) -> PatientMetadata {
        PatientMetadata { breed: breed.into(), age, sex: Sex::Female, weight: 11.5 }
    }

    fn common_prefix(a: &str, b: &str) -> usize {
        a.bytes().zip(b.bytes()).take_while(|(x, y)| x == y).count()
    }

    #[test]
    fn template_requires_every_placeholder() {
        let t = PromptTemplate::new("t", "a {{x}} b {{y}}");
        assert_eq!(t.required().len(), 2);
        assert!(matches!(t.render(&BTreeMap::from([("x", "1")])), Err(PromptError::MissingValue { .. })));
        assert!(matches!(
            t.render(&BTreeMap::from([("x", "1"), ("y", "2"), ("z", "3")])),
            Err(PromptError::UnexpectedValue { .. })
        ));
        let out = t.render(&BTreeMap::from([("x", "{{y}}"), ("y", "2")])).unwrap();
        assert_eq!(out, "a {{y}} b 2", "values are not re-expanded");
    }

    #[test]
    fn generation_sections_appear_in_order() {
        let p = prompts();
        let text = p
            .build_generation_prompt(shipped_atlas(), &p.few_shot, &meta("Beagle", 4), &DiagnosisSpec::patellar(Some(2), Some(Location::Left)), true)
            .unwrap();
        let positions: Vec<usize> = GENERATION_SECTIONS.iter().map(|s| text.find(s).expect(s)).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{positions:?}");
        assert!(text.contains("Each region can only have one abnormality (condition)."));
        assert!(text.contains("Abnormalities are either present or absent, not mild or severe."));
        assert!(text.contains("<think>") && text.contains("</think>"));
        assert!(!text.contains("{{"));
    }

    #[test]
    fn lists_every_condition_and_region() {
        let p = prompts();
        let atlas = shipped_atlas();
        let text = p.build_generation_prompt(atlas, &p.few_shot, &meta("Pug", 3), &DiagnosisSpec::patellar(None, None), false).unwrap();
        for r in atlas.regions() {
            assert!(text.contains(&format!("<{}, {}>", r.index, r.label)));
        }
        for c in atlas.conditions() {
            assert!(text.contains(&format!("<{}, {}>", c.index, c.label)));
        }
        assert!(!text.contains("<think>"), "reasoning models get no delimiter instruction");
    }

    #[test]
    fn breed_only_appears_in_final_section() {
        let p = prompts();
        let text = p
            .build_generation_prompt(shipped_atlas(), &p.few_shot, &meta("Beagle", 4), &DiagnosisSpec::patellar(Some(1), None), false)
            .unwrap();
        let tail = text.find(GENERATION_SECTIONS[5]).unwrap();
        assert_eq!(text.find("Beagle").unwrap(), text.rfind("Beagle").unwrap());
        assert!(text.find("Beagle").unwrap() > tail);
    }

    #[test]
    fn generation_prompts_share_static_prefix() {
        let p = prompts();
        let atlas = shipped_atlas();
        let a = p.build_generation_prompt(atlas, &p.few_shot, &meta("Beagle", 4), &DiagnosisSpec::patellar(Some(1), None), true).unwrap();
        let b = p.build_generation_prompt(atlas, &p.few_shot, &meta("Vizsla", 9), &DiagnosisSpec::named("hip dysplasia"), true).unwrap();
        let tail = a.find(GENERATION_SECTIONS[5]).unwrap() + GENERATION_SECTIONS[5].len();
        assert!(common_prefix(&a, &b) >= tail);
    }

    #[test]
    fn few_shot_examples_span_9_to_51() {
        let p = prompts();
        let counts: Vec<usize> = p.few_shot.iter().map(|d| d.abnormalities.len()).collect();
        assert_eq!(p.few_shot.len(), 4);
        assert_eq!(counts.iter().min(), Some(&9));
        assert_eq!(counts.iter().max(), Some(&51));
        let grades: Vec<Option<u8>> = p.few_shot.iter().map(|d| d.diagnosis.grade).collect();
        assert_eq!(grades, vec![Some(1), Some(2), Some(3), Some(4)]);
    }

    #[test]
    fn missing_instruction_file_fails() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["generation.txt", "reasoning.txt", "conversion.txt", "discretization.txt", "few_shot.json"] {
            std::fs::copy(crate::defaults::prompts_dir().join(f), dir.path().join(f)).unwrap();
        }
        let err = PromptSet::load(dir.path()).unwrap_err();
        assert!(matches!(err, PromptError::MissingTemplate { ref path, .. } if path.ends_with("instructions.txt")));
    }

    #[test]
    fn conversion_fills_both_placeholders_once() {
        let p = prompts();
        let text = p.build_conversion_prompt("abc", "SCHEMA-TEXT").unwrap();
        assert_eq!(text.matches("abc").count(), 1);
        assert_eq!(text.matches("SCHEMA-TEXT").count(), 1);
        let static_len = p.conversion.static_prefix_len();
        assert!(text.find("SCHEMA-TEXT").unwrap() >= static_len);
        assert!(text.find("abc").unwrap() > text.find("SCHEMA-TEXT").unwrap());
        assert!(text.trim_end().ends_with("abc"));
        assert!(matches!(p.build_conversion_prompt("  ", "s"), Err(PromptError::EmptyInput(_))));
    }

    #[test]
    fn discretization_lists_pairs_and_ends_with_input() {
        let p = prompts();
        let atlas = shipped_atlas();
        let text = p.build_discretization_prompt(atlas, "pain in left thigh").unwrap();
        let region_lines = text.lines().filter(|l| atlas.regions().iter().any(|r| *l == format!("<{}, {}>", r.index, r.label))).count();
        let condition_lines = text.lines().filter(|l| atlas.conditions().iter().any(|c| *l == format!("<{}, {}>", c.index, c.label))).count();
        assert_eq!((region_lines, condition_lines), (214, 7));
        assert!(text.trim_end().ends_with("pain in left thigh"));
        let other = p.build_discretization_prompt(atlas, "swelling of the right tarsal joint").unwrap();
        assert!(common_prefix(&text, &other) >= p.discretization.static_prefix_len());
        let (a, b) = (text.trim_end(), other.trim_end());
        assert!(a[..a.len() - "pain in left thigh".len()] == b[..b.len() - "swelling of the right tarsal joint".len()]);
        assert!(p.build_discretization_prompt(atlas, "").is_err());
    }

    #[test]
    fn reasoning_extraction() {
        assert_eq!(extract_after_reasoning("plan</think>result", THINK_CLOSE), ("result".into(), true));
        assert_eq!(extract_after_reasoning("result", THINK_CLOSE), ("result".into(), false));
        assert_eq!(extract_after_reasoning("a</think>b</think>c", THINK_CLOSE), ("c".into(), true));
    }

    #[test]
    fn bad_template_tail_is_rejected() {
        let t = PromptTemplate::new("x", "{{patient}} trailing");
        assert!(t.expect_tail(&["patient"]).is_err());
        assert!(PromptTemplate::new("x", "a {{patient}}\n").expect_tail(&["patient"]).is_ok());
    }
}
