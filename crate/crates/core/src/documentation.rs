//! Documentation records shared by the generators, renderer and analysis.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::atlas::{ConditionIndex, RegionIndex};
use crate::metadata::PatientMetadata;

/// Diagnosis label of the positive class.
pub const PATELLAR_LUXATION: &str = "patellar luxation";

/// One marked region with its condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Abnormality {
    pub region: RegionIndex,
    pub condition: ConditionIndex,
}

impl Abnormality {
    pub fn new(region: u16, condition: u16) -> Self {
        Abnormality { region: RegionIndex(region), condition: ConditionIndex(condition) }
    }
}

/// Affected side(s) of a luxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Left,
    Right,
    Bilateral,
}

impl Location {
    pub const ALL: [Location; 3] = [Location::Left, Location::Right, Location::Bilateral];

    pub fn as_str(self) -> &'static str {
        match self {
            Location::Left => "left",
            Location::Right => "right",
            Location::Bilateral => "bilateral",
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Location {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" => Ok(Location::Left),
            "right" => Ok(Location::Right),
            "bilateral" => Ok(Location::Bilateral),
            other => Err(format!("unknown location \"{other}\" (expected left, right or bilateral)")),
        }
    }
}

/// What the documentation is supposed to show.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiagnosisSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grade: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
}

impl DiagnosisSpec {
    pub fn named(name: impl Into<String>) -> Self {
        DiagnosisSpec { name: name.into(), grade: None, location: None }
    }

    pub fn patellar(grade: Option<u8>, location: Option<Location>) -> Self {
        DiagnosisSpec { name: PATELLAR_LUXATION.to_string(), grade, location }
    }

    pub fn is_patellar_luxation(&self) -> bool {
        self.name.trim().eq_ignore_ascii_case(PATELLAR_LUXATION)
    }

    /// Grade and location only make sense for luxations; grades run 1..=4.
    pub fn check(&self) -> Result<(), String> {
        if self.name.trim().is_empty() {
            return Err("diagnosis name is empty".into());
        }
        if let Some(g) = self.grade {
            if !(1..=4).contains(&g) {
                return Err(format!("grade {g} outside 1..=4"));
            }
        }
        if (self.grade.is_some() || self.location.is_some()) && !self.is_patellar_luxation() {
            return Err(format!("grade/location are not supported for \"{}\"", self.name));
        }
        Ok(())
    }
}

/// Where a documentation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    GeneratedLlm,
    RuleBased,
    Real,
}

/// One synthetic (or real) patient record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Documentation {
    pub id: String,
    pub metadata: Option<PatientMetadata>,
    pub diagnosis: DiagnosisSpec,
    pub abnormalities: Vec<Abnormality>,
    pub provenance: Provenance,
    pub seed: u64,
}

impl Documentation {
    /// Abnormalities as an order-independent key.
    pub fn abnormality_set(&self) -> std::collections::BTreeSet<Abnormality> {
        self.abnormalities.iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagnosis_checks() {
        assert!(DiagnosisSpec::patellar(Some(4), Some(Location::Left)).check().is_ok());
        assert!(DiagnosisSpec::patellar(Some(5), None).check().is_err());
        assert!(DiagnosisSpec::patellar(Some(0), None).check().is_err());
        let mut other = DiagnosisSpec::named("hip dysplasia");
        assert!(other.check().is_ok());
        other.grade = Some(2);
        assert!(other.check().is_err());
        assert!(DiagnosisSpec::named("  ").check().is_err());
        assert!(DiagnosisSpec::named("Patellar Luxation").is_patellar_luxation());
    }

    #[test]
    fn serde_shape() {
        let doc = Documentation {
            id: "d1".into(),
            metadata: None,
            diagnosis: DiagnosisSpec::patellar(Some(2), Some(Location::Bilateral)),
            abnormalities: vec![Abnormality::new(12, 3)],
            provenance: Provenance::GeneratedLlm,
            seed: 9,
        };
        let v = serde_json::to_value(&doc).unwrap();
        assert_eq!(v["abnormalities"][0]["region"], 12);
        assert_eq!(v["diagnosis"]["location"], "bilateral");
        assert_eq!(v["provenance"], "generated_llm");
        let back: Documentation = serde_json::from_value(v).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn location_parsing() {
        assert_eq!("Bilateral".parse::<Location>().unwrap(), Location::Bilateral);
        assert!("both".parse::<Location>().is_err());
    }
}
