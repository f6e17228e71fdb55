//! Breed knowledge base, patient metadata sampling and the age/weight bins
//! used when grouping generated documentations.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("cannot read knowledge base {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed knowledge base: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("breed \"{breed}\": {field}: {reason}")]
    Invalid { breed: String, field: String, reason: String },
    #[error("knowledge base is empty")]
    Empty,
    #[error("unknown breed \"{0}\"")]
    UnknownBreed(String),
    #[error("weight {weight} kg outside [{min}, {max}] for {breed} ({sex})")]
    WeightOutOfRange { breed: String, sex: Sex, weight: f64, min: f64, max: f64 },
    #[error("age {0} is below 1 year")]
    AgeBelowOne(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Male => "male",
            Sex::Female => "female",
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" => Ok(Sex::Male),
            "female" => Ok(Sex::Female),
            other => Err(format!("unknown sex \"{other}\"")),
        }
    }
}

/// Per-sex figures of one breed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SexProfile {
    pub life_expectancy: f64,
    pub w_min: f64,
    pub w_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreedRecord {
    pub breed: String,
    pub male: SexProfile,
    pub female: SexProfile,
}

impl BreedRecord {
    pub fn profile(&self, sex: Sex) -> &SexProfile {
        match sex {
            Sex::Male => &self.male,
            Sex::Female => &self.female,
        }
    }
}

/// Sampled patient details placed at the end of the generation prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientMetadata {
    pub breed: String,
    pub age: u32,
    pub sex: Sex,
    /// Kilograms, one decimal place.
    pub weight: f64,
}

/// Weights are handled in integer tenths of a kilogram.
fn tenths(kg: f64) -> i64 {
    (kg * 10.0).round() as i64
}

fn is_tenth_multiple(kg: f64) -> bool {
    ((kg * 10.0) - (kg * 10.0).round()).abs() < 1e-6
}

#[derive(Debug, Clone)]
pub struct BreedKnowledgeBase {
    records: Vec<BreedRecord>,
}

impl BreedKnowledgeBase {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, KbError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| KbError::Io { path: path.to_path_buf(), source })?;
        let records: Vec<BreedRecord> = serde_json::from_slice(&bytes)?;
        Self::new(records)
    }

    pub fn new(records: Vec<BreedRecord>) -> Result<Self, KbError> {
        let mut seen = HashSet::new();
        for r in &records {
            let fail = |field: &str, reason: String| KbError::Invalid {
                breed: r.breed.clone(),
                field: field.to_string(),
                reason,
            };
            if r.breed.trim().is_empty() {
                return Err(fail("breed", "name is empty".into()));
            }
            if !seen.insert(r.breed.as_str()) {
                return Err(fail("breed", "duplicate breed name".into()));
            }
            for sex in [Sex::Male, Sex::Female] {
                let p = r.profile(sex);
                let field = |f: &str| format!("{sex}.{f}");
                if !(p.life_expectancy.is_finite() && p.life_expectancy > 0.0) {
                    return Err(fail(&field("life_expectancy"), format!("{} is not positive", p.life_expectancy)));
                }
                for (name, w) in [("w_min", p.w_min), ("w_max", p.w_max)] {
                    if !(w.is_finite() && w > 0.0) {
                        return Err(fail(&field(name), format!("{w} is not positive")));
                    }
                    if !is_tenth_multiple(w) {
                        return Err(fail(&field(name), format!("{w} has more than one decimal place")));
                    }
                }
                if p.w_min > p.w_max {
                    return Err(fail(&field("w_min"), format!("{} exceeds w_max {}", p.w_min, p.w_max)));
                }
            }
        }
        Ok(BreedKnowledgeBase { records })
    }

    pub fn records(&self) -> &[BreedRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn breed(&self, name: &str) -> Result<&BreedRecord, KbError> {
        self.records.iter().find(|r| r.breed == name).ok_or_else(|| KbError::UnknownBreed(name.to_string()))
    }

    /// Checks a metadata record against its breed entry.
    pub fn check(&self, meta: &PatientMetadata) -> Result<(), KbError> {
        let record = self.breed(&meta.breed)?;
        let p = record.profile(meta.sex);
        if meta.age < 1 {
            return Err(KbError::AgeBelowOne(meta.age));
        }
        let w = tenths(meta.weight);
        if w < tenths(p.w_min) || w > tenths(p.w_max) {
            return Err(KbError::WeightOutOfRange {
                breed: record.breed.clone(),
                sex: meta.sex,
                weight: meta.weight,
                min: p.w_min,
                max: p.w_max,
            });
        }
        Ok(())
    }
}

/// Uniform breed, sex, integer age in `1..=ceil(life expectancy)` and weight on
/// the 0.1 kg grid of `[w_min, w_max]`.
pub fn sample_metadata<R: Rng + ?Sized>(kb: &BreedKnowledgeBase, rng: &mut R) -> Result<PatientMetadata, KbError> {
    if kb.is_empty() {
        return Err(KbError::Empty);
    }
    let record = &kb.records[rng.gen_range(0..kb.records.len())];
    let sex = if rng.gen::<bool>() { Sex::Male } else { Sex::Female };
    let p = record.profile(sex);
    let max_age = (p.life_expectancy.ceil() as u32).max(1);
    let age = rng.gen_range(1..=max_age);
    let weight = rng.gen_range(tenths(p.w_min)..=tenths(p.w_max)) as f64 / 10.0;
    Ok(PatientMetadata { breed: record.breed.clone(), age, sex, weight })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightBin {
    Low,
    Medium,
    High,
}

impl WeightBin {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightBin::Low => "low",
            WeightBin::Medium => "medium",
            WeightBin::High => "high",
        }
    }
}

/// Breed-specific weight thirds.
///
/// With `R = w_max - w_min` and `S = R / 3`:
/// low is `[w_min, ceil(w_min + S))`, medium `[ceil(w_min + S), ceil(w_min + 2S)]`
/// and high `(ceil(w_min + 2S), w_max]`. A zero range is reported as medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightBins {
    pub w_min: f64,
    pub w_max: f64,
    /// R
    pub range: f64,
    /// S
    pub interval: f64,
    /// ceil(w_min + S), first medium weight.
    pub medium_from: i64,
    /// ceil(w_min + 2S), last medium weight.
    pub medium_to: i64,
}

impl WeightBins {
    pub fn new(w_min: f64, w_max: f64) -> Self {
        let (lo, hi) = (tenths(w_min), tenths(w_max));
        // w_min + S = (2 w_min + w_max) / 3, evaluated exactly in tenths
        let ceil_div = |n: i64, d: i64| n.div_euclid(d) + i64::from(n.rem_euclid(d) != 0);
        let range = (hi - lo) as f64 / 10.0;
        WeightBins {
            w_min,
            w_max,
            range,
            interval: range / 3.0,
            medium_from: ceil_div(2 * lo + hi, 30),
            medium_to: ceil_div(lo + 2 * hi, 30),
        }
    }

    pub fn bin(&self, weight: f64) -> Option<WeightBin> {
        let w = tenths(weight);
        let (lo, hi) = (tenths(self.w_min), tenths(self.w_max));
        if w < lo || w > hi {
            return None;
        }
        if lo == hi {
            return Some(WeightBin::Medium);
        }
        Some(if w < self.medium_from * 10 {
            WeightBin::Low
        } else if w <= self.medium_to * 10 {
            WeightBin::Medium
        } else {
            WeightBin::High
        })
    }
}

pub fn weight_bin(record: &BreedRecord, sex: Sex, weight: f64) -> Result<WeightBin, KbError> {
    let p = record.profile(sex);
    WeightBins::new(p.w_min, p.w_max).bin(weight).ok_or_else(|| KbError::WeightOutOfRange {
        breed: record.breed.clone(),
        sex,
        weight,
        min: p.w_min,
        max: p.w_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeBin {
    #[serde(rename = "1-5")]
    Years1To5,
    #[serde(rename = "6-9")]
    Years6To9,
    #[serde(rename = "10-20")]
    Years10To20,
}

impl AgeBin {
    pub fn as_str(self) -> &'static str {
        match self {
            AgeBin::Years1To5 => "1_5",
            AgeBin::Years6To9 => "6_9",
            AgeBin::Years10To20 => "10_20",
        }
    }
}

/// Ages above 20 fall into the top bin.
pub fn age_bin(age: u32) -> Result<AgeBin, KbError> {
    match age {
        0 => Err(KbError::AgeBelowOne(age)),
        1..=5 => Ok(AgeBin::Years1To5),
        6..=9 => Ok(AgeBin::Years6To9),
        _ => Ok(AgeBin::Years10To20),
    }
}
