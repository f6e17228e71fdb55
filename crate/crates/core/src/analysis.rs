//! Dataset statistics: stroke frequencies, bubble charts, duplicates and
//! per-attribute group reports.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::atlas::{ConditionIndex, RegionAtlas, RegionIndex};
use crate::documentation::{Documentation, Location};
use crate::metadata::{age_bin, weight_bin, AgeBin, BreedKnowledgeBase, KbError, WeightBin};
use crate::par::{map_slice, Parallelism};
use crate::render::{escape_xml, RenderError, SvgRenderer};

/// Radius of a bubble whose region is marked in every documentation.
pub const BUBBLE_MAX_RADIUS: f64 = 28.0;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("documentation {id} references {what} {index}, which the atlas does not define")]
    UnknownIndex { id: String, what: &'static str, index: u16 },
    #[error("documentation {id} has no patient metadata, needed for grouping by {by}")]
    MissingMetadata { id: String, by: &'static str },
    #[error("unknown grouping \"{0}\" (expected grade, location, sex, age, weight or none)")]
    UnknownGrouping(String),
    #[error("documentation {id}: {source}")]
    Metadata {
        id: String,
        #[source]
        source: KbError,
    },
    #[error("a knowledge base is required for grouping by weight")]
    NeedsKnowledgeBase,
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionFrequency {
    pub region: RegionIndex,
    pub stroke_count: u64,
    /// Fraction of documentations marking this region.
    pub relative_frequency: f64,
    pub condition_counts: BTreeMap<ConditionIndex, u64>,
}

impl RegionFrequency {
    /// Share of this region's strokes with `condition`; 0 for unmarked regions.
    pub fn share(&self, condition: ConditionIndex) -> f64 {
        match self.stroke_count {
            0 => 0.0,
            n => self.condition_counts.get(&condition).copied().unwrap_or(0) as f64 / n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyMap {
    pub documents: usize,
    pub total_strokes: u64,
    /// One entry per atlas region in index order.
    pub regions: Vec<RegionFrequency>,
}

impl FrequencyMap {
    pub fn region(&self, index: RegionIndex) -> Option<&RegionFrequency> {
        self.regions.iter().find(|r| r.region == index)
    }

    pub fn marked(&self) -> impl Iterator<Item = &RegionFrequency> {
        self.regions.iter().filter(|r| r.stroke_count > 0)
    }
}

/// Counts strokes per region and per (region, condition).
pub fn stroke_frequencies(docs: &[Documentation], atlas: &RegionAtlas) -> Result<FrequencyMap, AnalysisError> {
    let mut counts: BTreeMap<RegionIndex, BTreeMap<ConditionIndex, u64>> = BTreeMap::new();
    for doc in docs {
        for a in &doc.abnormalities {
            if atlas.region(a.region).is_err() {
                return Err(AnalysisError::UnknownIndex { id: doc.id.clone(), what: "region", index: a.region.0 });
            }
            if atlas.condition(a.condition).is_err() {
                return Err(AnalysisError::UnknownIndex { id: doc.id.clone(), what: "condition", index: a.condition.0 });
            }
            *counts.entry(a.region).or_default().entry(a.condition).or_default() += 1;
        }
    }
    let regions: Vec<RegionFrequency> = atlas
        .regions()
        .iter()
        .map(|r| {
            let condition_counts = counts.remove(&r.index).unwrap_or_default();
            let stroke_count = condition_counts.values().sum();
            let relative_frequency = if docs.is_empty() { 0.0 } else { stroke_count as f64 / docs.len() as f64 };
            RegionFrequency { region: r.index, stroke_count, relative_frequency, condition_counts }
        })
        .collect();
    let total_strokes = regions.iter().map(|r| r.stroke_count).sum();
    Ok(FrequencyMap { documents: docs.len(), total_strokes, regions })
}

/// Radius giving a bubble area proportional to `relative_frequency`.
pub fn bubble_radius(relative_frequency: f64) -> f64 {
    BUBBLE_MAX_RADIUS * relative_frequency.max(0.0).sqrt()
}

/// Bubble chart SVG and the CSV with its numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleChart {
    pub svg: String,
    pub csv: String,
}

fn sector_path(cx: f64, cy: f64, r: f64, from: f64, to: f64) -> String {
    let point = |a: f64| (cx + r * a.sin(), cy - r * a.cos());
    let (x0, y0) = point(from);
    let (x1, y1) = point(to);
    let large = u8::from(to - from > std::f64::consts::PI);
    format!("M{cx:.4},{cy:.4} L{x0:.4},{y0:.4} A{r:.4},{r:.4} 0 {large} 1 {x1:.4},{y1:.4} Z")
}

/// One bubble per marked region, centred on the region, split into pie
/// sectors by condition share (clockwise from 12 o'clock, condition order).
pub fn bubble_chart(freq: &FrequencyMap, renderer: &SvgRenderer<'_>, title: &str) -> Result<BubbleChart, AnalysisError> {
    let atlas = renderer.atlas();
    let mut svg = String::new();
    renderer.open_canvas(&mut svg, title);
    svg.push_str("<g id=\"bubbles\" fill-opacity=\"0.85\">\n");
    let mut csv = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["region".to_string(), "label".into(), "stroke_count".into(), "relative_frequency".into(), "radius".into()];
    header.extend(atlas.conditions().iter().map(|c| format!("share_{}", c.index)));
    csv.write_record(&header)?;

    for rf in freq.marked() {
        let region = atlas.region(rf.region).map_err(RenderError::from)?;
        let (cx, cy) = region.geometry.center();
        let r = bubble_radius(rf.relative_frequency);
        let _ = writeln!(
            svg,
            r#"<g class="bubble" data-region="{}" data-count="{}"><title>{}</title>"#,
            rf.region,
            rf.stroke_count,
            escape_xml(&region.label)
        );
        let present: Vec<_> = atlas.conditions().iter().filter(|c| rf.share(c.index) > 0.0).collect();
        if let [only] = present.as_slice() {
            let _ = writeln!(svg, r#"<circle class="sector" cx="{cx:.4}" cy="{cy:.4}" r="{r:.4}" fill="{}"/>"#, only.color.hex());
        } else {
            let mut angle = 0.0;
            for c in &present {
                let sweep = rf.share(c.index) * std::f64::consts::TAU;
                let _ = writeln!(
                    svg,
                    r#"<path class="sector" data-condition="{}" d="{}" fill="{}"/>"#,
                    c.index,
                    sector_path(cx, cy, r, angle, angle + sweep),
                    c.color.hex()
                );
                angle += sweep;
            }
        }
        let _ = writeln!(
            svg,
            r##"<circle class="bubble-outline" cx="{cx:.4}" cy="{cy:.4}" r="{r:.4}" fill="none" stroke="#333333" stroke-width="0.5"/></g>"##
        );
        let mut row = vec![
            rf.region.to_string(),
            region.label.clone(),
            rf.stroke_count.to_string(),
            format!("{:.6}", rf.relative_frequency),
            format!("{r:.4}"),
        ];
        row.extend(atlas.conditions().iter().map(|c| format!("{:.6}", rf.share(c.index))));
        csv.write_record(&row)?;
    }
    svg.push_str("</g>\n</svg>\n");
    let csv = String::from_utf8(csv.into_inner().expect("in-memory writer")).expect("csv is utf-8");
    Ok(BubbleChart { svg, csv })
}

/// Documentations minus distinct abnormality sets; metadata is ignored.
pub fn duplicate_count(docs: &[Documentation]) -> usize {
    let distinct: HashSet<_> = docs.iter().map(Documentation::abnormality_set).collect();
    docs.len() - distinct.len()
}

/// Attribute used to split a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupBy {
    Grade,
    Location,
    Sex,
    Age,
    Weight,
    None,
}

impl GroupBy {
    pub const ALL: [GroupBy; 6] = [GroupBy::Grade, GroupBy::Location, GroupBy::Sex, GroupBy::Age, GroupBy::Weight, GroupBy::None];

    pub fn as_str(self) -> &'static str {
        match self {
            GroupBy::Grade => "grade",
            GroupBy::Location => "location",
            GroupBy::Sex => "sex",
            GroupBy::Age => "age",
            GroupBy::Weight => "weight",
            GroupBy::None => "none",
        }
    }
}

impl FromStr for GroupBy {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "grade" => GroupBy::Grade,
            "location" => GroupBy::Location,
            "sex" => GroupBy::Sex,
            "age" | "age_bin" => GroupBy::Age,
            "weight" | "weight_bin" => GroupBy::Weight,
            "none" => GroupBy::None,
            other => return Err(AnalysisError::UnknownGrouping(other.to_string())),
        })
    }
}

/// A group label with a sort rank so bins come out in their natural order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupKey {
    rank: u32,
    pub name: String,
}

impl GroupKey {
    fn new(rank: u32, name: impl Into<String>) -> Self {
        GroupKey { rank, name: name.into() }
    }
}

const UNSPECIFIED_RANK: u32 = 1000;

/// Group of one documentation. Grade and location fall back to an
/// `unspecified` group; sex, age and weight need metadata.
pub fn group_key(doc: &Documentation, by: GroupBy, kb: Option<&BreedKnowledgeBase>) -> Result<GroupKey, AnalysisError> {
    let meta = |by: GroupBy| {
        doc.metadata.as_ref().ok_or_else(|| AnalysisError::MissingMetadata { id: doc.id.clone(), by: by.as_str() })
    };
    let kb_err = |source| AnalysisError::Metadata { id: doc.id.clone(), source };
    Ok(match by {
        GroupBy::None => GroupKey::new(0, "all"),
        GroupBy::Grade => match doc.diagnosis.grade {
            Some(g) => GroupKey::new(u32::from(g), format!("grade_{g}")),
            None => GroupKey::new(UNSPECIFIED_RANK, "grade_unspecified"),
        },
        GroupBy::Location => match doc.diagnosis.location {
            Some(l) => GroupKey::new(Location::ALL.iter().position(|x| *x == l).unwrap() as u32, format!("location_{l}")),
            None => GroupKey::new(UNSPECIFIED_RANK, "location_unspecified"),
        },
        GroupBy::Sex => {
            let sex = meta(by)?.sex;
            GroupKey::new(sex as u32, format!("sex_{sex}"))
        }
        GroupBy::Age => {
            let bin = age_bin(meta(by)?.age).map_err(kb_err)?;
            let rank = [AgeBin::Years1To5, AgeBin::Years6To9, AgeBin::Years10To20].iter().position(|b| *b == bin).unwrap();
            GroupKey::new(rank as u32, format!("age_{}", bin.as_str()))
        }
        GroupBy::Weight => {
            let m = meta(by)?;
            let kb = kb.ok_or(AnalysisError::NeedsKnowledgeBase)?;
            let record = kb.breed(&m.breed).map_err(kb_err)?;
            let bin = weight_bin(record, m.sex, m.weight).map_err(kb_err)?;
            let rank = [WeightBin::Low, WeightBin::Medium, WeightBin::High].iter().position(|b| *b == bin).unwrap();
            GroupKey::new(rank as u32, format!("weight_{}", bin.as_str()))
        }
    })
}

/// Splits `docs` into groups, preserving input order within each group.
pub fn group_documentations<'d>(
    docs: &'d [Documentation],
    by: GroupBy,
    kb: Option<&BreedKnowledgeBase>,
) -> Result<BTreeMap<GroupKey, Vec<&'d Documentation>>, AnalysisError> {
    let mut groups: BTreeMap<GroupKey, Vec<&Documentation>> = BTreeMap::new();
    for doc in docs {
        groups.entry(group_key(doc, by, kb)?).or_default().push(doc);
    }
    Ok(groups)
}

/// Mean abnormality count per non-empty group.
pub fn average_abnormalities(
    docs: &[Documentation],
    by: GroupBy,
    kb: Option<&BreedKnowledgeBase>,
) -> Result<BTreeMap<GroupKey, f64>, AnalysisError> {
    Ok(group_documentations(docs, by, kb)?
        .into_iter()
        .map(|(k, members)| {
            let total: usize = members.iter().map(|d| d.abnormalities.len()).sum();
            (k, total as f64 / members.len() as f64)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub key: GroupKey,
    pub documents: usize,
    pub mean_abnormalities: f64,
    pub duplicates: usize,
    pub frequencies: FrequencyMap,
}

/// One frequency map and summary row per group.
pub fn attribute_report(
    docs: &[Documentation],
    atlas: &RegionAtlas,
    by: GroupBy,
    kb: Option<&BreedKnowledgeBase>,
    parallelism: Parallelism,
) -> Result<Vec<GroupReport>, AnalysisError> {
    let groups: Vec<(GroupKey, Vec<Documentation>)> = group_documentations(docs, by, kb)?
        .into_iter()
        .map(|(k, members)| (k, members.into_iter().cloned().collect()))
        .collect();
    map_slice(&groups, parallelism, |(key, members)| {
        let total: usize = members.iter().map(|d| d.abnormalities.len()).sum();
        Ok(GroupReport {
            key: key.clone(),
            documents: members.len(),
            mean_abnormalities: total as f64 / members.len() as f64,
            duplicates: duplicate_count(members),
            frequencies: stroke_frequencies(members, atlas)?,
        })
    })
    .into_iter()
    .collect()
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf, AnalysisError> {
    std::fs::write(&path, contents).map_err(|source| AnalysisError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Writes `freq_<group>.csv` and `bubbles_<group>.svg` per group plus
/// `summary.csv`; returns the written paths.
pub fn write_reports(reports: &[GroupReport], renderer: &SvgRenderer<'_>, out_dir: &Path) -> Result<Vec<PathBuf>, AnalysisError> {
    std::fs::create_dir_all(out_dir).map_err(|source| AnalysisError::Io { path: out_dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    let mut summary = csv::Writer::from_writer(Vec::new());
    summary.write_record(["group", "documents", "mean_abnormalities", "duplicates", "total_strokes"])?;
    for report in reports {
        let chart = bubble_chart(&report.frequencies, renderer, &report.key.name)?;
        written.push(write_file(out_dir.join(format!("freq_{}.csv", report.key.name)), &chart.csv)?);
        written.push(write_file(out_dir.join(format!("bubbles_{}.svg", report.key.name)), &chart.svg)?);
        summary.write_record([
            report.key.name.clone(),
            report.documents.to_string(),
            format!("{:.2}", report.mean_abnormalities),
            report.duplicates.to_string(),
            report.frequencies.total_strokes.to_string(),
        ])?;
    }
    let summary = String::from_utf8(summary.into_inner().expect("in-memory writer")).expect("csv is utf-8");
    written.push(write_file(out_dir.join("summary.csv"), &summary)?);
    Ok(written)
}
