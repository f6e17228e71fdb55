//! JSON Lines manifests, stratified splits and classifier-ready export.
//!
//! A manifest's first line is the header; every further line is one entry.
//! Export writes
//!
//! ```text
//! out/train/{patellar_luxation,other}/<id>.png
//! out/val/{patellar_luxation,other}/<id>.png
//! out/svg/<id>.svg
//! out/labels.csv          id,label,split,path
//! out/manifest.jsonl      input manifest with image paths filled in
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::RegionAtlas;
use crate::documentation::{DiagnosisSpec, Documentation};
use crate::par::{map_slice, Parallelism};
use crate::render::{rasterize_png, RenderError, SvgRenderer};
use crate::seed::{derive_seed, label_tag, rng_from_seed};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const REJECTS_FILE: &str = "rejects.jsonl";
pub const LABELS_FILE: &str = "labels.csv";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("entry {0} already has a split assigned")]
    AlreadySplit(String),
    #[error("entry {0} has no split assigned")]
    Unassigned(String),
    #[error("train fraction {0} outside [0, 1]")]
    Fraction(f64),
    #[error("id \"{0}\" cannot be used as a file name")]
    BadId(String),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// Class of an entry for the binary classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    PatellarLuxation,
    Other,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::PatellarLuxation, Label::Other];

    pub fn for_diagnosis(d: &DiagnosisSpec) -> Self {
        if d.is_patellar_luxation() {
            Label::PatellarLuxation
        } else {
            Label::Other
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::PatellarLuxation => "patellar_luxation",
            Label::Other => "other",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Unassigned => "unassigned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestHeader {
    pub atlas_sha256: String,
    pub tool_version: String,
    pub master_seed: u64,
}

impl ManifestHeader {
    pub fn new(atlas: &RegionAtlas, master_seed: u64) -> Self {
        ManifestHeader { atlas_sha256: atlas.sha256().to_string(), tool_version: TOOL_VERSION.to_string(), master_seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub label: Label,
    pub split: Split,
    /// Path of the rendered image relative to the export directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(flatten)]
    pub doc: Documentation,
}

impl ManifestEntry {
    pub fn new(doc: Documentation) -> Self {
        ManifestEntry { label: Label::for_diagnosis(&doc.diagnosis), split: Split::Unassigned, image: None, doc }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub entries: Vec<ManifestEntry>,
}

/// Streams a manifest to disk one line at a time.
pub struct ManifestWriter {
    out: BufWriter<File>,
    path: PathBuf,
    ids: HashSet<String>,
}

impl ManifestWriter {
    pub fn create(path: impl AsRef<Path>, header: &ManifestHeader) -> Result<Self, DatasetError> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = ManifestWriter { out: BufWriter::new(file), path, ids: HashSet::new() };
        w.line(header)?;
        Ok(w)
    }

    fn line<T: Serialize>(&mut self, value: &T) -> Result<(), DatasetError> {
        let text = serde_json::to_string(value).expect("manifest records serialize");
        writeln!(self.out, "{text}").map_err(io_err(&self.path))
    }

    pub fn append(&mut self, entry: &ManifestEntry) -> Result<(), DatasetError> {
        if !self.ids.insert(entry.doc.id.clone()) {
            return Err(DatasetError::DuplicateId(entry.doc.id.clone()));
        }
        self.line(entry)
    }

    pub fn finish(mut self) -> Result<(), DatasetError> {
        self.out.flush().map_err(io_err(&self.path))
    }
}

impl DatasetManifest {
    pub fn new(header: ManifestHeader, entries: Vec<ManifestEntry>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::new();
        if let Some(dup) = entries.iter().find(|e| !seen.insert(e.doc.id.as_str())) {
            return Err(DatasetError::DuplicateId(dup.doc.id.clone()));
        }
        Ok(DatasetManifest { header, entries })
    }

    pub fn from_documentations(header: ManifestHeader, docs: Vec<Documentation>) -> Result<Self, DatasetError> {
        Self::new(header, docs.into_iter().map(ManifestEntry::new).collect())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let mut w = ManifestWriter::create(path, &self.header)?;
        for e in &self.entries {
            w.append(e)?;
        }
        w.finish()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(io_err(path))?;
        let parse_err = |line: usize, reason: String| DatasetError::Parse { path: path.to_path_buf(), line, reason };
        let mut header = None;
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            if line.trim().is_empty() {
                continue;
            }
            if header.is_none() {
                header = Some(serde_json::from_str(&line).map_err(|e| parse_err(n + 1, format!("bad header: {e}")))?);
                continue;
            }
            let entry: ManifestEntry = serde_json::from_str(&line).map_err(|e| parse_err(n + 1, e.to_string()))?;
            if !seen.insert(entry.doc.id.clone()) {
                return Err(parse_err(n + 1, format!("duplicate id {}", entry.doc.id)));
            }
            entries.push(entry);
        }
        let header = header.ok_or_else(|| parse_err(1, "manifest is empty".into()))?;
        Ok(DatasetManifest { header, entries })
    }

    /// Whether the manifest was produced with a different atlas file.
    pub fn atlas_mismatch(&self, atlas: &RegionAtlas) -> bool {
        self.header.atlas_sha256 != atlas.sha256()
    }

    /// Concatenates manifests; ids must stay unique. The first header wins.
    pub fn merge(manifests: Vec<DatasetManifest>) -> Result<Self, DatasetError> {
        let mut iter = manifests.into_iter();
        let Some(first) = iter.next() else {
            return Err(DatasetError::Parse { path: PathBuf::new(), line: 0, reason: "no manifests to merge".into() });
        };
        let mut entries = first.entries;
        for m in iter {
            entries.extend(m.entries);
        }
        Self::new(first.header, entries)
    }

    pub fn split_counts(&self) -> BTreeMap<(Label, &'static str), usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            *counts.entry((e.label, e.split.as_str())).or_default() += 1;
        }
        counts
    }
}

/// Number of training entries for a class of `n` at `fraction`.
pub fn train_count(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction) + 1e-9).floor() as usize
}

/// Stratified split: each label's entries are shuffled with a seed derived
/// from `seed` and the label, then the first `floor(n * fraction)` go to
/// training.
pub fn split_dataset(mut manifest: DatasetManifest, train_fraction: f64, seed: u64) -> Result<DatasetManifest, DatasetError> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(DatasetError::Fraction(train_fraction));
    }
    if let Some(e) = manifest.entries.iter().find(|e| e.split != Split::Unassigned) {
        return Err(DatasetError::AlreadySplit(e.doc.id.clone()));
    }
    for label in Label::ALL {
        let mut members: Vec<usize> =
            manifest.entries.iter().enumerate().filter(|(_, e)| e.label == label).map(|(i, _)| i).collect();
        members.shuffle(&mut rng_from_seed(derive_seed(seed, &[label_tag(label.as_str())])));
        let cut = train_count(members.len(), train_fraction);
        for (rank, i) in members.into_iter().enumerate() {
            manifest.entries[i].split = if rank < cut { Split::Train } else { Split::Val };
        }
    }
    Ok(manifest)
}

/// Ids become file names, so they are restricted to `[A-Za-z0-9._-]`.
pub fn check_id(id: &str) -> Result<(), DatasetError> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(DatasetError::BadId(id.to_string()))
    }
}

/// An entry that could not be exported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportReject {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportReport {
    pub manifest: DatasetManifest,
    pub images: usize,
    pub rejects: Vec<ExportReject>,
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// Jitter seed of one rendering: the run seed combined with the entry's own seed.
pub fn render_seed(seed: u64, doc: &Documentation) -> u64 {
    derive_seed(seed, &[doc.seed])
}

/// Renders every entry and writes the class-folder layout. Entries that fail
/// to render are reported, not fatal.
pub fn export_dataset(
    manifest: &DatasetManifest,
    atlas: &RegionAtlas,
    out_dir: &Path,
    seed: u64,
    parallelism: Parallelism,
) -> Result<ExportReport, DatasetError> {
    if let Some(e) = manifest.entries.iter().find(|e| e.split == Split::Unassigned) {
        return Err(DatasetError::Unassigned(e.doc.id.clone()));
    }
    let renderer = SvgRenderer::new(atlas)?;
    let svg_dir = out_dir.join("svg");
    std::fs::create_dir_all(&svg_dir).map_err(io_err(&svg_dir))?;
    for split in [Split::Train, Split::Val] {
        for label in Label::ALL {
            let dir = out_dir.join(split.as_str()).join(label.as_str());
            std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
    }

    let results = map_slice(&manifest.entries, parallelism, |entry| -> Result<String, DatasetError> {
        check_id(&entry.doc.id)?;
        let svg = renderer.render(&entry.doc, render_seed(seed, &entry.doc))?;
        write_bytes(&svg_dir.join(format!("{}.svg", entry.doc.id)), svg.as_bytes())?;
        let png = rasterize_png(&svg)?;
        let rel = format!("{}/{}/{}.png", entry.split.as_str(), entry.label.as_str(), entry.doc.id);
        write_bytes(&out_dir.join(&rel), &png)?;
        Ok(rel)
    });

    let mut out = manifest.clone();
    let mut rejects = Vec::new();
    let mut labels = csv::Writer::from_writer(Vec::new());
    labels.write_record(["id", "label", "split", "path"])?;
    for (entry, result) in out.entries.iter_mut().zip(results) {
        match result {
            Ok(rel) => {
                labels.write_record([entry.doc.id.as_str(), entry.label.as_str(), entry.split.as_str(), rel.as_str()])?;
                entry.image = Some(rel);
            }
            Err(e) => {
                entry.image = None;
                rejects.push(ExportReject { id: entry.doc.id.clone(), error: e.to_string() });
            }
        }
    }
    let labels = labels.into_inner().expect("in-memory writer");
    write_bytes(&out_dir.join(LABELS_FILE), &labels)?;
    out.write(out_dir.join(MANIFEST_FILE))?;
    if !rejects.is_empty() {
        write_jsonl(out_dir.join("export_rejects.jsonl"), &rejects)?;
    }
    let images = out.entries.iter().filter(|e| e.image.is_some()).count();
    Ok(ExportReport { manifest: out, images, rejects })
}

/// Writes one JSON document per line.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for item in items {
        let line = serde_json::to_string(item).expect("records serialize");
        writeln!(out, "{line}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::{Baseline, BaselineClass};
    use crate::test_support::{shipped_atlas, shipped_kb};

    fn manifest(patellar: usize, other: usize) -> DatasetManifest {
        let b = Baseline::new(shipped_atlas()).unwrap();
        let mut docs = b.batch(BaselineClass::Patellar, patellar, 1, "p-", Some(shipped_kb()), Parallelism::Auto).unwrap();
        docs.extend(b.batch(BaselineClass::Other, other, 2, "o-", Some(shipped_kb()), Parallelism::Auto).unwrap());
        DatasetManifest::from_documentations(ManifestHeader::new(shipped_atlas(), 7), docs).unwrap()
    }

    #[test]
    fn round_trip_is_lossless() {
        let m = manifest(1000, 1000);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        m.write(&path).unwrap();
        let back = DatasetManifest::read(&path).unwrap();
        assert_eq!(back, m);
        assert!(!back.atlas_mismatch(shipped_atlas()));
    }

    #[test]
    fn duplicate_ids_and_bad_splits_fail_to_read() {
        let m = manifest(2, 0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        m.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let second = text.lines().nth(1).unwrap();
        std::fs::write(&path, format!("{text}{second}\n")).unwrap();
        let err = DatasetManifest::read(&path).unwrap_err();
        assert!(err.to_string().contains("duplicate id"), "{err}");
        std::fs::write(&path, text.replacen("\"unassigned\"", "\"test\"", 1)).unwrap();
        assert!(matches!(DatasetManifest::read(&path), Err(DatasetError::Parse { line: 2, .. })));
        let entries = m.entries.clone();
        assert!(DatasetManifest::new(m.header.clone(), vec![entries[0].clone(), entries[0].clone()]).is_err());
    }

    #[test]
    fn stratified_split_counts() {
        let m = split_dataset(manifest(1000, 1000), 0.8, 3).unwrap();
        let c = m.split_counts();
        assert_eq!(c[&(Label::PatellarLuxation, "train")], 800);
        assert_eq!(c[&(Label::PatellarLuxation, "val")], 200);
        assert_eq!(c[&(Label::Other, "train")], 800);
        assert_eq!(c[&(Label::Other, "val")], 200);
        let again = split_dataset(manifest(1000, 1000), 0.8, 3).unwrap();
        assert_eq!(m, again);
        assert!(matches!(split_dataset(m, 0.8, 3), Err(DatasetError::AlreadySplit(_))));
        let five = split_dataset(manifest(5, 0), 0.8, 3).unwrap();
        assert_eq!(five.split_counts()[&(Label::PatellarLuxation, "train")], 4);
        assert!(split_dataset(manifest(1, 0), 1.5, 0).is_err());
    }

    #[test]
    fn floor_rule() {
        for n in 0..200usize {
            for pct in 0..=100usize {
                assert_eq!(train_count(n, pct as f64 / 100.0), n * pct / 100, "n={n} pct={pct}");
            }
        }
    }

    #[test]
    fn export_layout_and_determinism() {
        let m = split_dataset(manifest(6, 6), 0.5, 1).unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ra = export_dataset(&m, shipped_atlas(), a.path(), 5, Parallelism::Threads(3)).unwrap();
        let rb = export_dataset(&m, shipped_atlas(), b.path(), 5, Parallelism::Sequential).unwrap();
        assert_eq!(ra.manifest, rb.manifest);
        assert_eq!(ra.images, 12);
        assert!(ra.rejects.is_empty());
        for e in &ra.manifest.entries {
            let rel = e.image.as_ref().unwrap();
            assert!(rel.starts_with(&format!("{}/{}/", e.split.as_str(), e.label.as_str())));
            let pa = std::fs::read(a.path().join(rel)).unwrap();
            let pb = std::fs::read(b.path().join(rel)).unwrap();
            assert_eq!(crate::render::decode_png(&pa).unwrap(), crate::render::decode_png(&pb).unwrap());
            let svg = format!("svg/{}.svg", e.doc.id);
            assert_eq!(std::fs::read(a.path().join(&svg)).unwrap(), std::fs::read(b.path().join(&svg)).unwrap());
        }
        for split in ["train", "val"] {
            for label in ["patellar_luxation", "other"] {
                assert_eq!(std::fs::read_dir(a.path().join(split).join(label)).unwrap().count(), 3);
            }
        }
        let labels = std::fs::read_to_string(a.path().join(LABELS_FILE)).unwrap();
        assert_eq!(labels.lines().count(), 13);
        assert!(labels.starts_with("id,label,split,path\n"));
        let written = DatasetManifest::read(a.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(written, ra.manifest);
    }

    #[test]
    fn export_needs_splits_and_safe_ids() {
        let m = manifest(2, 0);
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(export_dataset(&m, shipped_atlas(), dir.path(), 0, Parallelism::Sequential), Err(DatasetError::Unassigned(_))));
        let mut m = split_dataset(m, 0.5, 0).unwrap();
        m.entries[0].doc.id = "../escape".into();
        let r = export_dataset(&m, shipped_atlas(), dir.path(), 0, Parallelism::Sequential).unwrap();
        assert_eq!(r.rejects.len(), 1);
        assert_eq!(r.images, 1);
    }
}
