//! Region/condition atlas: the discretization of the two-view body map into
//! indexed anatomical regions and a fixed set of stroke conditions.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::documentation::{Abnormality, Documentation};

/// Number of regions every atlas must define.
pub const REGION_COUNT: u16 = 214;
/// Number of conditions every atlas must define.
pub const CONDITION_COUNT: u16 = 7;

/// Text emitted for a documentation without abnormalities.
pub const NO_ABNORMALITIES: &str = "no abnormalities found";

#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("cannot read atlas {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed atlas: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("unknown region index {0}")]
    UnknownRegion(u16),
    #[error("unknown condition index {0}")]
    UnknownCondition(u16),
    #[error("line {line}: {reason}")]
    Decode { line: usize, reason: String },
}

/// 1-based region identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionIndex(pub u16);

/// 1-based condition identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConditionIndex(pub u16);

impl fmt::Display for RegionIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ConditionIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which of the two dog drawings a region belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    /// Face-up drawing (left dog).
    Supine,
    /// Face-down drawing (right dog).
    Prone,
}

/// Side in the physical dog's frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Midline,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::Midline => Side::Midline,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Midline => "midline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Rectangle,
    Circle,
}

/// Region geometry in template pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Rectangle { x: i64, y: i64, w: i64, h: i64 },
    Circle { cx: i64, cy: i64, r: i64 },
}

impl Geometry {
    pub fn shape(&self) -> Shape {
        match self {
            Geometry::Rectangle { .. } => Shape::Rectangle,
            Geometry::Circle { .. } => Shape::Circle,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        match *self {
            Geometry::Rectangle { x, y, w, h } => (x as f64 + w as f64 / 2.0, y as f64 + h as f64 / 2.0),
            Geometry::Circle { cx, cy, .. } => (cx as f64, cy as f64),
        }
    }

    /// Axis-aligned bounds as (min_x, min_y, max_x, max_y).
    pub fn bounds(&self) -> (i64, i64, i64, i64) {
        match *self {
            Geometry::Rectangle { x, y, w, h } => (x, y, x + w, y + h),
            Geometry::Circle { cx, cy, r } => (cx - r, cy - r, cx + r, cy + r),
        }
    }
}

/// RGB stroke color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u8; 3]", into = "[u8; 3]")]
pub struct Rgb(pub u8, pub u8, pub u8);

impl From<[u8; 3]> for Rgb {
    fn from(c: [u8; 3]) -> Self {
        Rgb(c[0], c[1], c[2])
    }
}

impl From<Rgb> for [u8; 3] {
    fn from(c: Rgb) -> Self {
        [c.0, c.1, c.2]
    }
}

impl Rgb {
    pub fn hex(&self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub index: RegionIndex,
    pub label: String,
    pub view: View,
    pub side: Side,
    pub geometry: Geometry,
    pub tags: Vec<String>,
}

impl Region {
    pub fn shape(&self) -> Shape {
        self.geometry.shape()
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }

    /// Label with the leading side word removed ("left knee joint" -> "knee joint").
    pub fn base_label(&self) -> &str {
        match self.side {
            Side::Midline => &self.label,
            side => self
                .label
                .strip_prefix(side.as_str())
                .map(str::trim_start)
                .unwrap_or(&self.label),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub index: ConditionIndex,
    pub label: String,
    pub color: Rgb,
}

/// Background image the regions are laid out on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    /// Resolved path (relative entries are resolved against the atlas file's directory).
    pub path: PathBuf,
    pub width: u32,
    pub height: u32,
}

/// Immutable, validated atlas.
#[derive(Debug, Clone)]
pub struct RegionAtlas {
    template: Template,
    conditions: Vec<Condition>,
    regions: Vec<Region>,
    region_by_label: HashMap<String, RegionIndex>,
    condition_by_label: HashMap<String, ConditionIndex>,
    sha256: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtlas {
    template: RawTemplate,
    conditions: Vec<RawCondition>,
    regions: Vec<RawRegion>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemplate {
    path: String,
    width: i64,
    height: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCondition {
    index: i64,
    label: String,
    color: [u8; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    index: i64,
    label: String,
    view: View,
    side: Side,
    shape: Shape,
    geometry: BTreeMap<String, i64>,
    #[serde(default)]
    tags: Vec<String>,
}

fn invalid(msg: impl Into<String>) -> AtlasError {
    AtlasError::Invalid(msg.into())
}

fn geometry_of(raw: &RawRegion) -> Result<Geometry, AtlasError> {
    let key = |k: &str| {
        raw.geometry
            .get(k)
            .copied()
            .ok_or_else(|| invalid(format!("region {} geometry is missing \"{k}\"", raw.index)))
    };
    let expected: &[&str] = match raw.shape {
        Shape::Rectangle => &["h", "w", "x", "y"],
        Shape::Circle => &["cx", "cy", "r"],
    };
    if let Some(extra) = raw.geometry.keys().find(|k| !expected.contains(&k.as_str())) {
        return Err(invalid(format!("region {} geometry has unexpected key \"{extra}\"", raw.index)));
    }
    Ok(match raw.shape {
        Shape::Rectangle => Geometry::Rectangle { x: key("x")?, y: key("y")?, w: key("w")?, h: key("h")? },
        Shape::Circle => Geometry::Circle { cx: key("cx")?, cy: key("cy")?, r: key("r")? },
    })
}

impl RegionAtlas {
    /// Reads and validates an atlas file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, AtlasError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| AtlasError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_bytes(&bytes, base)
    }

    /// Parses and validates atlas JSON; a relative template path is resolved against `base_dir`.
    pub fn from_bytes(bytes: &[u8], base_dir: &Path) -> Result<Self, AtlasError> {
        let raw: RawAtlas = serde_json::from_slice(bytes)?;
        let sha256 = Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect();
        Self::validate(raw, base_dir, sha256)
    }

    fn validate(raw: RawAtlas, base_dir: &Path, sha256: String) -> Result<Self, AtlasError> {
        let (tw, th) = (raw.template.width, raw.template.height);
        if tw <= 0 || th <= 0 || tw > u32::MAX as i64 || th > u32::MAX as i64 {
            return Err(invalid(format!("template size {tw}x{th} is not positive")));
        }
        let template_path = Path::new(&raw.template.path);
        let template = Template {
            path: if template_path.is_absolute() { template_path.to_path_buf() } else { base_dir.join(template_path) },
            width: tw as u32,
            height: th as u32,
        };

        let mut regions: Vec<Option<Region>> = vec![None; REGION_COUNT as usize];
        let mut labels = HashSet::new();
        for r in &raw.regions {
            if r.index < 1 || r.index > REGION_COUNT as i64 {
                return Err(invalid(format!("region index {} outside 1..={REGION_COUNT}", r.index)));
            }
            let slot = &mut regions[(r.index - 1) as usize];
            if slot.is_some() {
                return Err(invalid(format!("duplicate region index {}", r.index)));
            }
            if r.label.trim().is_empty() {
                return Err(invalid(format!("region {} has an empty label", r.index)));
            }
            if !labels.insert(r.label.clone()) {
                return Err(invalid(format!("duplicate region label \"{}\"", r.label)));
            }
            let geometry = geometry_of(r)?;
            match geometry {
                Geometry::Rectangle { w, h, .. } if w <= 0 || h <= 0 => {
                    return Err(invalid(format!("region {} has degenerate rectangle {w}x{h}", r.index)));
                }
                Geometry::Circle { r: radius, .. } if radius <= 0 => {
                    return Err(invalid(format!("region {} has degenerate circle radius {radius}", r.index)));
                }
                _ => {}
            }
            let (x0, y0, x1, y1) = geometry.bounds();
            if x0 < 0 || y0 < 0 || x1 > tw || y1 > th {
                return Err(invalid(format!(
                    "region {} geometry ({x0},{y0})-({x1},{y1}) lies outside the {tw}x{th} canvas",
                    r.index
                )));
            }
            if r.side != Side::Midline && !r.label.starts_with(&format!("{} ", r.side.as_str())) {
                return Err(invalid(format!(
                    "region {} label \"{}\" does not start with its side \"{}\"",
                    r.index,
                    r.label,
                    r.side.as_str()
                )));
            }
            *slot = Some(Region {
                index: RegionIndex(r.index as u16),
                label: r.label.clone(),
                view: r.view,
                side: r.side,
                geometry,
                tags: r.tags.clone(),
            });
        }
        if raw.regions.len() != REGION_COUNT as usize {
            return Err(invalid(format!("expected {REGION_COUNT} regions, found {}", raw.regions.len())));
        }
        let regions: Vec<Region> = regions.into_iter().map(|r| r.expect("all slots filled")).collect();

        let mut conditions: Vec<Option<Condition>> = vec![None; CONDITION_COUNT as usize];
        let mut colors = HashSet::new();
        let mut condition_labels = HashSet::new();
        for c in &raw.conditions {
            if c.index < 1 || c.index > CONDITION_COUNT as i64 {
                return Err(invalid(format!("condition index {} outside 1..={CONDITION_COUNT}", c.index)));
            }
            let slot = &mut conditions[(c.index - 1) as usize];
            if slot.is_some() {
                return Err(invalid(format!("duplicate condition index {}", c.index)));
            }
            if c.label.trim().is_empty() || !condition_labels.insert(c.label.clone()) {
                return Err(invalid(format!("condition {} label is empty or repeated", c.index)));
            }
            if !colors.insert(c.color) {
                return Err(invalid(format!("condition {} reuses color {:?}", c.index, c.color)));
            }
            *slot = Some(Condition { index: ConditionIndex(c.index as u16), label: c.label.clone(), color: c.color.into() });
        }
        if raw.conditions.len() != CONDITION_COUNT as usize {
            return Err(invalid(format!("expected {CONDITION_COUNT} conditions, found {}", raw.conditions.len())));
        }
        let conditions: Vec<Condition> = conditions.into_iter().map(|c| c.expect("all slots filled")).collect();

        let paired: HashSet<(Side, &str)> = regions.iter().map(|r| (r.side, r.base_label())).collect();
        for r in regions.iter().filter(|r| r.side != Side::Midline) {
            if !paired.contains(&(r.side.opposite(), r.base_label())) {
                return Err(invalid(format!(
                    "region {} \"{}\" has no {}-side counterpart",
                    r.index,
                    r.label,
                    r.side.opposite().as_str()
                )));
            }
        }

        let region_by_label = regions.iter().map(|r| (r.label.clone(), r.index)).collect();
        let condition_by_label = conditions.iter().map(|c| (c.label.clone(), c.index)).collect();
        Ok(RegionAtlas { template, conditions, regions, region_by_label, condition_by_label, sha256 })
    }

    pub fn template(&self) -> &Template {
        &self.template
    }

    /// Hex SHA-256 of the atlas file bytes.
    pub fn sha256(&self) -> &str {
        &self.sha256
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn region(&self, index: RegionIndex) -> Result<&Region, AtlasError> {
        match index.0 {
            0 => None,
            i => self.regions.get(i as usize - 1),
        }
        .ok_or(AtlasError::UnknownRegion(index.0))
    }

    pub fn condition(&self, index: ConditionIndex) -> Result<&Condition, AtlasError> {
        match index.0 {
            0 => None,
            i => self.conditions.get(i as usize - 1),
        }
        .ok_or(AtlasError::UnknownCondition(index.0))
    }

    pub fn region_by_label(&self, label: &str) -> Option<&Region> {
        self.region_by_label.get(label).map(|i| &self.regions[i.0 as usize - 1])
    }

    pub fn condition_by_label(&self, label: &str) -> Option<&Condition> {
        self.condition_by_label.get(label).map(|i| &self.conditions[i.0 as usize - 1])
    }

    /// Regions on `side` carrying `tag`, in index order.
    pub fn tagged(&self, tag: &str, side: Side) -> Vec<&Region> {
        self.regions.iter().filter(|r| r.side == side && r.has_tag(tag)).collect()
    }

    /// Checks both indices of an abnormality.
    pub fn check(&self, abnormality: &Abnormality) -> Result<(), AtlasError> {
        self.region(abnormality.region)?;
        self.condition(abnormality.condition)?;
        Ok(())
    }

    /// Renders abnormalities as "<region label>: <condition label>" lines in
    /// ascending region order.
    pub fn encode_abnormalities(&self, abnormalities: &[Abnormality]) -> Result<String, AtlasError> {
        if abnormalities.is_empty() {
            return Ok(NO_ABNORMALITIES.to_string());
        }
        let mut sorted: Vec<&Abnormality> = abnormalities.iter().collect();
        sorted.sort_by_key(|a| (a.region, a.condition));
        let lines = sorted
            .into_iter()
            .map(|a| Ok(format!("{}: {}", self.region(a.region)?.label, self.condition(a.condition)?.label)))
            .collect::<Result<Vec<_>, AtlasError>>()?;
        Ok(lines.join("\n"))
    }

    /// Inverse of [`RegionAtlas::encode_abnormalities`].
    pub fn decode_abnormalities(&self, text: &str) -> Result<Vec<Abnormality>, AtlasError> {
        if text.trim() == NO_ABNORMALITIES {
            return Ok(Vec::new());
        }
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, line)| {
                let decode_err = |reason: String| AtlasError::Decode { line: n + 1, reason };
                let (region, condition) =
                    line.rsplit_once(": ").ok_or_else(|| decode_err("missing \": \" separator".into()))?;
                let region = self
                    .region_by_label(region.trim())
                    .ok_or_else(|| decode_err(format!("unknown region label \"{}\"", region.trim())))?;
                let condition = self
                    .condition_by_label(condition.trim())
                    .ok_or_else(|| decode_err(format!("unknown condition label \"{}\"", condition.trim())))?;
                Ok(Abnormality { region: region.index, condition: condition.index })
            })
            .collect()
    }
}

/// Few-shot encoding of one documentation.
pub fn encode_documentation_as_text(doc: &Documentation, atlas: &RegionAtlas) -> Result<String, AtlasError> {
    atlas.encode_abnormalities(&doc.abnormalities)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{atlas_json, shipped_atlas};
    use proptest::prelude::*;
    use serde_json::Value;

    fn ab(r: u16, c: u16) -> Abnormality {
        Abnormality::new(r, c)
    }

    fn mutated(f: impl FnOnce(&mut Value)) -> Result<RegionAtlas, AtlasError> {
        let mut v: Value = serde_json::from_str(atlas_json()).unwrap();
        f(&mut v);
        RegionAtlas::from_bytes(serde_json::to_string(&v).unwrap().as_bytes(), Path::new("."))
    }

    #[test]
    fn shipped_atlas_counts() {
        let atlas = shipped_atlas();
        assert_eq!(atlas.regions().len(), 214);
        assert_eq!(atlas.conditions().len(), 7);
        assert_eq!(atlas.sha256().len(), 64);
    }

    #[test]
    fn shipped_palette_marks_acute_red_and_chronic_black() {
        let atlas = shipped_atlas();
        let acute = atlas.condition_by_label("acute inflammation").unwrap();
        let chronic = atlas.condition_by_label("chronic change").unwrap();
        assert!(acute.color.0 > 180 && acute.color.1 < 60 && acute.color.2 < 60, "{:?}", acute.color);
        assert_eq!(chronic.color, Rgb(0, 0, 0));
    }

    #[test]
    fn every_index_resolves_and_nothing_else() {
        let atlas = shipped_atlas();
        for i in 1..=214 {
            assert_eq!(atlas.region(RegionIndex(i)).unwrap().index.0, i);
        }
        for i in 1..=7 {
            assert_eq!(atlas.condition(ConditionIndex(i)).unwrap().index.0, i);
        }
        for i in [0, 215, 999, u16::MAX] {
            assert!(matches!(atlas.region(RegionIndex(i)), Err(AtlasError::UnknownRegion(_))));
        }
        for i in [0, 8, 100] {
            assert!(matches!(atlas.condition(ConditionIndex(i)), Err(AtlasError::UnknownCondition(_))));
        }
    }

    #[test]
    fn mirrored_counterparts_exist() {
        let atlas = shipped_atlas();
        for r in atlas.regions().iter().filter(|r| r.side != Side::Midline) {
            let other = format!("{} {}", r.side.opposite().as_str(), r.base_label());
            assert!(atlas.region_by_label(&other).is_some(), "{}", r.label);
        }
    }

    #[test]
    fn duplicate_region_index_is_rejected() {
        let err = mutated(|v| v["regions"][12]["index"] = 12.into()).unwrap_err();
        assert_eq!(err.to_string(), "duplicate region index 12");
    }

    #[test]
    fn zero_radius_circle_is_rejected() {
        let err = mutated(|v| {
            let r = v["regions"].as_array_mut().unwrap().iter_mut().find(|r| r["shape"] == "circle").unwrap();
            r["geometry"]["r"] = 0.into();
        })
        .unwrap_err();
        assert!(err.to_string().contains("degenerate circle"), "{err}");
    }

    #[test]
    fn zero_width_rectangle_is_rejected() {
        let err = mutated(|v| {
            let r = v["regions"].as_array_mut().unwrap().iter_mut().find(|r| r["shape"] == "rectangle").unwrap();
            r["geometry"]["w"] = 0.into();
        })
        .unwrap_err();
        assert!(err.to_string().contains("degenerate rectangle"), "{err}");
    }

    #[test]
    fn out_of_canvas_geometry_is_rejected() {
        let err = mutated(|v| v["regions"][5]["geometry"]["cx"] = 999.into()).unwrap_err();
        assert!(err.to_string().contains("outside"), "{err}");
    }

    #[test]
    fn wrong_counts_are_rejected() {
        let err = mutated(|v| {
            v["regions"].as_array_mut().unwrap().pop();
        })
        .unwrap_err();
        assert!(err.to_string().contains("expected 214 regions"), "{err}");
        let err = mutated(|v| {
            v["conditions"].as_array_mut().unwrap().pop();
        })
        .unwrap_err();
        assert!(err.to_string().contains("expected 7 conditions"), "{err}");
    }

    #[test]
    fn repeated_color_and_missing_counterpart_are_rejected() {
        let err = mutated(|v| v["conditions"][1]["color"] = v["conditions"][0]["color"].clone()).unwrap_err();
        assert!(err.to_string().contains("reuses color"), "{err}");
        let err = mutated(|v| v["regions"][2]["label"] = "right somewhere else".into()).unwrap_err();
        assert!(err.to_string().contains("counterpart"), "{err}");
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        let err = RegionAtlas::from_bytes(b"{\"regions\": [", Path::new(".")).unwrap_err();
        assert!(matches!(err, AtlasError::Parse(_)));
    }

    #[test]
    fn knee_example_encodes_to_label_pair() {
        let atlas = shipped_atlas();
        assert_eq!(atlas.region(RegionIndex(12)).unwrap().label, "left knee joint");
        assert_eq!(atlas.condition(ConditionIndex(3)).unwrap().label, "acute inflammation");
        assert_eq!(atlas.encode_abnormalities(&[ab(12, 3)]).unwrap(), "left knee joint: acute inflammation");
    }

    #[test]
    fn empty_list_encodes_to_sentinel() {
        assert_eq!(shipped_atlas().encode_abnormalities(&[]).unwrap(), "no abnormalities found");
    }

    #[test]
    fn lines_follow_ascending_region_order() {
        let atlas = shipped_atlas();
        let text = atlas.encode_abnormalities(&[ab(40, 1), ab(7, 2)]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with(&atlas.region(RegionIndex(7)).unwrap().label));
        assert!(lines[1].starts_with(&atlas.region(RegionIndex(40)).unwrap().label));
    }

    #[test]
    fn unknown_indices_fail_to_encode() {
        let atlas = shipped_atlas();
        assert!(matches!(atlas.encode_abnormalities(&[ab(215, 1)]), Err(AtlasError::UnknownRegion(215))));
        assert!(matches!(atlas.encode_abnormalities(&[ab(3, 8)]), Err(AtlasError::UnknownCondition(8))));
    }

    fn distinct_region_set() -> impl Strategy<Value = Vec<Abnormality>> {
        proptest::collection::btree_map(1u16..=214, 1u16..=7, 0..40)
            .prop_map(|m| m.into_iter().map(|(r, c)| ab(r, c)).collect())
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(mut set in distinct_region_set()) {
            let atlas = shipped_atlas();
            let text = atlas.encode_abnormalities(&set).unwrap();
            let mut back = atlas.decode_abnormalities(&text).unwrap();
            set.sort();
            back.sort();
            prop_assert_eq!(set, back);
        }

        #[test]
        fn encoding_is_injective(a in distinct_region_set(), b in distinct_region_set()) {
            let atlas = shipped_atlas();
            let (mut sa, mut sb) = (a.clone(), b.clone());
            sa.sort();
            sb.sort();
            let same_text = atlas.encode_abnormalities(&a).unwrap() == atlas.encode_abnormalities(&b).unwrap();
            prop_assert_eq!(same_text, sa == sb);
        }
    }
}
