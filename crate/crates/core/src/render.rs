//! Sketch-style stroke rendering on the body-map template.
//!
//! Rectangular regions get a jittered hand-drawn line between the midpoints of
//! their short edges; circular regions get a filled octagon whose vertices are
//! jittered by up to 15% of the radius. Output SVG is byte-stable for a given
//! (documentation, atlas, seed).

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::Rng;
use thiserror::Error;

use crate::atlas::{AtlasError, ConditionIndex, Geometry, Region, RegionAtlas, RegionIndex, Rgb};
use crate::documentation::Documentation;
use crate::seed::{derive_seed, rng_from_seed, SeededRng};

/// Largest per-coordinate endpoint shift of a line, in pixels.
pub const LINE_JITTER_PX: i32 = 5;
/// Largest per-coordinate vertex shift of a circle, as a fraction of its radius.
pub const CIRCLE_JITTER_FRACTION: f64 = 0.15;
/// Largest perpendicular offset of the interior line control points.
pub const LINE_BOW_PX: f64 = 2.0;
/// Octagon vertex count.
pub const CIRCLE_VERTICES: usize = 8;
/// Samples per Catmull-Rom segment (three segments per line).
const SAMPLES_PER_SEGMENT: usize = 8;
const LINE_WIDTH: f64 = 4.0;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Atlas(#[from] AtlasError),
    #[error("region {0} is not rectangular")]
    NotRectangle(u16),
    #[error("region {0} is not circular")]
    NotCircle(u16),
    #[error("cannot read template {path}: {source}")]
    TemplateIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("template {0} is not an <svg> document")]
    TemplateInvalid(PathBuf),
    #[error("rasterization failed: {0}")]
    Raster(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

/// Source of the random offsets applied to stroke geometry.
pub trait Jitter {
    /// Uniform integer in `[-bound, bound]`.
    fn pixel(&mut self, bound: i32) -> i32;
    /// Uniform real in `[-bound, bound]`.
    fn real(&mut self, bound: f64) -> f64;
}

impl Jitter for SeededRng {
    fn pixel(&mut self, bound: i32) -> i32 {
        self.gen_range(-bound..=bound)
    }

    fn real(&mut self, bound: f64) -> f64 {
        if bound <= 0.0 {
            0.0
        } else {
            self.gen_range(-bound..=bound)
        }
    }
}

/// Jitter that never moves anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroJitter;

impl Jitter for ZeroJitter {
    fn pixel(&mut self, _bound: i32) -> i32 {
        0
    }

    fn real(&mut self, _bound: f64) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrokeKind {
    Line,
    FilledPolygon,
}

/// One rendered abnormality.
#[derive(Debug, Clone, PartialEq)]
pub struct StrokeSpec {
    pub region: RegionIndex,
    pub condition: ConditionIndex,
    pub kind: StrokeKind,
    /// Polyline samples for lines; the 8 vertices (implicitly closed) for polygons.
    pub points: Vec<Point>,
    pub color: Rgb,
}

/// Canvas size in template pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Canvas {
    pub width: f64,
    pub height: f64,
}

impl Canvas {
    fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }
}

impl From<&RegionAtlas> for Canvas {
    fn from(atlas: &RegionAtlas) -> Self {
        Canvas { width: atlas.template().width as f64, height: atlas.template().height as f64 }
    }
}

/// Start and end of a rectangle's stroke: midpoints of the left/right edges
/// for wide (or square) boxes, of the top/bottom edges for tall ones.
pub fn line_anchor_points(region: &Region) -> Result<(Point, Point), RenderError> {
    match region.geometry {
        Geometry::Rectangle { x, y, w, h } => {
            let (x, y, w, h) = (x as f64, y as f64, w as f64, h as f64);
            Ok(if w >= h {
                (Point::new(x, y + h / 2.0), Point::new(x + w, y + h / 2.0))
            } else {
                (Point::new(x + w / 2.0, y), Point::new(x + w / 2.0, y + h))
            })
        }
        Geometry::Circle { .. } => Err(RenderError::NotRectangle(region.index.0)),
    }
}

fn catmull_rom(p0: Point, p1: Point, p2: Point, p3: Point, t: f64) -> Point {
    let t2 = t * t;
    let t3 = t2 * t;
    let blend = |a: f64, b: f64, c: f64, d: f64| {
        0.5 * ((2.0 * b) + (-a + c) * t + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2 + (-a + 3.0 * b - 3.0 * c + d) * t3)
    };
    Point::new(blend(p0.x, p1.x, p2.x, p3.x), blend(p0.y, p1.y, p2.y, p3.y))
}

/// Jittered anchors `(s_hat, e_hat)` plus the sampled hand-drawn path between them.
pub fn line_path<J: Jitter>(region: &Region, jitter: &mut J) -> Result<(Point, Point, Vec<Point>), RenderError> {
    let (s, e) = line_anchor_points(region)?;
    let mut shift = |p: Point| {
        let dx = jitter.pixel(LINE_JITTER_PX);
        let dy = jitter.pixel(LINE_JITTER_PX);
        Point::new(p.x + dx as f64, p.y + dy as f64)
    };
    let s_hat = shift(s);
    let e_hat = shift(e);

    let (dx, dy) = (e_hat.x - s_hat.x, e_hat.y - s_hat.y);
    let len = dx.hypot(dy);
    let normal = if len > 0.0 { Point::new(-dy / len, dx / len) } else { Point::new(0.0, 0.0) };
    let mut bowed = |t: f64| {
        let base = s_hat.lerp(e_hat, t);
        let d = jitter.real(LINE_BOW_PX);
        Point::new(base.x + normal.x * d, base.y + normal.y * d)
    };
    let c1 = bowed(1.0 / 3.0);
    let c2 = bowed(2.0 / 3.0);

    let ctrl = [s_hat, s_hat, c1, c2, e_hat, e_hat];
    let mut points = Vec::with_capacity(3 * SAMPLES_PER_SEGMENT + 1);
    for seg in 0..3 {
        for k in 0..SAMPLES_PER_SEGMENT {
            let t = k as f64 / SAMPLES_PER_SEGMENT as f64;
            points.push(catmull_rom(ctrl[seg], ctrl[seg + 1], ctrl[seg + 2], ctrl[seg + 3], t));
        }
    }
    points[0] = s_hat;
    points.push(e_hat);
    Ok((s_hat, e_hat, points))
}

pub fn render_line<J: Jitter>(
    region: &Region,
    condition: ConditionIndex,
    color: Rgb,
    canvas: Canvas,
    jitter: &mut J,
) -> Result<StrokeSpec, RenderError> {
    let (_, _, points) = line_path(region, jitter)?;
    Ok(StrokeSpec {
        region: region.index,
        condition,
        kind: StrokeKind::Line,
        points: points.into_iter().map(|p| canvas.clamp(p)).collect(),
        color,
    })
}

/// The 8 perturbed vertices of a circle region, starting at angle 0 and
/// advancing 45 degrees each.
pub fn circle_vertices<J: Jitter>(region: &Region, jitter: &mut J) -> Result<Vec<Point>, RenderError> {
    let Geometry::Circle { cx, cy, r } = region.geometry else {
        return Err(RenderError::NotCircle(region.index.0));
    };
    if r <= 0 {
        return Err(RenderError::NotCircle(region.index.0));
    }
    let (cx, cy, r) = (cx as f64, cy as f64, r as f64);
    let bound = CIRCLE_JITTER_FRACTION * r;
    Ok((0..CIRCLE_VERTICES)
        .map(|k| {
            let angle = k as f64 * std::f64::consts::FRAC_PI_4;
            let dx = jitter.real(bound);
            let dy = jitter.real(bound);
            Point::new(cx + r * angle.cos() + dx, cy + r * angle.sin() + dy)
        })
        .collect())
}

pub fn render_circle<J: Jitter>(
    region: &Region,
    condition: ConditionIndex,
    color: Rgb,
    canvas: Canvas,
    jitter: &mut J,
) -> Result<StrokeSpec, RenderError> {
    let vertices = circle_vertices(region, jitter)?;
    Ok(StrokeSpec {
        region: region.index,
        condition,
        kind: StrokeKind::FilledPolygon,
        points: vertices.into_iter().map(|p| canvas.clamp(p)).collect(),
        color,
    })
}

/// Strokes of a documentation in region order, each drawn from its own sub-seed.
pub fn documentation_strokes(
    doc: &Documentation,
    atlas: &RegionAtlas,
    seed: u64,
) -> Result<Vec<StrokeSpec>, RenderError> {
    for a in &doc.abnormalities {
        atlas.check(a)?;
    }
    let canvas = Canvas::from(atlas);
    let mut ordered = doc.abnormalities.clone();
    ordered.sort();
    ordered
        .iter()
        .map(|a| {
            let region = atlas.region(a.region)?;
            let color = atlas.condition(a.condition)?.color;
            let mut rng = rng_from_seed(derive_seed(seed, &[u64::from(a.region.0), u64::from(a.condition.0)]));
            match region.geometry {
                Geometry::Rectangle { .. } => render_line(region, a.condition, color, canvas, &mut rng),
                Geometry::Circle { .. } => render_circle(region, a.condition, color, canvas, &mut rng),
            }
        })
        .collect()
}

pub(crate) fn escape_xml(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn points_attr(points: &[Point]) -> String {
    let mut s = String::new();
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:.2},{:.2}", p.x, p.y);
    }
    s
}

/// Reads the atlas template once and composes documentation SVGs over it.
#[derive(Debug, Clone)]
pub struct SvgRenderer<'a> {
    atlas: &'a RegionAtlas,
    template: String,
}

impl<'a> SvgRenderer<'a> {
    pub fn new(atlas: &'a RegionAtlas) -> Result<Self, RenderError> {
        let path = &atlas.template().path;
        let text = std::fs::read_to_string(path)
            .map_err(|source| RenderError::TemplateIo { path: path.clone(), source })?;
        Ok(SvgRenderer { atlas, template: template_element(&text).ok_or_else(|| RenderError::TemplateInvalid(path.clone()))? })
    }

    pub fn atlas(&self) -> &RegionAtlas {
        self.atlas
    }

    /// Opening of a canvas-sized SVG with the template as its first layer.
    pub(crate) fn open_canvas(&self, out: &mut String, id: &str) {
        let t = self.atlas.template();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" data-id="{id}">"#,
            w = t.width,
            h = t.height,
            id = escape_xml(id)
        );
        out.push_str("<g id=\"template\">\n");
        out.push_str(&self.template);
        out.push_str("\n</g>\n");
    }

    pub fn render(&self, doc: &Documentation, seed: u64) -> Result<String, RenderError> {
        let strokes = documentation_strokes(doc, self.atlas, seed)?;
        let mut svg = String::new();
        self.open_canvas(&mut svg, &doc.id);
        svg.push_str("<g id=\"strokes\" stroke-linecap=\"round\" stroke-linejoin=\"round\">\n");
        for s in &strokes {
            let common = format!(r#"class="stroke" data-region="{}" data-condition="{}""#, s.region, s.condition);
            match s.kind {
                StrokeKind::Line => {
                    let _ = writeln!(
                        svg,
                        r#"<polyline {common} fill="none" stroke="{}" stroke-width="{LINE_WIDTH}" points="{}"/>"#,
                        s.color.hex(),
                        points_attr(&s.points)
                    );
                }
                StrokeKind::FilledPolygon => {
                    let _ = writeln!(
                        svg,
                        r#"<polygon {common} fill="{}" stroke="none" points="{}"/>"#,
                        s.color.hex(),
                        points_attr(&s.points)
                    );
                }
            }
        }
        svg.push_str("</g>\n</svg>\n");
        Ok(svg)
    }
}

/// The template's root `<svg>` element with any prolog stripped.
fn template_element(text: &str) -> Option<String> {
    let start = text.find("<svg")?;
    let body = text[start..].trim_end();
    body.ends_with("</svg>").then(|| body.to_string())
}

/// Composes one documentation as SVG.
pub fn render_documentation(doc: &Documentation, atlas: &RegionAtlas, seed: u64) -> Result<String, RenderError> {
    SvgRenderer::new(atlas)?.render(doc, seed)
}

/// Rasterizes an SVG document at its native size and encodes it as PNG.
pub fn rasterize_png(svg: &str) -> Result<Vec<u8>, RenderError> {
    use resvg::{tiny_skia, usvg};
    let tree = usvg::Tree::from_str(svg, &usvg::Options::default()).map_err(|e| RenderError::Raster(e.to_string()))?;
    let size = tree.size().to_int_size();
    let mut pixmap = tiny_skia::Pixmap::new(size.width(), size.height())
        .ok_or_else(|| RenderError::Raster(format!("cannot allocate {}x{}", size.width(), size.height())))?;
    pixmap.fill(tiny_skia::Color::WHITE);
    resvg::render(&tree, tiny_skia::Transform::default(), &mut pixmap.as_mut());
    pixmap.encode_png().map_err(|e| RenderError::Raster(e.to_string()))
}

/// Decodes a PNG into (width, height, RGBA bytes).
pub fn decode_png(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>), RenderError> {
    let pixmap = resvg::tiny_skia::Pixmap::decode_png(bytes).map_err(|e| RenderError::Raster(e.to_string()))?;
    Ok((pixmap.width(), pixmap.height(), pixmap.data().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{Side, View};
    use crate::documentation::{Abnormality, DiagnosisSpec, Provenance};
    use crate::test_support::shipped_atlas;

    fn rect(x: i64, y: i64, w: i64, h: i64) -> Region {
        Region {
            index: RegionIndex(1),
            label: "test".into(),
            view: View::Supine,
            side: Side::Midline,
            geometry: Geometry::Rectangle { x, y, w, h },
            tags: vec![],
        }
    }

    fn circle(cx: i64, cy: i64, r: i64) -> Region {
        Region { geometry: Geometry::Circle { cx, cy, r }, ..rect(0, 0, 1, 1) }
    }

    const BIG: Canvas = Canvas { width: 10_000.0, height: 10_000.0 };

    fn doc(pairs: &[(u16, u16)]) -> Documentation {
        Documentation {
            id: "doc-1".into(),
            metadata: None,
            diagnosis: DiagnosisSpec::patellar(Some(1), None),
            abnormalities: pairs.iter().map(|&(r, c)| Abnormality::new(r, c)).collect(),
            provenance: Provenance::RuleBased,
            seed: 5,
        }
    }

    #[test]
    fn wide_box_anchors_on_vertical_edges() {
        let (s, e) = line_anchor_points(&rect(0, 0, 100, 10)).unwrap();
        assert_eq!((s, e), (Point::new(0.0, 5.0), Point::new(100.0, 5.0)));
    }

    #[test]
    fn tall_box_anchors_on_horizontal_edges() {
        let (s, e) = line_anchor_points(&rect(0, 0, 10, 100)).unwrap();
        assert_eq!((s, e), (Point::new(5.0, 0.0), Point::new(5.0, 100.0)));
    }

    #[test]
    fn square_box_uses_horizontal_anchors() {
        let (s, e) = line_anchor_points(&rect(10, 20, 30, 30)).unwrap();
        assert_eq!((s, e), (Point::new(10.0, 35.0), Point::new(40.0, 35.0)));
    }

    #[test]
    fn circles_have_no_line_anchors() {
        assert!(matches!(line_anchor_points(&circle(5, 5, 3)), Err(RenderError::NotRectangle(1))));
        assert!(matches!(circle_vertices(&rect(0, 0, 4, 4), &mut ZeroJitter), Err(RenderError::NotCircle(1))));
        assert!(matches!(circle_vertices(&circle(5, 5, 0), &mut ZeroJitter), Err(RenderError::NotCircle(1))));
    }

    #[test]
    fn zero_jitter_line_ends_at_anchors() {
        let region = rect(10, 10, 80, 20);
        let s = render_line(&region, ConditionIndex(1), Rgb(0, 0, 0), BIG, &mut ZeroJitter).unwrap();
        assert_eq!(s.points.first().copied(), Some(Point::new(10.0, 20.0)));
        assert_eq!(s.points.last().copied(), Some(Point::new(90.0, 20.0)));
        assert!(s.points.iter().all(|p| (p.y - 20.0).abs() < 1e-12));
        assert!(s.points.len() >= 16);
    }

    #[test]
    fn line_endpoints_stay_within_five_pixels() {
        let region = rect(100, 100, 60, 14);
        let (s, e) = line_anchor_points(&region).unwrap();
        for seed in 0..1000 {
            let mut rng = rng_from_seed(seed);
            let (sh, eh, pts) = line_path(&region, &mut rng).unwrap();
            for (a, b) in [(s, sh), (e, eh)] {
                assert!((a.x - b.x).abs() <= 5.0 && (a.y - b.y).abs() <= 5.0);
                assert_eq!(b.x.fract(), a.x.fract(), "integer pixel offsets");
            }
            assert_eq!(pts[0], sh);
            assert_eq!(*pts.last().unwrap(), eh);
        }
    }

    #[test]
    fn line_rendering_repeats_under_a_seed() {
        let region = rect(100, 100, 60, 14);
        let a = render_line(&region, ConditionIndex(2), Rgb(1, 2, 3), BIG, &mut rng_from_seed(9)).unwrap();
        let b = render_line(&region, ConditionIndex(2), Rgb(1, 2, 3), BIG, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_jitter_circle_is_a_regular_octagon() {
        let s = render_circle(&circle(0, 0, 10), ConditionIndex(1), Rgb(0, 0, 0), BIG, &mut ZeroJitter);
        // the big canvas would clamp negatives, so check the raw vertices
        assert!(s.is_ok());
        let v = circle_vertices(&circle(0, 0, 10), &mut ZeroJitter).unwrap();
        let h = 10.0 * std::f64::consts::FRAC_1_SQRT_2;
        let expect = [(10.0, 0.0), (h, h), (0.0, 10.0), (-h, h), (-10.0, 0.0), (-h, -h), (0.0, -10.0), (h, -h)];
        for (p, (x, y)) in v.iter().zip(expect) {
            assert!((p.x - x).abs() < 1e-9 && (p.y - y).abs() < 1e-9, "{p:?} vs ({x},{y})");
        }
    }

    #[test]
    fn circle_vertices_stay_within_fifteen_percent() {
        let region = circle(200, 200, 10);
        let base = circle_vertices(&region, &mut ZeroJitter).unwrap();
        for seed in 0..1000 {
            let v = circle_vertices(&region, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(v.len(), 8);
            for (p, q) in v.iter().zip(&base) {
                assert!((p.x - q.x).abs() <= 1.5 && (p.y - q.y).abs() <= 1.5);
            }
        }
    }

    #[test]
    fn rendered_svg_has_one_stroke_per_abnormality() {
        let atlas = shipped_atlas();
        let d = doc(&[(40, 1), (12, 3), (2, 7), (150, 2)]);
        let svg = render_documentation(&d, atlas, 11).unwrap();
        assert_eq!(svg.matches("class=\"stroke\"").count(), 4);
        let order: Vec<usize> = ["data-region=\"2\"", "data-region=\"12\"", "data-region=\"40\"", "data-region=\"150\""]
            .iter()
            .map(|k| svg.find(k).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(svg, render_documentation(&d, atlas, 11).unwrap());
        assert_ne!(svg, render_documentation(&d, atlas, 12).unwrap());
    }

    #[test]
    fn stroke_colors_match_conditions() {
        let atlas = shipped_atlas();
        let d = doc(&[(12, 3), (13, 7), (50, 1), (51, 6)]);
        for s in documentation_strokes(&d, atlas, 3).unwrap() {
            assert_eq!(s.color, atlas.condition(s.condition).unwrap().color);
        }
    }

    #[test]
    fn sub_seeds_do_not_depend_on_list_order() {
        let atlas = shipped_atlas();
        let a = documentation_strokes(&doc(&[(12, 3), (40, 1)]), atlas, 8).unwrap();
        let b = documentation_strokes(&doc(&[(40, 1), (12, 3)]), atlas, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_range_region_fails_before_output() {
        let atlas = shipped_atlas();
        let err = render_documentation(&doc(&[(12, 3), (215, 1)]), atlas, 1).unwrap_err();
        assert!(matches!(err, RenderError::Atlas(AtlasError::UnknownRegion(215))));
    }

    #[test]
    fn missing_template_is_reported() {
        let atlas = shipped_atlas();
        let json = crate::test_support::atlas_json().replace("template.svg", "nope.svg");
        let moved = RegionAtlas::from_bytes(json.as_bytes(), atlas.template().path.parent().unwrap()).unwrap();
        assert!(matches!(SvgRenderer::new(&moved), Err(RenderError::TemplateIo { .. })));
    }

    #[test]
    fn rasterizes_at_template_size() {
        let atlas = shipped_atlas();
        let svg = render_documentation(&doc(&[(12, 3)]), atlas, 1).unwrap();
        let png = rasterize_png(&svg).unwrap();
        let (w, h, rgba) = decode_png(&png).unwrap();
        assert_eq!((w, h), (atlas.template().width, atlas.template().height));
        assert_eq!(rgba.len(), (w * h * 4) as usize);
    }

    #[test]
    fn shipped_regions_keep_strokes_inside_canvas() {
        let atlas = shipped_atlas();
        let all: Vec<(u16, u16)> = (1..=214).map(|r| (r, 1 + r % 7)).collect();
        let canvas = Canvas::from(atlas);
        for seed in 0..20 {
            for s in documentation_strokes(&doc(&all), atlas, seed).unwrap() {
                assert!(s.points.iter().all(|p| p.x >= 0.0 && p.y >= 0.0 && p.x <= canvas.width && p.y <= canvas.height));
            }
        }
    }
}
