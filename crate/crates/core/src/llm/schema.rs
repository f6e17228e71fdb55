//! Output constraints and a validator for the JSON Schema subset they use.

use std::collections::BTreeMap;

use regex::Regex;
use serde_json::{json, Map, Value};

use crate::atlas::RegionAtlas;

/// Error raised while building a constraint.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid constraint: {0}")]
pub struct SchemaError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum JsonType {
    Object,
    Array,
    String,
    Integer,
    Number,
    Boolean,
    Null,
}

impl JsonType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "object" => JsonType::Object,
            "array" => JsonType::Array,
            "string" => JsonType::String,
            "integer" => JsonType::Integer,
            "number" => JsonType::Number,
            "boolean" => JsonType::Boolean,
            "null" => JsonType::Null,
            _ => return None,
        })
    }

    fn matches(self, v: &Value) -> bool {
        match self {
            JsonType::Object => v.is_object(),
            JsonType::Array => v.is_array(),
            JsonType::String => v.is_string(),
            JsonType::Integer => v.is_i64() || v.is_u64() || v.as_f64().is_some_and(|f| f.fract() == 0.0),
            JsonType::Number => v.is_number(),
            JsonType::Boolean => v.is_boolean(),
            JsonType::Null => v.is_null(),
        }
    }
}

/// A compiled schema node. Supports `type`, `enum`, `pattern`, `minLength`,
/// `maxLength`, `minimum`, `maximum`, `properties`, `required`,
/// `additionalProperties` (boolean), `items`, `minItems` and `maxItems`.
#[derive(Debug, Clone)]
struct Node {
    types: Option<Vec<JsonType>>,
    enumeration: Option<Vec<Value>>,
    pattern: Option<Regex>,
    min_length: Option<u64>,
    max_length: Option<u64>,
    minimum: Option<f64>,
    maximum: Option<f64>,
    properties: BTreeMap<String, Node>,
    required: Vec<String>,
    additional: bool,
    items: Option<Box<Node>>,
    min_items: Option<u64>,
    max_items: Option<u64>,
}

const KNOWN_KEYWORDS: &[&str] = &[
    "type",
    "enum",
    "pattern",
    "minLength",
    "maxLength",
    "minimum",
    "maximum",
    "properties",
    "required",
    "additionalProperties",
    "items",
    "minItems",
    "maxItems",
    "title",
    "description",
    "$schema",
];

fn err(path: &str, msg: impl std::fmt::Display) -> SchemaError {
    SchemaError(format!("{}: {msg}", if path.is_empty() { "<root>" } else { path }))
}

fn count(obj: &Map<String, Value>, key: &str, path: &str) -> Result<Option<u64>, SchemaError> {
    obj.get(key).map(|v| v.as_u64().ok_or_else(|| err(path, format!("{key} must be a non-negative integer")))).transpose()
}

fn bound(obj: &Map<String, Value>, key: &str, path: &str) -> Result<Option<f64>, SchemaError> {
    obj.get(key).map(|v| v.as_f64().ok_or_else(|| err(path, format!("{key} must be a number")))).transpose()
}

impl Node {
    fn compile(schema: &Value, path: &str) -> Result<Node, SchemaError> {
        let obj = schema.as_object().ok_or_else(|| err(path, "schema must be an object"))?;
        if let Some(k) = obj.keys().find(|k| !KNOWN_KEYWORDS.contains(&k.as_str())) {
            return Err(err(path, format!("unsupported keyword {k}")));
        }
        let types = match obj.get("type") {
            None => None,
            Some(Value::String(s)) => Some(vec![JsonType::parse(s).ok_or_else(|| err(path, format!("unknown type {s}")))?]),
            Some(Value::Array(list)) if !list.is_empty() => Some(
                list.iter()
                    .map(|t| t.as_str().and_then(JsonType::parse).ok_or_else(|| err(path, format!("unknown type {t}"))))
                    .collect::<Result<_, _>>()?,
            ),
            Some(other) => return Err(err(path, format!("bad type {other}"))),
        };
        let enumeration = match obj.get("enum") {
            None => None,
            Some(Value::Array(list)) if !list.is_empty() => Some(list.clone()),
            Some(_) => return Err(err(path, "enum must be a non-empty array")),
        };
        let pattern = match obj.get("pattern") {
            None => None,
            Some(Value::String(p)) => Some(Regex::new(p).map_err(|e| err(path, format!("pattern does not compile: {e}")))?),
            Some(_) => return Err(err(path, "pattern must be a string")),
        };
        let mut properties = BTreeMap::new();
        if let Some(props) = obj.get("properties") {
            let props = props.as_object().ok_or_else(|| err(path, "properties must be an object"))?;
            for (name, sub) in props {
                properties.insert(name.clone(), Node::compile(sub, &format!("{path}/{name}"))?);
            }
        }
        let required = match obj.get("required") {
            None => Vec::new(),
            Some(Value::Array(list)) => list
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or_else(|| err(path, "required entries must be strings")))
                .collect::<Result<_, _>>()?,
            Some(_) => return Err(err(path, "required must be an array")),
        };
        let additional = match obj.get("additionalProperties") {
            None => true,
            Some(Value::Bool(b)) => *b,
            Some(_) => return Err(err(path, "only boolean additionalProperties is supported")),
        };
        let items = obj.get("items").map(|s| Node::compile(s, &format!("{path}/items")).map(Box::new)).transpose()?;
        Ok(Node {
            types,
            enumeration,
            pattern,
            min_length: count(obj, "minLength", path)?,
            max_length: count(obj, "maxLength", path)?,
            minimum: bound(obj, "minimum", path)?,
            maximum: bound(obj, "maximum", path)?,
            properties,
            required,
            additional,
            items,
            min_items: count(obj, "minItems", path)?,
            max_items: count(obj, "maxItems", path)?,
        })
    }

    fn validate(&self, v: &Value, path: &str) -> Result<(), String> {
        let at = if path.is_empty() { "<root>" } else { path };
        if let Some(types) = &self.types {
            if !types.iter().any(|t| t.matches(v)) {
                return Err(format!("{at}: expected {types:?}, got {v}"));
            }
        }
        if let Some(options) = &self.enumeration {
            if !options.iter().any(|o| json_equal(o, v)) {
                return Err(format!("{at}: {v} is not one of {}", Value::Array(options.clone())));
            }
        }
        if let Value::String(s) = v {
            let chars = s.chars().count() as u64;
            if self.min_length.is_some_and(|m| chars < m) || self.max_length.is_some_and(|m| chars > m) {
                return Err(format!("{at}: string length {chars} out of bounds"));
            }
            if let Some(re) = &self.pattern {
                if !re.is_match(s) {
                    return Err(format!("{at}: \"{s}\" does not match {}", re.as_str()));
                }
            }
        }
        if let Some(x) = v.as_f64() {
            if self.minimum.is_some_and(|m| x < m) || self.maximum.is_some_and(|m| x > m) {
                return Err(format!("{at}: {x} out of range"));
            }
        }
        if let Value::Object(map) = v {
            if let Some(missing) = self.required.iter().find(|k| !map.contains_key(*k)) {
                return Err(format!("{at}: missing required property {missing}"));
            }
            for (k, sub) in map {
                match self.properties.get(k) {
                    Some(node) => node.validate(sub, &format!("{path}/{k}"))?,
                    None if !self.additional => return Err(format!("{at}: unexpected property {k}")),
                    None => {}
                }
            }
        }
        if let Value::Array(list) = v {
            let n = list.len() as u64;
            if self.min_items.is_some_and(|m| n < m) || self.max_items.is_some_and(|m| n > m) {
                return Err(format!("{at}: {n} items out of bounds"));
            }
            if let Some(items) = &self.items {
                for (i, item) in list.iter().enumerate() {
                    items.validate(item, &format!("{path}/{i}"))?;
                }
            }
        }
        Ok(())
    }
}

/// Numbers compare by value so `1` and `1.0` are equal.
fn json_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| json_equal(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, p)| y.get(k).is_some_and(|q| json_equal(p, q)))
        }
        _ => a == b,
    }
}

/// A compiled JSON schema.
#[derive(Debug, Clone)]
pub struct JsonSchema {
    source: Value,
    root: Node,
}

impl JsonSchema {
    pub fn compile(schema: Value) -> Result<Self, SchemaError> {
        let root = Node::compile(&schema, "")?;
        Ok(JsonSchema { source: schema, root })
    }

    pub fn source(&self) -> &Value {
        &self.source
    }

    pub fn validate(&self, value: &Value) -> Result<(), String> {
        self.root.validate(value, "")
    }
}

/// The constraint attached to a completion request.
#[derive(Debug, Clone)]
pub enum ConstraintSchema {
    None,
    JsonSchema(JsonSchema),
    /// Whole-reply regular expression.
    Pattern { source: String, full: Regex },
    Enumeration(Vec<String>),
}

impl ConstraintSchema {
    pub fn json_schema(schema: Value) -> Result<Self, SchemaError> {
        JsonSchema::compile(schema).map(ConstraintSchema::JsonSchema)
    }

    pub fn pattern(pattern: &str) -> Result<Self, SchemaError> {
        let full = Regex::new(&format!("^(?:{pattern})$")).map_err(|e| SchemaError(format!("pattern does not compile: {e}")))?;
        Ok(ConstraintSchema::Pattern { source: pattern.to_string(), full })
    }

    pub fn enumeration<I, S>(values: I) -> Result<Self, SchemaError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let values: Vec<String> = values.into_iter().map(Into::into).collect();
        if values.is_empty() {
            return Err(SchemaError("enumeration is empty".into()));
        }
        Ok(ConstraintSchema::Enumeration(values))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ConstraintSchema::None => "none",
            ConstraintSchema::JsonSchema(_) => "json_schema",
            ConstraintSchema::Pattern { .. } => "pattern",
            ConstraintSchema::Enumeration(_) => "enumeration",
        }
    }

    /// Checks a raw reply. JSON replies may be surrounded by whitespace.
    pub fn validate(&self, text: &str) -> Result<(), String> {
        match self {
            ConstraintSchema::None => Ok(()),
            ConstraintSchema::JsonSchema(schema) => {
                let value: Value = serde_json::from_str(text.trim()).map_err(|e| format!("reply is not valid JSON: {e}"))?;
                schema.validate(&value)
            }
            ConstraintSchema::Pattern { source, full } => {
                if full.is_match(text) {
                    Ok(())
                } else {
                    Err(format!("reply does not match the pattern {source}"))
                }
            }
            ConstraintSchema::Enumeration(values) => {
                if values.iter().any(|v| v == text) {
                    Ok(())
                } else {
                    Err(format!("reply must be exactly one of {values:?}"))
                }
            }
        }
    }

    /// Human-readable description placed into prompts and correction notes.
    pub fn describe(&self) -> String {
        match self {
            ConstraintSchema::None => String::new(),
            ConstraintSchema::JsonSchema(s) => serde_json::to_string_pretty(s.source()).expect("schema serializes"),
            ConstraintSchema::Pattern { source, .. } => source.clone(),
            ConstraintSchema::Enumeration(values) => values.join(", "),
        }
    }
}

/// Decimal alternatives matching exactly the integers in `lo..=hi` written
/// without leading zeros.
fn range_alternatives(lo: u32, hi: u32) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = lo;
    while start <= hi {
        let digits = start.to_string().len() as u32;
        let end = hi.min(10u32.pow(digits) - 1);
        out.extend(same_length(&start.to_string(), &end.to_string()));
        start = end + 1;
    }
    out
}

fn digit_class(a: u8, b: u8) -> String {
    match b - a {
        0 => (a as char).to_string(),
        _ => format!("[{}-{}]", a as char, b as char),
    }
}

fn any_digits(n: usize) -> String {
    match n {
        0 => String::new(),
        1 => "[0-9]".into(),
        _ => format!("[0-9]{{{n}}}"),
    }
}

fn same_length(lo: &str, hi: &str) -> Vec<String> {
    let (l, h) = (lo.as_bytes(), hi.as_bytes());
    if l.len() == 1 {
        return vec![digit_class(l[0], h[0])];
    }
    let rest = l.len() - 1;
    let (a, b) = (l[0], h[0]);
    let prefix = |d: u8, tails: Vec<String>| tails.into_iter().map(move |t| format!("{}{t}", d as char));
    if a == b {
        return prefix(a, same_length(&lo[1..], &hi[1..])).collect();
    }
    let mut out = Vec::new();
    let (mut first, mut last) = (a, b);
    if l[1..].iter().any(|&d| d != b'0') {
        out.extend(prefix(a, same_length(&lo[1..], &"9".repeat(rest))));
        first += 1;
    }
    let mut tail = Vec::new();
    if h[1..].iter().any(|&d| d != b'9') {
        tail.extend(prefix(b, same_length(&"0".repeat(rest), &hi[1..])));
        last -= 1;
    }
    if first <= last {
        out.push(format!("{}{}", digit_class(first, last), any_digits(rest)));
    }
    out.extend(tail);
    out
}

/// Anchored pattern accepting exactly the atlas' region indices in canonical
/// decimal form.
pub fn region_index_pattern(atlas: &RegionAtlas) -> String {
    let mut indices: Vec<u32> = atlas.regions().iter().map(|r| u32::from(r.index.0)).collect();
    indices.sort_unstable();
    let mut alternatives = Vec::new();
    let mut i = 0;
    while i < indices.len() {
        let mut j = i;
        while j + 1 < indices.len() && indices[j + 1] == indices[j] + 1 {
            j += 1;
        }
        alternatives.extend(range_alternatives(indices[i], indices[j]));
        i = j + 1;
    }
    format!("^(?:{})$", alternatives.join("|"))
}

/// Schema of the converted draft documentation.
pub fn draft_schema() -> Value {
    json!({
        "type": "object",
        "properties": {
            "breed": {"type": "string", "minLength": 1},
            "age": {"type": "integer", "minimum": 0},
            "sex": {"type": "string", "enum": ["male", "female"]},
            "weight": {"type": "number", "minimum": 0},
            "palpation_findings": {"type": "array", "items": {"type": "string", "minLength": 1}}
        },
        "required": ["breed", "age", "sex", "weight", "palpation_findings"],
        "additionalProperties": false
    })
}

/// Schema of a single discretized finding.
pub fn discretization_schema(atlas: &RegionAtlas) -> Value {
    let conditions: Vec<String> = atlas.conditions().iter().map(|c| c.index.to_string()).collect();
    json!({
        "type": "object",
        "properties": {
            "region": {"type": "string", "pattern": region_index_pattern(atlas)},
            "condition": {"type": "string", "enum": conditions}
        },
        "required": ["region", "condition"],
        "additionalProperties": false
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::shipped_atlas;
    use proptest::prelude::*;

    fn decimal_strings(max_len: u32) -> impl Iterator<Item = String> {
        (1..=max_len).flat_map(|len| (0..10u32.pow(len)).map(move |n| format!("{n:0width$}", width = len as usize)))
    }

    #[test]
    fn region_pattern_accepts_exactly_the_atlas_indices() {
        let re = Regex::new(&region_index_pattern(shipped_atlas())).unwrap();
        let accepted: Vec<String> = decimal_strings(4).filter(|s| re.is_match(s)).collect();
        assert_eq!(decimal_strings(4).count(), 11_110);
        let expected: Vec<String> = (1..=214).map(|n: u32| n.to_string()).collect();
        let mut sorted = accepted.clone();
        sorted.sort_by_key(|s| s.parse::<u32>().unwrap());
        assert_eq!(sorted, expected);
        for s in ["0", "215", "042", "00", " 1", "1 ", "+1"] {
            assert!(!re.is_match(s), "{s}");
        }
    }

    proptest! {
        #[test]
        fn range_alternatives_match_exactly(lo in 0u32..3000, span in 0u32..3000) {
            let hi = lo + span;
            let re = Regex::new(&format!("^(?:{})$", range_alternatives(lo, hi).join("|"))).unwrap();
            for n in lo.saturating_sub(20)..=hi + 20 {
                prop_assert_eq!(re.is_match(&n.to_string()), (lo..=hi).contains(&n), "n={}", n);
            }
            let padded = format!("0{}", lo);
            prop_assert!(!re.is_match(&padded));
        }
    }

    #[test]
    fn constraint_kinds_check_their_inputs() {
        assert!(ConstraintSchema::pattern("(").is_err());
        assert!(ConstraintSchema::enumeration(Vec::<String>::new()).is_err());
        assert!(ConstraintSchema::json_schema(json!({"type": "thing"})).is_err());
        assert!(ConstraintSchema::json_schema(json!({"oneOf": []})).is_err());
        let p = ConstraintSchema::pattern("[0-9]+").unwrap();
        assert!(p.validate("12").is_ok());
        assert!(p.validate("12a").is_err());
        let e = ConstraintSchema::enumeration(["1", "2"]).unwrap();
        assert!(e.validate("2").is_ok() && e.validate("3").is_err());
        assert_eq!(e.kind(), "enumeration");
    }

    #[test]
    fn discretization_schema_examples() {
        let s = ConstraintSchema::json_schema(discretization_schema(shipped_atlas())).unwrap();
        assert!(s.validate(r#"{"region":"42","condition":"2"}"#).is_ok());
        assert!(s.validate(r#"{"region":"999","condition":"2"}"#).is_err());
        assert!(s.validate(r#"{"region":"42","condition":"8"}"#).is_err());
        assert!(s.validate(r#"{"region":"42"}"#).is_err());
        assert!(s.validate(r#"{"region":"42","condition":"2","x":1}"#).is_err());
        assert!(s.validate("the region is 42").is_err());
    }

    #[test]
    fn draft_schema_examples() {
        let s = ConstraintSchema::json_schema(draft_schema()).unwrap();
        let ok = r#"{"breed":"Pug","age":3,"sex":"male","weight":7.5,"palpation_findings":["left knee joint: pain"]}"#;
        assert!(s.validate(ok).is_ok());
        assert!(s.validate(&ok.replace("\"male\"", "\"m\"")).is_err());
        assert!(s.validate(&ok.replace("[\"left knee joint: pain\"]", "[\"\"]")).is_err());
        assert!(s.validate(&ok.replace("3,", "3.5,")).is_err());
        assert!(s.validate(&ok.replace("3,", "3.0,")).is_ok());
    }

    /// Arbitrary JSON values of bounded depth.
    fn any_json() -> impl Strategy<Value = Value> {
        let leaf = prop_oneof![
            Just(Value::Null),
            any::<bool>().prop_map(Value::Bool),
            (-50i64..300).prop_map(|n| json!(n)),
            (-50.0f64..300.0).prop_map(|x| json!(x)),
            "[0-9a-z ]{0,4}".prop_map(Value::String),
            prop::sample::select(vec!["1", "7", "8", "42", "214", "215", "male", "female"]).prop_map(|s| json!(s)),
        ];
        leaf.prop_recursive(3, 24, 6, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
                prop::collection::btree_map(
                    prop::sample::select(vec!["region", "condition", "breed", "age", "sex", "weight", "palpation_findings", "x"]),
                    inner,
                    0..6
                )
                .prop_map(|m| Value::Object(m.into_iter().map(|(k, v)| (k.to_string(), v)).collect())),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]
        #[test]
        fn validator_agrees_with_reference_implementation(v in any_json()) {
            for schema in [discretization_schema(shipped_atlas()), draft_schema()] {
                let ours = JsonSchema::compile(schema.clone()).unwrap().validate(&v).is_ok();
                let reference = jsonschema::validator_for(&schema).unwrap().is_valid(&v);
                prop_assert_eq!(ours, reference, "schema {} value {}", schema, v);
            }
        }
    }
}
