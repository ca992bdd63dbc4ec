//! Metadata instances in the JSON-LD subset used for interchange, and
//! batch manifests that point at them.
//!
//! Only two value shapes carry linked-data meaning: typed literals
//! (`{"@value", "@type"}`) and term references (`{"@id", "rdfs:label"}`).
//! Nested objects become dotted field paths and arrays become ordered
//! multi-values. There is no `@context` processing; `@`-prefixed keys
//! outside value objects are skipped.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::lexical;
use crate::template::{FieldPath, Template, ValueKind};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldValue {
    Literal { raw: String, datatype: Option<String> },
    TermRef { iri: String, label: String },
    Empty,
}

impl FieldValue {
    /// A literal, normalized: content that trims to nothing is [`FieldValue::Empty`].
    pub fn literal(raw: impl Into<String>, datatype: Option<String>) -> Self {
        let raw = raw.into();
        if raw.trim().is_empty() {
            FieldValue::Empty
        } else {
            FieldValue::Literal { raw, datatype }
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, FieldValue::Empty)
    }

    /// Human-facing rendering: the raw literal, the term label (or IRI when
    /// unlabeled), or the empty string.
    pub fn display(&self) -> &str {
        match self {
            FieldValue::Literal { raw, .. } => raw,
            FieldValue::TermRef { iri, label } if label.is_empty() => iri,
            FieldValue::TermRef { label, .. } => label,
            FieldValue::Empty => "",
        }
    }

    /// Instance-format JSON for this value. `kind` supplies the datatype
    /// for untyped numeric literals that are lexically valid for it.
    pub fn to_json(&self, kind: Option<ValueKind>) -> Value {
        match self {
            FieldValue::Literal { raw, datatype } => {
                let mut obj = Map::new();
                obj.insert("@value".into(), Value::String(raw.clone()));
                let inferred = match kind {
                    Some(ValueKind::Integer) if lexical::is_integer(raw) => kind.and_then(ValueKind::datatype),
                    Some(ValueKind::Decimal) if lexical::is_decimal(raw) => kind.and_then(ValueKind::datatype),
                    _ => None,
                };
                if let Some(dt) = datatype.as_deref().or(inferred) {
                    obj.insert("@type".into(), Value::String(dt.to_owned()));
                }
                Value::Object(obj)
            }
            FieldValue::TermRef { iri, label } => {
                let mut obj = Map::new();
                obj.insert("@id".into(), Value::String(iri.clone()));
                obj.insert("rdfs:label".into(), Value::String(label.clone()));
                Value::Object(obj)
            }
            FieldValue::Empty => {
                let mut obj = Map::new();
                obj.insert("@value".into(), Value::String(String::new()));
                Value::Object(obj)
            }
        }
    }

    /// Reads a single instance-format value (no nesting, no arrays).
    pub fn from_json(value: &Value) -> Result<Self, RecordError> {
        match parse_scalar(value, "")? {
            Some(v) => Ok(v),
            None => Err(RecordError::Malformed { path: String::new(), message: "expected a value".into() }),
        }
    }
}

impl fmt::Display for FieldValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetadataRecord {
    pub record_ref: String,
    /// Entry order follows the source document. Equality ignores it.
    pub entries: IndexMap<FieldPath, Vec<FieldValue>>,
}

impl MetadataRecord {
    pub fn new(record_ref: impl Into<String>) -> Self {
        MetadataRecord { record_ref: record_ref.into(), entries: IndexMap::new() }
    }

    pub fn get(&self, path: &FieldPath) -> Option<&[FieldValue]> {
        self.entries.get(path).map(Vec::as_slice)
    }

    pub fn insert(&mut self, path: FieldPath, values: Vec<FieldValue>) {
        self.entries.insert(path, values);
    }

    /// Re-applies literal normalization to every entry.
    pub fn normalized(&self) -> MetadataRecord {
        let entries = self
            .entries
            .iter()
            .map(|(path, values)| {
                let values = values
                    .iter()
                    .map(|v| match v {
                        FieldValue::Literal { raw, datatype } => FieldValue::literal(raw.clone(), datatype.clone()),
                        other => other.clone(),
                    })
                    .collect();
                (path.clone(), values)
            })
            .collect();
        MetadataRecord { record_ref: self.record_ref.clone(), entries }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("MALFORMED_DOCUMENT{}: {message}", at(path))]
    Malformed { path: String, message: String },
    #[error("AMBIGUOUS_VALUE{}: object carries both `@value` and `@id`", at(path))]
    AmbiguousValue { path: String },
}

impl RecordError {
    pub fn code(&self) -> &'static str {
        match self {
            RecordError::Malformed { .. } => "MALFORMED_DOCUMENT",
            RecordError::AmbiguousValue { .. } => "AMBIGUOUS_VALUE",
        }
    }
}

fn at(path: &str) -> String {
    if path.is_empty() {
        String::new()
    } else {
        format!(" at `{path}`")
    }
}

fn malformed(path: &str, message: impl Into<String>) -> RecordError {
    RecordError::Malformed { path: path.to_owned(), message: message.into() }
}

pub fn parse_record(record_ref: &str, doc: &str) -> Result<MetadataRecord, RecordError> {
    let value: Value = serde_json::from_str(doc).map_err(|e| malformed("", e.to_string()))?;
    record_from_value(record_ref, &value)
}

pub fn record_from_value(record_ref: &str, value: &Value) -> Result<MetadataRecord, RecordError> {
    let obj = value.as_object().ok_or_else(|| malformed("", "record document must be a JSON object"))?;
    let mut record = MetadataRecord::new(record_ref);
    walk_object(obj, None, &mut record.entries)?;
    Ok(record)
}

fn walk_object(
    obj: &Map<String, Value>,
    prefix: Option<&FieldPath>,
    entries: &mut IndexMap<FieldPath, Vec<FieldValue>>,
) -> Result<(), RecordError> {
    for (key, value) in obj {
        if key.starts_with('@') {
            continue;
        }
        let path = match prefix {
            Some(p) => p.child(key),
            None => FieldPath::root(key),
        }
        .map_err(|e| malformed(&prefix.map(ToString::to_string).unwrap_or_default(), e.to_string()))?;
        entries.entry(path.clone()).or_default();
        match value {
            Value::Array(items) => {
                for item in items {
                    if item.is_array() {
                        return Err(malformed(&path.to_string(), "nested arrays are not allowed"));
                    }
                    add_value(item, &path, entries)?;
                }
            }
            other => add_value(other, &path, entries)?,
        }
        // An entry that only served as a prefix for nested keys is dropped.
        if entries.get(&path).is_some_and(Vec::is_empty) && !matches!(value, Value::Array(a) if a.is_empty()) {
            entries.shift_remove(&path);
        }
    }
    Ok(())
}

fn add_value(
    value: &Value,
    path: &FieldPath,
    entries: &mut IndexMap<FieldPath, Vec<FieldValue>>,
) -> Result<(), RecordError> {
    if let Some(scalar) = parse_scalar(value, &path.to_string())? {
        entries.entry(path.clone()).or_default().push(scalar);
        return Ok(());
    }
    let obj = value.as_object().expect("non-scalar values are objects");
    if obj.keys().all(|k| k.starts_with('@')) {
        // `{}` instantiates an element without filling anything in it.
        entries.entry(path.clone()).or_default().push(FieldValue::Empty);
        return Ok(());
    }
    walk_object(obj, Some(path), entries)
}

/// `Ok(None)` means `value` is a nested element object.
fn parse_scalar(value: &Value, path: &str) -> Result<Option<FieldValue>, RecordError> {
    match value {
        Value::Null => Ok(Some(FieldValue::Empty)),
        Value::String(s) => Ok(Some(FieldValue::literal(s.clone(), None))),
        Value::Number(n) => Ok(Some(FieldValue::literal(n.to_string(), None))),
        Value::Bool(b) => Ok(Some(FieldValue::literal(b.to_string(), None))),
        Value::Array(_) => Err(malformed(path, "arrays are not allowed here")),
        Value::Object(obj) => {
            let has_value = obj.contains_key("@value");
            let has_id = obj.contains_key("@id");
            if has_value && has_id {
                return Err(RecordError::AmbiguousValue { path: path.to_owned() });
            }
            if has_value {
                let raw = match &obj["@value"] {
                    Value::String(s) => s.clone(),
                    Value::Number(n) => n.to_string(),
                    Value::Bool(b) => b.to_string(),
                    Value::Null => String::new(),
                    _ => return Err(malformed(path, "`@value` must be a string, number or boolean")),
                };
                let datatype = match obj.get("@type") {
                    None | Some(Value::Null) => None,
                    Some(Value::String(t)) => Some(t.clone()),
                    Some(_) => return Err(malformed(path, "`@type` must be a string")),
                };
                return Ok(Some(FieldValue::literal(raw, datatype)));
            }
            if has_id {
                let iri = match &obj["@id"] {
                    Value::String(s) if !s.trim().is_empty() => s.clone(),
                    _ => return Err(malformed(path, "`@id` must be a nonempty string")),
                };
                let label = match obj.get("rdfs:label") {
                    None | Some(Value::Null) => String::new(),
                    Some(Value::String(l)) => l.clone(),
                    Some(_) => return Err(malformed(path, "`rdfs:label` must be a string")),
                };
                return Ok(Some(FieldValue::TermRef { iri, label }));
            }
            Ok(None)
        }
    }
}

#[derive(Default)]
struct Tree<'r> {
    values: Option<&'r [FieldValue]>,
    kind: Option<ValueKind>,
    children: IndexMap<&'r str, Tree<'r>>,
}

impl Tree<'_> {
    fn to_json(&self) -> Value {
        let values = self.values.map(|vals| vals.iter().map(|v| v.to_json(self.kind)).collect::<Vec<_>>());
        let children = (!self.children.is_empty()).then(|| {
            Value::Object(self.children.iter().map(|(k, t)| ((*k).to_owned(), t.to_json())).collect())
        });
        match (values, children) {
            (Some(mut vals), None) if vals.len() == 1 => vals.pop().expect("one value"),
            (Some(vals), None) => Value::Array(vals),
            (None, Some(obj)) => obj,
            (Some(mut vals), Some(obj)) => {
                vals.push(obj);
                Value::Array(vals)
            }
            (None, None) => Value::Object(Map::new()),
        }
    }
}

/// Instance-format JSON for a record. Numeric literals of integer and
/// decimal fields carry their `xsd:` datatype; term references carry both
/// `@id` and `rdfs:label`. Entries unknown to the template are kept.
pub fn record_to_value(r: &MetadataRecord, t: &Template) -> Value {
    let kinds: HashMap<FieldPath, ValueKind> =
        t.flatten_fields().into_iter().map(|f| (f.path, f.spec.value_kind)).collect();
    let mut root = Tree::default();
    for (path, values) in &r.entries {
        let mut node = &mut root;
        for segment in path.segments() {
            node = node.children.entry(segment.as_str()).or_default();
        }
        node.values = Some(values);
        node.kind = kinds.get(path).copied();
    }
    let obj: Map<String, Value> = root.children.iter().map(|(k, t)| ((*k).to_owned(), t.to_json())).collect();
    Value::Object(obj)
}

pub fn serialize_record(r: &MetadataRecord, t: &Template) -> String {
    let mut out = serde_json::to_string_pretty(&record_to_value(r, t)).expect("record serializes");
    out.push('\n');
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub record_ref: String,
    pub locator: String,
}

/// Ordered list of records to evaluate, each with a locator a
/// [`RecordFetcher`] understands.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordManifest {
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("MALFORMED_LINE at line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("DUPLICATE_RECORD_REF at line {line}: `{record_ref}`")]
    DuplicateRef { line: usize, record_ref: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RecordManifest {
    pub fn push(&mut self, record_ref: impl Into<String>, locator: impl Into<String>) {
        self.entries.push(ManifestEntry { record_ref: record_ref.into(), locator: locator.into() });
    }

    /// Parses `record_ref<TAB>locator` lines. Blank lines and lines starting
    /// with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let mut manifest = RecordManifest::default();
        let mut seen = HashMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.strip_suffix('\r').unwrap_or(raw);
            if content.trim().is_empty() || content.starts_with('#') {
                continue;
            }
            let Some((record_ref, locator)) = content.split_once('\t') else {
                return Err(ManifestError::MalformedLine { line, message: "expected `record_ref<TAB>locator`".into() });
            };
            let (record_ref, locator) = (record_ref.trim(), locator.trim());
            if record_ref.is_empty() || locator.is_empty() || locator.contains('\t') {
                return Err(ManifestError::MalformedLine { line, message: "empty or extra column".into() });
            }
            if seen.insert(record_ref.to_owned(), line).is_some() {
                return Err(ManifestError::DuplicateRef { line, record_ref: record_ref.to_owned() });
            }
            manifest.push(record_ref, locator);
        }
        Ok(manifest)
    }

    pub fn emit(&self) -> String {
        self.entries.iter().map(|e| format!("{}\t{}\n", e.record_ref, e.locator)).collect()
    }

    /// Every `*.json` file directly inside `dir`, sorted by file name, named
    /// by its stem. Repair sidecars (`*.repairs.json`) are skipped.
    pub fn from_dir(dir: &Path) -> Result<Self, ManifestError> {
        let io = |source| ManifestError::Io { path: dir.to_owned(), source };
        let mut files = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
            if path.is_file() && name.ends_with(".json") && !name.ends_with(".repairs.json") {
                files.push((name.trim_end_matches(".json").to_owned(), path));
            }
        }
        files.sort();
        let mut manifest = RecordManifest::default();
        for (stem, path) in files {
            manifest.push(stem, path.to_string_lossy());
        }
        Ok(manifest)
    }

    /// Reads a manifest file or, for a directory, lists its records.
    /// Relative locators in a manifest file are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        if path.is_dir() {
            return Self::from_dir(path);
        }
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.to_owned(), source })?;
        let mut manifest = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for entry in &mut manifest.entries {
            if !entry.locator.contains("://") && Path::new(&entry.locator).is_relative() {
                entry.locator = base.join(&entry.locator).to_string_lossy().into_owned();
            }
        }
        Ok(manifest)
    }
}

/// Boundary for retrieving record documents. The built-in
/// [`FileFetcher`] reads local files; remote resolvers implement the same
/// trait.
pub trait RecordFetcher: Sync {
    fn fetch(&self, locator: &str) -> Result<String, String>;
}

#[derive(Debug, Clone, Default)]
pub struct FileFetcher {
    base: Option<PathBuf>,
}

impl FileFetcher {
    pub fn new() -> Self {
        FileFetcher::default()
    }

    pub fn with_base(base: impl Into<PathBuf>) -> Self {
        FileFetcher { base: Some(base.into()) }
    }
}

impl RecordFetcher for FileFetcher {
    fn fetch(&self, locator: &str) -> Result<String, String> {
        let path = match &self.base {
            Some(base) if Path::new(locator).is_relative() => base.join(locator),
            _ => PathBuf::from(locator),
        };
        std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("FETCH_FAILED for `{record_ref}`: {cause}")]
pub struct FetchFailure {
    pub record_ref: String,
    pub cause: String,
}

/// Fetches and parses every manifest entry, in manifest order. A failure
/// for one entry is returned in its slot and does not stop the batch.
pub fn resolve_manifest(m: &RecordManifest, fetcher: &dyn RecordFetcher) -> Vec<Result<MetadataRecord, FetchFailure>> {
    use rayon::prelude::*;
    m.entries
        .par_iter()
        .map(|entry| {
            let fail = |cause: String| FetchFailure { record_ref: entry.record_ref.clone(), cause };
            let doc = fetcher.fetch(&entry.locator).map_err(fail)?;
            parse_record(&entry.record_ref, &doc).map_err(|e| fail(e.to_string()))
        })
        .collect()
}
