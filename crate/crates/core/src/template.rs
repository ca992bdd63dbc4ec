//! Machine-actionable metadata templates.
//!
//! A [`Template`] is an ordered tree of elements and fields. Fields carry a
//! value kind and, when controlled, the value sets their terms are drawn
//! from. Templates travel as JSON documents; [`parse_template`] and
//! [`emit_template`] convert between the two and are inverse on valid
//! templates.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};
use thiserror::Error;

/// Dotted path of machine names from the template root to a node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldPath(Vec<String>);

impl FieldPath {
    pub fn new(segments: Vec<String>) -> Result<Self, PathError> {
        if segments.is_empty() {
            return Err(PathError::Empty);
        }
        for segment in &segments {
            if !is_path_segment(segment) {
                return Err(PathError::InvalidSegment(segment.clone()));
            }
        }
        Ok(FieldPath(segments))
    }

    pub fn root(name: &str) -> Result<Self, PathError> {
        FieldPath::new(vec![name.to_owned()])
    }

    pub fn child(&self, name: &str) -> Result<Self, PathError> {
        if !is_path_segment(name) {
            return Err(PathError::InvalidSegment(name.to_owned()));
        }
        let mut segments = self.0.clone();
        segments.push(name.to_owned());
        Ok(FieldPath(segments))
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    pub fn leaf(&self) -> &str {
        self.0.last().expect("field paths are nonempty")
    }

    /// True when `self` is a strict ancestor of `other`.
    pub fn is_prefix_of(&self, other: &FieldPath) -> bool {
        self.0.len() < other.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn parent(&self) -> Option<FieldPath> {
        (self.0.len() > 1).then(|| FieldPath(self.0[..self.0.len() - 1].to_vec()))
    }
}

impl fmt::Display for FieldPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("."))
    }
}

impl FromStr for FieldPath {
    type Err = PathError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FieldPath::new(s.split('.').map(str::to_owned).collect())
    }
}

impl Serialize for FieldPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FieldPath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("field path is empty")]
    Empty,
    #[error("invalid path segment {0:?}")]
    InvalidSegment(String),
}

/// Record keys are looser than template machine names: any nonempty key
/// without a dot that is not a JSON-LD keyword.
pub(crate) fn is_path_segment(s: &str) -> bool {
    !s.is_empty() && !s.contains('.') && !s.starts_with('@')
}

/// `[A-Za-z_][A-Za-z0-9_]*`
pub fn is_machine_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Identifiers (template ids, vocabulary ids, term IRIs) are nonempty and
/// contain no whitespace or control characters.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c.is_control())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Text,
    Integer,
    Decimal,
    Date,
    Controlled,
}

impl ValueKind {
    pub const ALL: [ValueKind; 5] = [
        ValueKind::Text,
        ValueKind::Integer,
        ValueKind::Decimal,
        ValueKind::Date,
        ValueKind::Controlled,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Text => "text",
            ValueKind::Integer => "integer",
            ValueKind::Decimal => "decimal",
            ValueKind::Date => "date",
            ValueKind::Controlled => "controlled",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ValueKind::ALL.into_iter().find(|k| k.as_str() == name)
    }

    /// The datatype numeric literals of this kind are tagged with.
    pub fn datatype(self) -> Option<&'static str> {
        match self {
            ValueKind::Integer => Some("xsd:integer"),
            ValueKind::Decimal => Some("xsd:float"),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    All,
    Branch { root: String },
    Terms { terms: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueSetSpec {
    pub source: String,
    pub selector: Selector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    pub name: String,
    pub label: String,
    pub value_kind: ValueKind,
    pub required: bool,
    pub multivalued: bool,
    pub value_sets: Vec<ValueSetSpec>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementSpec {
    pub name: String,
    pub label: String,
    pub required: bool,
    pub multivalued: bool,
    pub children: Vec<TemplateNode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplateNode {
    Element(ElementSpec),
    Field(FieldSpec),
}

impl TemplateNode {
    pub fn name(&self) -> &str {
        match self {
            TemplateNode::Element(e) => &e.name,
            TemplateNode::Field(f) => &f.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub id: String,
    pub name: String,
    pub description: String,
    pub children: Vec<TemplateNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateErrorKind {
    MalformedDocument,
    UnknownValueKind,
    DuplicateSiblingName,
    ControlledWithoutValueSet,
    InvalidName,
    ValueSetOnUncontrolled,
    InvalidIdentifier,
}

impl TemplateErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            TemplateErrorKind::MalformedDocument => "MALFORMED_DOCUMENT",
            TemplateErrorKind::UnknownValueKind => "UNKNOWN_VALUE_KIND",
            TemplateErrorKind::DuplicateSiblingName => "DUPLICATE_SIBLING_NAME",
            TemplateErrorKind::ControlledWithoutValueSet => "CONTROLLED_WITHOUT_VALUESET",
            TemplateErrorKind::InvalidName => "INVALID_NAME",
            TemplateErrorKind::ValueSetOnUncontrolled => "VALUESET_ON_UNCONTROLLED",
            TemplateErrorKind::InvalidIdentifier => "INVALID_IDENTIFIER",
        }
    }
}

/// A template that could not be parsed. `path` is the dotted location of
/// the offending node, empty for document-level problems.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}{}: {message}", kind.code(), if path.is_empty() { String::new() } else { format!(" at `{path}`") })]
pub struct TemplateError {
    pub kind: TemplateErrorKind,
    pub path: String,
    pub message: String,
}

impl TemplateError {
    fn new(kind: TemplateErrorKind, path: &str, message: impl Into<String>) -> Self {
        TemplateError { kind, path: path.to_owned(), message: message.into() }
    }

    fn malformed(path: &str, message: impl Into<String>) -> Self {
        TemplateError::new(TemplateErrorKind::MalformedDocument, path, message)
    }
}

pub fn parse_template(doc: &str) -> Result<Template, TemplateError> {
    let value: Value =
        serde_json::from_str(doc).map_err(|e| TemplateError::malformed("", e.to_string()))?;
    template_from_value(&value)
}

pub fn template_from_value(value: &Value) -> Result<Template, TemplateError> {
    let obj = value
        .as_object()
        .ok_or_else(|| TemplateError::malformed("", "template document must be a JSON object"))?;
    let id = req_str(obj, "id", "")?;
    if !is_identifier(&id) {
        return Err(TemplateError::new(
            TemplateErrorKind::InvalidIdentifier,
            "",
            format!("template id {id:?} is not a valid identifier"),
        ));
    }
    let name = opt_str(obj, "name", "")?.unwrap_or_default();
    let description = opt_str(obj, "description", "")?.unwrap_or_default();
    let children = parse_children(obj, "", true)?;
    Ok(Template { id, name, description, children })
}

fn parse_children(
    obj: &Map<String, Value>,
    parent: &str,
    required_key: bool,
) -> Result<Vec<TemplateNode>, TemplateError> {
    let items = match obj.get("children") {
        Some(Value::Array(items)) => items,
        Some(_) => return Err(TemplateError::malformed(parent, "`children` must be an array")),
        None if required_key => {
            return Err(TemplateError::malformed(parent, "missing `children` array"));
        }
        None => return Ok(Vec::new()),
    };

    let mut seen = HashSet::new();
    let mut nodes = Vec::with_capacity(items.len());
    for (index, item) in items.iter().enumerate() {
        let node = parse_node(item, parent, index)?;
        if !seen.insert(node.name().to_owned()) {
            return Err(TemplateError::new(
                TemplateErrorKind::DuplicateSiblingName,
                &join_path(parent, node.name()),
                format!("sibling name `{}` is used more than once", node.name()),
            ));
        }
        nodes.push(node);
    }
    Ok(nodes)
}

fn join_path(parent: &str, name: &str) -> String {
    if parent.is_empty() {
        name.to_owned()
    } else {
        format!("{parent}.{name}")
    }
}

fn parse_node(value: &Value, parent: &str, index: usize) -> Result<TemplateNode, TemplateError> {
    let positional = || join_path(parent, &format!("[{index}]"));
    let obj = value
        .as_object()
        .ok_or_else(|| TemplateError::malformed(&positional(), "template node must be an object"))?;
    let name = req_str(obj, "name", &positional())?;
    if !is_machine_name(&name) {
        return Err(TemplateError::new(
            TemplateErrorKind::InvalidName,
            &positional(),
            format!("`{name}` is not a valid machine name"),
        ));
    }
    let path = join_path(parent, &name);
    let label = opt_str(obj, "label", &path)?.unwrap_or_else(|| name.clone());
    let required = opt_bool(obj, "required", &path)?;
    let multivalued = opt_bool(obj, "multivalued", &path)?;

    match req_str(obj, "kind", &path)?.as_str() {
        "element" => Ok(TemplateNode::Element(ElementSpec {
            children: parse_children(obj, &path, false)?,
            name,
            label,
            required,
            multivalued,
        })),
        "field" => {
            let type_name = req_str(obj, "valueType", &path)?;
            let value_kind = ValueKind::from_name(&type_name).ok_or_else(|| {
                TemplateError::new(
                    TemplateErrorKind::UnknownValueKind,
                    &path,
                    format!("unknown value type `{type_name}`"),
                )
            })?;
            let value_sets = match obj.get("valueSets") {
                None | Some(Value::Null) => Vec::new(),
                Some(Value::Array(items)) => items
                    .iter()
                    .map(|item| parse_value_set(item, &path))
                    .collect::<Result<_, _>>()?,
                Some(_) => return Err(TemplateError::malformed(&path, "`valueSets` must be an array")),
            };
            if value_kind == ValueKind::Controlled && value_sets.is_empty() {
                return Err(TemplateError::new(
                    TemplateErrorKind::ControlledWithoutValueSet,
                    &path,
                    "controlled field declares no value set",
                ));
            }
            if value_kind != ValueKind::Controlled && !value_sets.is_empty() {
                return Err(TemplateError::new(
                    TemplateErrorKind::ValueSetOnUncontrolled,
                    &path,
                    format!("{} field declares value sets", value_kind.as_str()),
                ));
            }
            let description = opt_str(obj, "description", &path)?.unwrap_or_default();
            Ok(TemplateNode::Field(FieldSpec {
                name,
                label,
                value_kind,
                required,
                multivalued,
                value_sets,
                description,
            }))
        }
        other => Err(TemplateError::malformed(&path, format!("unknown node kind `{other}`"))),
    }
}

fn parse_value_set(value: &Value, path: &str) -> Result<ValueSetSpec, TemplateError> {
    let obj = value
        .as_object()
        .ok_or_else(|| TemplateError::malformed(path, "value set must be an object"))?;
    let source = req_str(obj, "source", path)?;
    check_identifier(&source, path)?;
    let selector = obj
        .get("selector")
        .and_then(Value::as_object)
        .ok_or_else(|| TemplateError::malformed(path, "value set requires a `selector` object"))?;
    let selector = match req_str(selector, "type", path)?.as_str() {
        "all" => Selector::All,
        "branch" => {
            let root = req_str(selector, "root", path)?;
            check_identifier(&root, path)?;
            Selector::Branch { root }
        }
        "terms" => {
            let terms = selector
                .get("terms")
                .and_then(Value::as_array)
                .ok_or_else(|| TemplateError::malformed(path, "`terms` selector requires a `terms` array"))?
                .iter()
                .map(|t| {
                    let t = t
                        .as_str()
                        .ok_or_else(|| TemplateError::malformed(path, "term identifiers must be strings"))?;
                    check_identifier(t, path)?;
                    Ok(t.to_owned())
                })
                .collect::<Result<Vec<_>, TemplateError>>()?;
            Selector::Terms { terms }
        }
        other => return Err(TemplateError::malformed(path, format!("unknown selector type `{other}`"))),
    };
    Ok(ValueSetSpec { source, selector })
}

fn check_identifier(s: &str, path: &str) -> Result<(), TemplateError> {
    if is_identifier(s) {
        Ok(())
    } else {
        Err(TemplateError::new(
            TemplateErrorKind::InvalidIdentifier,
            path,
            format!("{s:?} is not a valid identifier"),
        ))
    }
}

fn req_str(obj: &Map<String, Value>, key: &str, path: &str) -> Result<String, TemplateError> {
    opt_str(obj, key, path)?.ok_or_else(|| TemplateError::malformed(path, format!("missing string `{key}`")))
}

fn opt_str(obj: &Map<String, Value>, key: &str, path: &str) -> Result<Option<String>, TemplateError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(TemplateError::malformed(path, format!("`{key}` must be a string"))),
    }
}

fn opt_bool(obj: &Map<String, Value>, key: &str, path: &str) -> Result<bool, TemplateError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(false),
        Some(Value::Bool(b)) => Ok(*b),
        Some(_) => Err(TemplateError::malformed(path, format!("`{key}` must be a boolean"))),
    }
}

/// Canonical JSON form of a template. Every attribute is written, in a
/// fixed key order.
pub fn template_to_value(t: &Template) -> Value {
    json!({
        "id": t.id,
        "name": t.name,
        "description": t.description,
        "children": t.children.iter().map(node_to_value).collect::<Vec<_>>(),
    })
}

pub fn emit_template(t: &Template) -> String {
    let mut out = serde_json::to_string_pretty(&template_to_value(t)).expect("template serializes");
    out.push('\n');
    out
}

fn node_to_value(node: &TemplateNode) -> Value {
    match node {
        TemplateNode::Element(e) => json!({
            "kind": "element",
            "name": e.name,
            "label": e.label,
            "required": e.required,
            "multivalued": e.multivalued,
            "children": e.children.iter().map(node_to_value).collect::<Vec<_>>(),
        }),
        TemplateNode::Field(f) => json!({
            "kind": "field",
            "name": f.name,
            "label": f.label,
            "required": f.required,
            "multivalued": f.multivalued,
            "valueType": f.value_kind.as_str(),
            "valueSets": f.value_sets.iter().map(value_set_to_value).collect::<Vec<_>>(),
            "description": f.description,
        }),
    }
}

fn value_set_to_value(vs: &ValueSetSpec) -> Value {
    let selector = match &vs.selector {
        Selector::All => json!({ "type": "all" }),
        Selector::Branch { root } => json!({ "type": "branch", "root": root }),
        Selector::Terms { terms } => json!({ "type": "terms", "terms": terms }),
    };
    json!({ "source": vs.source, "selector": selector })
}

/// One template field with its location and the required flag after
/// propagation through its ancestors.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatField<'t> {
    pub path: FieldPath,
    pub spec: &'t FieldSpec,
    pub effective_required: bool,
    /// Ancestor elements that are not themselves required, outermost first.
    /// A required field below one of these is only demanded once the
    /// element is instantiated in a record.
    pub optional_ancestors: Vec<FieldPath>,
}

impl Template {
    /// Depth-first, pre-order list of every field.
    pub fn flatten_fields(&self) -> Vec<FlatField<'_>> {
        let mut out = Vec::new();
        flatten_into(&self.children, None, &[], true, &mut out);
        out
    }

    /// Paths of every element node, pre-order.
    pub fn element_paths(&self) -> Vec<FieldPath> {
        fn walk(nodes: &[TemplateNode], parent: Option<&FieldPath>, out: &mut Vec<FieldPath>) {
            for node in nodes {
                if let TemplateNode::Element(e) = node {
                    let path = extend(parent, &e.name);
                    out.push(path.clone());
                    walk(&e.children, Some(&path), out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.children, None, &mut out);
        out
    }

    /// Vocabulary identifiers referenced by any value set, sorted.
    pub fn vocabulary_refs(&self) -> BTreeSet<String> {
        self.flatten_fields()
            .iter()
            .flat_map(|f| f.spec.value_sets.iter().map(|vs| vs.source.clone()))
            .collect()
    }
}

fn extend(parent: Option<&FieldPath>, name: &str) -> FieldPath {
    // Names in a parsed template are machine names, which are always valid segments.
    match parent {
        Some(p) => p.child(name),
        None => FieldPath::root(name),
    }
    .expect("machine names are valid path segments")
}

fn flatten_into<'t>(
    nodes: &'t [TemplateNode],
    parent: Option<&FieldPath>,
    optional_ancestors: &[FieldPath],
    ancestors_required: bool,
    out: &mut Vec<FlatField<'t>>,
) {
    for node in nodes {
        match node {
            TemplateNode::Field(spec) => out.push(FlatField {
                path: extend(parent, &spec.name),
                spec,
                effective_required: spec.required && ancestors_required,
                optional_ancestors: optional_ancestors.to_vec(),
            }),
            TemplateNode::Element(e) => {
                let path = extend(parent, &e.name);
                let mut optional = optional_ancestors.to_vec();
                if !e.required {
                    optional.push(path.clone());
                }
                flatten_into(&e.children, Some(&path), &optional, ancestors_required && e.required, out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagnosticKind {
    UnknownVocabulary,
    EmptyElement,
    DuplicateTerm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemplateDiagnostic {
    pub kind: DiagnosticKind,
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

impl fmt::Display for TemplateDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let severity = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        let kind = serde_json::to_value(self.kind).expect("kind serializes");
        write!(f, "{severity}: {} at `{}`: {}", kind.as_str().unwrap_or_default(), self.path, self.message)
    }
}

/// Checks a parsed template against the set of vocabularies that will be
/// available at evaluation time. An empty result means the template is
/// usable; only [`Severity::Error`] diagnostics block evaluation.
pub fn validate_template<S: AsRef<str>>(t: &Template, known_vocabs: &[S]) -> Vec<TemplateDiagnostic> {
    let known: HashSet<&str> = known_vocabs.iter().map(AsRef::as_ref).collect();
    let mut out = Vec::new();
    validate_nodes(&t.children, "", &known, &mut out);
    out
}

fn validate_nodes(nodes: &[TemplateNode], parent: &str, known: &HashSet<&str>, out: &mut Vec<TemplateDiagnostic>) {
    for node in nodes {
        let path = join_path(parent, node.name());
        match node {
            TemplateNode::Element(e) => {
                if e.required && e.children.is_empty() {
                    out.push(TemplateDiagnostic {
                        kind: DiagnosticKind::EmptyElement,
                        severity: Severity::Warning,
                        path: path.clone(),
                        message: "required element has no children".into(),
                    });
                }
                validate_nodes(&e.children, &path, known, out);
            }
            TemplateNode::Field(f) => {
                let mut reported = HashSet::new();
                for vs in &f.value_sets {
                    if !known.contains(vs.source.as_str()) && reported.insert(vs.source.as_str()) {
                        out.push(TemplateDiagnostic {
                            kind: DiagnosticKind::UnknownVocabulary,
                            severity: Severity::Error,
                            path: path.clone(),
                            message: format!("vocabulary `{}` is not loaded", vs.source),
                        });
                    }
                }
                let mut seen = HashSet::new();
                for vs in &f.value_sets {
                    if let Selector::Terms { terms } = &vs.selector {
                        for term in terms {
                            if !seen.insert((vs.source.as_str(), term.as_str())) {
                                out.push(TemplateDiagnostic {
                                    kind: DiagnosticKind::DuplicateTerm,
                                    severity: Severity::Warning,
                                    path: path.clone(),
                                    message: format!("term `{term}` is listed more than once"),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
}

pub fn has_errors(diagnostics: &[TemplateDiagnostic]) -> bool {
    diagnostics.iter().any(|d| d.severity == Severity::Error)
}
