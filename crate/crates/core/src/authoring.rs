//! Turns a plain-text checklist into a [`Template`].
//!
//! One definition per line, `label : kind [flags...]`, with `#` comments
//! and two spaces of indentation per nesting level:
//!
//! ```text
//! Sample ID : text required
//! Contact Information : element
//!   Email : text required
//! Preparation Medium : controlled required vocab=hubmap-samples
//! Storage Unit : controlled vocab=units branch=UO:0000003
//! ```
//!
//! Flags are `required`, `multivalued`, `vocab=<id>` (starts a value set
//! selecting the whole vocabulary), and `branch=<iri>` or
//! `terms=<iri>|<iri>...` narrowing the most recent `vocab=`.


use thiserror::Error;

use crate::template::{
    is_identifier, is_machine_name, ElementSpec, FieldSpec, Selector, Template, TemplateNode, ValueKind,
    ValueSetSpec,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthorError {
    #[error("MALFORMED_LINE at line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("NAME_COLLISION at line {line}: `{name}` already defined at line {first_line}")]
    NameCollision { line: usize, first_line: usize, name: String },
}

/// Template-level attributes that the checklist itself does not carry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorOptions {
    pub id: String,
    pub name: String,
    pub description: String,
}

impl Default for AuthorOptions {
    fn default() -> Self {
        AuthorOptions { id: "urn:template:authored".into(), name: String::new(), description: String::new() }
    }
}

/// Machine name for a display label: lowercase, punctuation dropped,
/// whitespace runs become single underscores. A leading digit gets an
/// underscore prefix so the result is a valid machine name.
pub fn derive_machine_name(label: &str) -> String {
    let mut words = Vec::new();
    for word in label.split_whitespace() {
        let kept: String = word
            .chars()
            .filter(|c| c.is_ascii_alphanumeric() || *c == '_')
            .map(|c| c.to_ascii_lowercase())
            .collect();
        if !kept.is_empty() {
            words.push(kept);
        }
    }
    let mut name = words.join("_");
    if name.starts_with(|c: char| c.is_ascii_digit()) {
        name.insert(0, '_');
    }
    name
}

struct Pending {
    line: usize,
    depth: usize,
    node: TemplateNode,
}

pub fn author_template(checklist: &str, options: &AuthorOptions) -> Result<Template, AuthorError> {
    let mut items = Vec::new();
    for (index, raw) in checklist.lines().enumerate() {
        let line = index + 1;
        let content = raw.trim_end();
        let trimmed = content.trim_start_matches(' ');
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let indent = content.len() - trimmed.len();
        if trimmed.starts_with('\t') || indent % 2 != 0 {
            return Err(malformed(line, "indentation must be a multiple of two spaces"));
        }
        items.push(Pending { line, depth: indent / 2, node: parse_line(trimmed, line)? });
    }

    let mut pos = 0;
    let children = build_level(&mut items, &mut pos, 0)?;
    if !is_identifier(&options.id) {
        return Err(malformed(0, format!("template id {:?} is not a valid identifier", options.id)));
    }
    Ok(Template {
        id: options.id.clone(),
        name: options.name.clone(),
        description: options.description.clone(),
        children,
    })
}

fn build_level(items: &mut [Pending], pos: &mut usize, depth: usize) -> Result<Vec<TemplateNode>, AuthorError> {
    let mut nodes = Vec::new();
    let mut names: Vec<(String, usize)> = Vec::new();
    while *pos < items.len() {
        let current_depth = items[*pos].depth;
        if current_depth < depth {
            break;
        }
        if current_depth > depth {
            return Err(malformed(items[*pos].line, "indented deeper than its parent allows"));
        }
        let line = items[*pos].line;
        *pos += 1;
        let has_children = *pos < items.len() && items[*pos].depth > depth;
        let mut node = std::mem::replace(
            &mut items[*pos - 1].node,
            TemplateNode::Element(ElementSpec {
                name: String::new(),
                label: String::new(),
                required: false,
                multivalued: false,
                children: Vec::new(),
            }),
        );
        match &mut node {
            TemplateNode::Element(e) => {
                if !has_children {
                    return Err(malformed(line, format!("element `{}` has no children", e.label)));
                }
                e.children = build_level(items, pos, depth + 1)?;
            }
            TemplateNode::Field(f) => {
                if has_children {
                    return Err(malformed(items[*pos].line, format!("field `{}` cannot have children", f.label)));
                }
            }
        }
        if let Some((_, first_line)) = names.iter().find(|(n, _)| n == node.name()) {
            return Err(AuthorError::NameCollision { line, first_line: *first_line, name: node.name().to_owned() });
        }
        names.push((node.name().to_owned(), line));
        nodes.push(node);
    }
    Ok(nodes)
}

fn parse_line(text: &str, line: usize) -> Result<TemplateNode, AuthorError> {
    let (label, rest) = text
        .split_once(':')
        .ok_or_else(|| malformed(line, "expected `label : kind [flags]`"))?;
    let label = label.trim();
    if label.is_empty() {
        return Err(malformed(line, "empty label"));
    }
    let name = derive_machine_name(label);
    if !is_machine_name(&name) {
        return Err(malformed(line, format!("label `{label}` yields no usable machine name")));
    }

    let mut tokens = rest.split_whitespace();
    let kind = tokens.next().ok_or_else(|| malformed(line, "missing kind"))?;
    let mut required = false;
    let mut multivalued = false;
    let mut value_sets: Vec<ValueSetSpec> = Vec::new();
    for token in tokens {
        match token.split_once('=') {
            None if token == "required" => required = true,
            None if token == "multivalued" => multivalued = true,
            Some(("vocab", id)) => {
                if !is_identifier(id) {
                    return Err(malformed(line, "`vocab=` needs an identifier"));
                }
                value_sets.push(ValueSetSpec { source: id.to_owned(), selector: Selector::All });
            }
            Some((key @ ("branch" | "terms"), value)) => {
                let Some(current) = value_sets.last_mut() else {
                    return Err(malformed(line, format!("`{key}=` must follow a `vocab=`")));
                };
                if current.selector != Selector::All {
                    return Err(malformed(line, format!("`{key}=` given twice for one vocabulary")));
                }
                current.selector = if key == "branch" {
                    if !is_identifier(value) {
                        return Err(malformed(line, "`branch=` needs an identifier"));
                    }
                    Selector::Branch { root: value.to_owned() }
                } else {
                    let terms: Vec<String> = value.split('|').map(str::to_owned).collect();
                    if !terms.iter().all(|t| is_identifier(t)) {
                        return Err(malformed(line, "`terms=` entries must be identifiers"));
                    }
                    Selector::Terms { terms }
                };
            }
            _ => return Err(malformed(line, format!("unknown flag `{token}`"))),
        }
    }

    if kind == "element" {
        if !value_sets.is_empty() {
            return Err(malformed(line, "elements take no vocabulary"));
        }
        return Ok(TemplateNode::Element(ElementSpec {
            name,
            label: label.to_owned(),
            required,
            multivalued,
            children: Vec::new(),
        }));
    }

    let value_kind = ValueKind::from_name(kind).ok_or_else(|| malformed(line, format!("unknown kind `{kind}`")))?;
    match (value_kind == ValueKind::Controlled, value_sets.is_empty()) {
        (true, true) => return Err(malformed(line, "controlled field needs `vocab=`")),
        (false, false) => return Err(malformed(line, format!("{kind} field takes no vocabulary"))),
        _ => {}
    }
    Ok(TemplateNode::Field(FieldSpec {
        name,
        label: label.to_owned(),
        value_kind,
        required,
        multivalued,
        value_sets,
        description: String::new(),
    }))
}

fn malformed(line: usize, message: impl Into<String>) -> AuthorError {
    AuthorError::MalformedLine { line, message: message.into() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::{emit_template, parse_template, validate_template};

    fn author(text: &str) -> Result<Template, AuthorError> {
        author_template(text, &AuthorOptions::default())
    }

    #[test]
    fn derives_machine_names() {
        assert_eq!(derive_machine_name("Preparation Medium"), "preparation_medium");
        assert_eq!(derive_machine_name(" Buffered Formalin (10% NBF) "), "buffered_formalin_10_nbf");
        assert_eq!(derive_machine_name("1 x PBS"), "_1_x_pbs");
        assert_eq!(derive_machine_name("%%"), "");
    }

    #[test]
    fn controlled_required_line() {
        let t = author("Preparation Medium : controlled required vocab=hubmap-samples").unwrap();
        let TemplateNode::Field(f) = &t.children[0] else { panic!("expected field") };
        assert_eq!(f.name, "preparation_medium");
        assert_eq!(f.label, "Preparation Medium");
        assert_eq!(f.value_kind, ValueKind::Controlled);
        assert!(f.required);
        assert_eq!(f.value_sets, vec![ValueSetSpec { source: "hubmap-samples".into(), selector: Selector::All }]);
    }

    #[test]
    fn empty_checklist_gives_empty_template() {
        let t = author("# nothing here\n\n").unwrap();
        assert!(t.children.is_empty());
    }

    #[test]
    fn derived_name_collision() {
        let err = author("Type : text\ntype : text\n").unwrap_err();
        assert_eq!(err, AuthorError::NameCollision { line: 2, first_line: 1, name: "type".into() });
    }

    #[test]
    fn nesting_and_selectors() {
        let text = "\
Person : element required
  Name : text required
  Contact Information : element
    Email : text required
    Phone : text multivalued
Unit : controlled vocab=units branch=UO:0000003 vocab=extra terms=x:1|x:2
";
        let t = author(text).unwrap();
        let paths: Vec<String> = t.flatten_fields().iter().map(|f| f.path.to_string()).collect();
        assert_eq!(
            paths,
            ["person.name", "person.contact_information.email", "person.contact_information.phone", "unit"]
        );
        assert!(validate_template(&t, &["units", "extra"]).is_empty());
        assert_eq!(parse_template(&emit_template(&t)).unwrap(), t);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let cases = [
            ("A : text\n   B : text\n", 2),
            ("no separator here\n", 1),
            ("A : float\n", 1),
            ("A : controlled\n", 1),
            ("A : text vocab=x\n", 1),
            ("A : element\nB : text\n", 1),
            ("A : text\n  B : text\n", 2),
            ("A : element\n    B : text\n", 2),
            ("A : controlled branch=x vocab=v\n", 1),
            ("A : text bogus\n", 1),
        ];
        for (text, expected) in cases {
            match author(text) {
                Err(AuthorError::MalformedLine { line, .. }) => assert_eq!(line, expected, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
