//! Seeded generators for templates, vocabularies and records that
//! exercise every value kind, nesting, and the common ways records go
//! wrong.

use std::collections::HashSet;

use fairlint_core::template::{ElementSpec, Selector, TemplateNode, ValueSetSpec};
use fairlint_core::terms::TermRecord;
use fairlint_core::{FieldPath, FieldSpec, FieldValue, MetadataRecord, TermIndex, Template, ValueKind, Vocabulary};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

const WORDS: &[&str] = &[
    "oct", "embedded", "paraffin", "frozen", "methanol", "buffer", "tissue", "storage", "medium", "cryo",
    "section", "block", "sucrose", "formalin", "saline", "donor", "liquid", "nitrogen", "dry", "ice", "PBS",
    "CMC", "4%", "(NBF)", "x", "Ethanol", "RNA", "later",
];

const NAMES: &[&str] = &[
    "sample_ID", "sample_type", "storage_medium", "prep_medium", "donor", "age", "thickness", "index",
    "date", "unit", "value", "notes", "contact", "email", "phone", "person", "temperature", "site",
];

pub struct World {
    pub vocabulary: Vocabulary,
    pub template: Template,
    pub records: Vec<MetadataRecord>,
}

impl World {
    pub fn index(&self) -> TermIndex {
        TermIndex::new([self.vocabulary.clone()]).unwrap()
    }
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn phrase(rng: &mut StdRng, max_words: usize) -> String {
    let n = rng.random_range(1..=max_words);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Deletes, duplicates or swaps one character.
pub fn typo(rng: &mut StdRng, s: &str) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    if chars.len() < 2 {
        chars.push('x');
        return chars.into_iter().collect();
    }
    let i = rng.random_range(0..chars.len() - 1);
    match rng.random_range(0..3) {
        0 => {
            chars.remove(i);
        }
        1 => chars.insert(i, chars[i]),
        _ => chars.swap(i, i + 1),
    }
    chars.into_iter().collect()
}

pub fn vocabulary(rng: &mut StdRng, id: &str, max_terms: usize) -> Vocabulary {
    let n = rng.random_range(1..=max_terms);
    let mut terms: Vec<TermRecord> = Vec::with_capacity(n);
    for i in 0..n {
        let synonyms = (0..rng.random_range(0..=2)).map(|_| phrase(rng, 3)).collect();
        let parents = if i > 0 && rng.random_bool(0.6) {
            vec![terms[rng.random_range(0..i)].iri.clone()]
        } else {
            Vec::new()
        };
        terms.push(TermRecord { iri: format!("urn:{id}:t{i}"), label: phrase(rng, 4), synonyms, parents });
    }
    Vocabulary::new(id, terms).unwrap().0
}

fn machine_name(rng: &mut StdRng, used: &mut HashSet<String>) -> String {
    loop {
        let base = *NAMES.choose(rng).unwrap();
        let name = if rng.random_bool(0.5) { base.to_owned() } else { format!("{base}_{}", rng.random_range(0..10)) };
        if used.insert(name.clone()) {
            return name;
        }
    }
}

fn value_sets(rng: &mut StdRng, vocab: &Vocabulary) -> Vec<ValueSetSpec> {
    let iris: Vec<&str> = vocab.terms().map(|t| t.iri.as_str()).collect();
    (0..rng.random_range(1..=2))
        .map(|_| {
            let selector = match rng.random_range(0..3) {
                0 => Selector::All,
                1 => Selector::Branch { root: iris.choose(rng).unwrap().to_string() },
                _ => {
                    let k = rng.random_range(1..=iris.len().min(4));
                    Selector::Terms { terms: iris.choose_multiple(rng, k).map(|s| s.to_string()).collect() }
                }
            };
            ValueSetSpec { source: vocab.id().to_owned(), selector }
        })
        .collect()
}

fn nodes(rng: &mut StdRng, vocab: &Vocabulary, depth: usize, budget: &mut usize) -> Vec<TemplateNode> {
    let mut used = HashSet::new();
    let mut out = Vec::new();
    for _ in 0..rng.random_range(0..=4) {
        if *budget == 0 {
            break;
        }
        let name = machine_name(rng, &mut used);
        let label = name.replace('_', " ");
        if depth < 2 && rng.random_bool(0.25) {
            out.push(TemplateNode::Element(ElementSpec {
                children: nodes(rng, vocab, depth + 1, budget),
                name,
                label,
                required: rng.random_bool(0.5),
                multivalued: rng.random_bool(0.2),
            }));
        } else {
            *budget -= 1;
            let value_kind = *ValueKind::ALL.choose(rng).unwrap();
            let value_sets = if value_kind == ValueKind::Controlled { value_sets(rng, vocab) } else { Vec::new() };
            out.push(TemplateNode::Field(FieldSpec {
                name,
                label,
                value_kind,
                required: rng.random_bool(0.6),
                multivalued: rng.random_bool(0.2),
                value_sets,
                description: if rng.random_bool(0.3) { phrase(rng, 5) } else { String::new() },
            }));
        }
    }
    out
}

/// A template with at most `max_fields` fields.
pub fn template(rng: &mut StdRng, vocab: &Vocabulary, max_fields: usize) -> Template {
    let mut budget = max_fields;
    let mut children = nodes(rng, vocab, 0, &mut budget);
    while children.is_empty() && rng.random_bool(0.8) {
        budget = max_fields;
        children = nodes(rng, vocab, 0, &mut budget);
    }
    Template {
        id: format!("urn:template:{}", rng.random_range(0..1000)),
        name: phrase(rng, 3),
        description: if rng.random_bool(0.5) { phrase(rng, 6) } else { String::new() },
        children,
    }
}

fn value(rng: &mut StdRng, spec: &FieldSpec, vocab: &Vocabulary) -> FieldValue {
    let lit = |raw: &str, dt: Option<&str>| FieldValue::literal(raw, dt.map(str::to_owned));
    if rng.random_bool(0.15) {
        return FieldValue::Empty;
    }
    let valid = rng.random_bool(0.6);
    match spec.value_kind {
        ValueKind::Text => lit(&phrase(rng, 3), None),
        ValueKind::Integer if valid => lit(&rng.random_range(-50..500).to_string(), Some("xsd:integer")),
        ValueKind::Decimal if valid => {
            let raw = [format!("{}", rng.random_range(0..300)), format!("{}.{}", rng.random_range(0..30), rng.random_range(0..99))]
                .choose(rng)
                .unwrap()
                .clone();
            lit(&raw, Some("xsd:float"))
        }
        ValueKind::Integer | ValueKind::Decimal => {
            let bad = [format!("{} days", rng.random_range(0..300)), "four".into(), "20.8.1".into(), format!("{}um", rng.random_range(1..20))];
            lit(bad.choose(rng).unwrap(), None)
        }
        ValueKind::Date if valid => lit(&format!("20{:02}-{:02}-{:02}", rng.random_range(0..30), rng.random_range(1..13), rng.random_range(1..29)), None),
        ValueKind::Date => lit(["03/14/2021", "2021-02-30", "yesterday", "2021-13-01"].choose(rng).unwrap(), None),
        ValueKind::Controlled => {
            let term = vocab.terms().collect::<Vec<_>>().choose(rng).copied().unwrap().clone();
            match rng.random_range(0..4) {
                0 => FieldValue::TermRef { iri: term.iri, label: term.label },
                1 => lit(&term.label.to_uppercase(), None),
                2 => lit(&typo(rng, &term.label), None),
                _ => lit(&phrase(rng, 3), None),
            }
        }
    }
}

fn fill(rng: &mut StdRng, nodes: &[TemplateNode], parent: Option<&FieldPath>, vocab: &Vocabulary, r: &mut MetadataRecord, misspell: &mut Vec<FieldPath>) {
    for node in nodes {
        let path = match parent {
            Some(p) => p.child(node.name()).unwrap(),
            None => FieldPath::root(node.name()).unwrap(),
        };
        match node {
            TemplateNode::Element(e) => {
                if rng.random_bool(0.75) {
                    let before = r.entries.len();
                    fill(rng, &e.children, Some(&path), vocab, r, misspell);
                    if r.entries.len() == before && rng.random_bool(0.5) {
                        r.insert(path, vec![FieldValue::Empty]);
                    }
                }
            }
            TemplateNode::Field(f) => match rng.random_range(0..10) {
                0 | 1 => {}
                2 => misspell.push(path),
                _ => {
                    let n = if f.multivalued { rng.random_range(0..=3) } else { 1 };
                    let values = (0..n).map(|_| value(rng, f, vocab)).collect();
                    r.insert(path, values);
                }
            },
        }
    }
}

/// A record for `t`: fields present, absent, empty, invalid, misspelled,
/// plus unknown extras.
pub fn record(rng: &mut StdRng, t: &Template, vocab: &Vocabulary, record_ref: &str) -> MetadataRecord {
    let mut r = MetadataRecord::new(record_ref);
    let mut misspell = Vec::new();
    fill(rng, &t.children, None, vocab, &mut r, &mut misspell);
    let known: HashSet<String> = t.flatten_fields().iter().map(|f| f.path.to_string()).chain(t.element_paths().iter().map(ToString::to_string)).collect();
    let taken = |p: &FieldPath, r: &MetadataRecord| known.contains(&p.to_string()) || r.entries.contains_key(p);
    for path in misspell {
        let leaf = typo(rng, path.leaf());
        let Ok(bad) = path.parent().map_or_else(|| FieldPath::root(&leaf), |p| p.child(&leaf)) else { continue };
        if !taken(&bad, &r) {
            let v = FieldValue::literal(phrase(rng, 2), None);
            r.insert(bad, vec![v]);
        }
    }
    for _ in 0..rng.random_range(0..=2) {
        let Ok(extra) = FieldPath::root(&format!("extra_{}", rng.random_range(0..100))) else { continue };
        if !taken(&extra, &r) {
            r.insert(extra, vec![FieldValue::literal(phrase(rng, 2), None)]);
        }
    }
    r
}

pub fn world(seed: u64, max_fields: usize, max_records: usize) -> World {
    let mut rng = rng(seed);
    let vocabulary = vocabulary(&mut rng, "v", 12);
    let template = template(&mut rng, &vocabulary, max_fields);
    let records = (0..rng.random_range(0..=max_records))
        .map(|i| record(&mut rng, &template, &vocabulary, &format!("doi:10.5555/rec.{seed}.{i}")))
        .collect();
    World { vocabulary, template, records }
}
