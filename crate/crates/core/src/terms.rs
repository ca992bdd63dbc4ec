//! Controlled vocabularies and term lookup.
//!
//! Vocabularies load from a four-column TSV (`iri`, `label`, `synonyms`,
//! `parents`). A [`TermIndex`] holds them immutably and resolves a field's
//! value-set specs into a [`ValueSet`], which answers exact and
//! closest-match queries.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::record::FieldValue;
use crate::template::{is_identifier, Selector, ValueSetSpec};
use crate::text::{normalize, ratio};

pub const VOCABULARY_HEADER: &str = "iri\tlabel\tsynonyms\tparents";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TermRecord {
    pub iri: String,
    pub label: String,
    pub synonyms: Vec<String>,
    pub parents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    id: String,
    terms: IndexMap<String, TermRecord>,
    children: HashMap<String, Vec<String>>,
}

impl Vocabulary {
    pub fn new(id: impl Into<String>, terms: Vec<TermRecord>) -> Result<(Self, Vec<VocabDiagnostic>), TermError> {
        let id = id.into();
        let mut by_iri = IndexMap::with_capacity(terms.len());
        for (index, term) in terms.into_iter().enumerate() {
            if by_iri.contains_key(&term.iri) {
                return Err(TermError::DuplicateIri { line: index + 2, iri: term.iri });
            }
            by_iri.insert(term.iri.clone(), term);
        }
        let mut children: HashMap<String, Vec<String>> = HashMap::new();
        let mut diagnostics = Vec::new();
        for term in by_iri.values() {
            for parent in &term.parents {
                if by_iri.contains_key(parent) {
                    children.entry(parent.clone()).or_default().push(term.iri.clone());
                } else {
                    diagnostics.push(VocabDiagnostic::DanglingParent {
                        vocabulary: id.clone(),
                        iri: term.iri.clone(),
                        parent: parent.clone(),
                    });
                }
            }
        }
        Ok((Vocabulary { id, terms: by_iri, children }, diagnostics))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, iri: &str) -> Option<&TermRecord> {
        self.terms.get(iri)
    }

    /// Terms in file order.
    pub fn terms(&self) -> impl Iterator<Item = &TermRecord> {
        self.terms.values()
    }

    /// `root` followed by its transitive descendants, breadth first.
    pub fn branch(&self, root: &str) -> Option<Vec<&TermRecord>> {
        let root_term = self.terms.get(root)?;
        let mut seen = HashSet::from([root]);
        let mut queue = VecDeque::from([root_term]);
        let mut out = Vec::new();
        while let Some(term) = queue.pop_front() {
            out.push(term);
            for child in self.children.get(&term.iri).into_iter().flatten() {
                if seen.insert(child.as_str()) {
                    queue.push_back(&self.terms[child.as_str()]);
                }
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VocabDiagnostic {
    DanglingParent { vocabulary: String, iri: String, parent: String },
}

impl fmt::Display for VocabDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VocabDiagnostic::DanglingParent { vocabulary, iri, parent } => {
                write!(f, "{vocabulary}: term `{iri}` names unknown parent `{parent}`")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("MALFORMED_DOCUMENT at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("DUPLICATE_IRI at line {line}: `{iri}`")]
    DuplicateIri { line: usize, iri: String },
    #[error("DUPLICATE_VOCABULARY: `{0}` loaded twice")]
    DuplicateVocabulary(String),
    #[error("UNKNOWN_VOCABULARY: `{0}`")]
    UnknownVocabulary(String),
    #[error("UNKNOWN_ROOT_TERM: `{iri}` in `{vocabulary}`")]
    UnknownRootTerm { vocabulary: String, iri: String },
    #[error("UNKNOWN_TERM: `{iri}` in `{vocabulary}`")]
    UnknownTerm { vocabulary: String, iri: String },
}

/// Parses a vocabulary TSV. An empty document is an empty vocabulary;
/// otherwise the first non-blank line must be the header.
pub fn load_vocabulary(id: &str, doc: &str) -> Result<(Vocabulary, Vec<VocabDiagnostic>), TermError> {
    if !is_identifier(id) {
        return Err(TermError::Malformed { line: 0, message: format!("vocabulary id {id:?} is not an identifier") });
    }
    let mut lines = doc
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((line, header)) = lines.next() else {
        return Vocabulary::new(id, Vec::new());
    };
    if header.trim_start_matches('\u{feff}') != VOCABULARY_HEADER {
        return Err(TermError::Malformed { line, message: format!("expected header `{VOCABULARY_HEADER}`") });
    }

    let mut terms = Vec::new();
    let mut lines_by_iri = HashMap::new();
    for (line, row) in lines {
        let cells: Vec<&str> = row.split('\t').collect();
        if cells.len() < 2 || cells.len() > 4 {
            return Err(TermError::Malformed { line, message: format!("expected 4 columns, found {}", cells.len()) });
        }
        let cell = |i: usize| cells.get(i).map_or("", |c| c.trim());
        let iri = cell(0);
        let label = cell(1);
        if !is_identifier(iri) {
            return Err(TermError::Malformed { line, message: format!("invalid IRI {iri:?}") });
        }
        if label.is_empty() {
            return Err(TermError::Malformed { line, message: "empty label".into() });
        }
        let split = |s: &str| s.split('|').map(str::trim).filter(|p| !p.is_empty()).map(str::to_owned).collect::<Vec<_>>();
        let parents = split(cell(3));
        if let Some(bad) = parents.iter().find(|p| !is_identifier(p)) {
            return Err(TermError::Malformed { line, message: format!("invalid parent {bad:?}") });
        }
        if lines_by_iri.insert(iri.to_owned(), line).is_some() {
            return Err(TermError::DuplicateIri { line, iri: iri.to_owned() });
        }
        terms.push(TermRecord { iri: iri.to_owned(), label: label.to_owned(), synonyms: split(cell(2)), parents });
    }
    Vocabulary::new(id, terms)
}

/// Serializes a vocabulary back to TSV.
pub fn emit_vocabulary(v: &Vocabulary) -> String {
    let mut out = String::from(VOCABULARY_HEADER);
    out.push('\n');
    for t in v.terms() {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", t.iri, t.label, t.synonyms.join("|"), t.parents.join("|")));
    }
    out
}

/// Resolution boundary between evaluation and wherever terms live. The
/// local [`TermIndex`] implements it; a remote ontology-repository client
/// can stand in without changes to the evaluator.
pub trait Terminology: Sync {
    fn vocabulary_ids(&self) -> Vec<String>;
    fn resolve_value_set(&self, specs: &[ValueSetSpec]) -> Result<ValueSet, Vec<TermError>>;
}

/// Immutable collection of loaded vocabularies plus a normalized label
/// index over all of them.
#[derive(Debug, Clone, Default)]
pub struct TermIndex {
    vocabularies: BTreeMap<String, Vocabulary>,
    labels: HashMap<String, Vec<(String, String)>>,
}

impl TermIndex {
    pub fn new(vocabularies: impl IntoIterator<Item = Vocabulary>) -> Result<Self, TermError> {
        let mut index = TermIndex::default();
        for vocab in vocabularies {
            for term in vocab.terms() {
                for text in std::iter::once(&term.label).chain(&term.synonyms) {
                    let entry = index.labels.entry(normalize(text)).or_default();
                    let key = (vocab.id.clone(), term.iri.clone());
                    if !entry.contains(&key) {
                        entry.push(key);
                    }
                }
            }
            let id = vocab.id.clone();
            if index.vocabularies.insert(id.clone(), vocab).is_some() {
                return Err(TermError::DuplicateVocabulary(id));
            }
        }
        Ok(index)
    }

    pub fn vocabulary(&self, id: &str) -> Option<&Vocabulary> {
        self.vocabularies.get(id)
    }

    pub fn vocabularies(&self) -> impl Iterator<Item = &Vocabulary> {
        self.vocabularies.values()
    }

    /// Every `(vocabulary, iri)` whose label or a synonym normalizes to the
    /// same string as `text`.
    pub fn find_by_label(&self, text: &str) -> &[(String, String)] {
        self.labels.get(&normalize(text)).map_or(&[], Vec::as_slice)
    }
}

impl Terminology for TermIndex {
    fn vocabulary_ids(&self) -> Vec<String> {
        self.vocabularies.keys().cloned().collect()
    }

    fn resolve_value_set(&self, specs: &[ValueSetSpec]) -> Result<ValueSet, Vec<TermError>> {
        resolve_value_set(specs, self)
    }
}

/// Union of the terms selected by `specs`, deduplicated by IRI with the
/// first occurrence kept. Every unresolvable reference is reported.
pub fn resolve_value_set(specs: &[ValueSetSpec], idx: &TermIndex) -> Result<ValueSet, Vec<TermError>> {
    let mut errors = Vec::new();
    let mut terms: Vec<&TermRecord> = Vec::new();
    for spec in specs {
        let Some(vocab) = idx.vocabulary(&spec.source) else {
            errors.push(TermError::UnknownVocabulary(spec.source.clone()));
            continue;
        };
        match &spec.selector {
            Selector::All => terms.extend(vocab.terms()),
            Selector::Branch { root } => match vocab.branch(root) {
                Some(branch) => terms.extend(branch),
                None => errors.push(TermError::UnknownRootTerm { vocabulary: vocab.id.clone(), iri: root.clone() }),
            },
            Selector::Terms { terms: iris } => {
                for iri in iris {
                    match vocab.get(iri) {
                        Some(term) => terms.push(term),
                        None => errors.push(TermError::UnknownTerm { vocabulary: vocab.id.clone(), iri: iri.clone() }),
                    }
                }
            }
        }
    }
    if errors.is_empty() {
        Ok(ValueSet::new(terms.into_iter().cloned()))
    } else {
        Err(errors)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatchedOn {
    Label,
    Synonym,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchCandidate {
    pub term: TermRecord,
    pub score: f64,
    pub matched_on: MatchedOn,
}

/// A resolved set of admissible terms with lookup tables built once.
#[derive(Debug, Clone, Default)]
pub struct ValueSet {
    terms: Vec<TermRecord>,
    /// Normalized label first, then normalized synonyms, per term.
    forms: Vec<Vec<String>>,
    by_iri: HashMap<String, usize>,
    by_form: HashMap<String, usize>,
}

impl ValueSet {
    pub fn new(terms: impl IntoIterator<Item = TermRecord>) -> Self {
        let mut set = ValueSet::default();
        for term in terms {
            if set.by_iri.contains_key(&term.iri) {
                continue;
            }
            let index = set.terms.len();
            let forms: Vec<String> =
                std::iter::once(&term.label).chain(&term.synonyms).map(|s| normalize(s)).collect();
            for form in &forms {
                set.by_form.entry(form.clone()).or_insert(index);
            }
            set.by_iri.insert(term.iri.clone(), index);
            set.forms.push(forms);
            set.terms.push(term);
        }
        set
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[TermRecord] {
        &self.terms
    }

    pub fn get(&self, iri: &str) -> Option<&TermRecord> {
        self.by_iri.get(iri).map(|&i| &self.terms[i])
    }

    /// Term references match by IRI; literals match when their normalized
    /// text equals a normalized label or synonym.
    pub fn lookup_exact(&self, value: &FieldValue) -> Option<&TermRecord> {
        match value {
            FieldValue::TermRef { iri, .. } => self.get(iri),
            FieldValue::Literal { raw, .. } => self.by_form.get(&normalize(raw)).map(|&i| &self.terms[i]),
            FieldValue::Empty => None,
        }
    }

    /// The `k` terms most similar to `query`, best first. Each term scores
    /// its best label-or-synonym similarity; ties break on label, then IRI.
    pub fn closest_match(&self, query: &str, k: usize) -> Vec<MatchCandidate> {
        let query = normalize(query);
        let mut scored: Vec<(f64, MatchedOn, usize)> = self
            .forms
            .iter()
            .enumerate()
            .map(|(index, forms)| {
                let mut best = (ratio(&query, &forms[0]), MatchedOn::Label);
                for synonym in &forms[1..] {
                    let score = ratio(&query, synonym);
                    if score > best.0 {
                        best = (score, MatchedOn::Synonym);
                    }
                }
                (best.0, best.1, index)
            })
            .collect();
        scored.sort_by(|a, b| {
            let (ta, tb) = (&self.terms[a.2], &self.terms[b.2]);
            b.0.total_cmp(&a.0).then_with(|| ta.label.cmp(&tb.label)).then_with(|| ta.iri.cmp(&tb.iri))
        });
        scored
            .into_iter()
            .take(k)
            .map(|(score, matched_on, index)| MatchCandidate { term: self.terms[index].clone(), score, matched_on })
            .collect()
    }
}

pub fn lookup_exact<'v>(value: &FieldValue, valueset: &'v ValueSet) -> Option<&'v TermRecord> {
    valueset.lookup_exact(value)
}

pub fn closest_match(value: &str, valueset: &ValueSet, k: usize) -> Vec<MatchCandidate> {
    valueset.closest_match(value, k)
}
