//! Record evaluation against a template.
//!
//! Evaluation first aligns record entries with template fields by machine
//! name (proposing renames for likely misspellings of missing required
//! fields), then checks every aligned value against its field's kind and
//! value set. The resulting counts drive the completeness and adherence
//! percentages.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::lexical;
use crate::record::{FetchFailure, FieldValue, MetadataRecord};
use crate::template::{FieldPath, FieldSpec, FlatField, Template, ValueKind};
use crate::terms::{TermError, Terminology, ValueSet};
use crate::text::name_similarity;

/// Maximum number of term candidates attached to one issue.
pub const SUGGESTION_LIMIT: usize = 10;
/// Minimum name similarity for a rename proposal.
pub const RENAME_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IssueKind {
    MissingRequiredValue,
    MissingRequiredField,
    PossibleFieldMisspelling,
    ExpectingInputNumber,
    ExpectingInputDate,
    ValueNotOntologyTerm,
    UnknownField,
}

impl IssueKind {
    pub const ALL: [IssueKind; 7] = [
        IssueKind::MissingRequiredValue,
        IssueKind::MissingRequiredField,
        IssueKind::PossibleFieldMisspelling,
        IssueKind::ExpectingInputNumber,
        IssueKind::ExpectingInputDate,
        IssueKind::ValueNotOntologyTerm,
        IssueKind::UnknownField,
    ];

    pub fn code(self) -> &'static str {
        match self {
            IssueKind::MissingRequiredValue => "MISSING_REQUIRED_VALUE",
            IssueKind::MissingRequiredField => "MISSING_REQUIRED_FIELD",
            IssueKind::PossibleFieldMisspelling => "POSSIBLE_FIELD_MISSPELLING",
            IssueKind::ExpectingInputNumber => "EXPECTING_INPUT_NUMBER",
            IssueKind::ExpectingInputDate => "EXPECTING_INPUT_DATE",
            IssueKind::ValueNotOntologyTerm => "VALUE_NOT_ONTOLOGY_TERM",
            IssueKind::UnknownField => "UNKNOWN_FIELD",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        IssueKind::ALL.into_iter().find(|k| k.code() == code)
    }

    /// Kinds that mark a filled field as invalid.
    pub fn is_invalid_value(self) -> bool {
        matches!(
            self,
            IssueKind::ExpectingInputNumber | IssueKind::ExpectingInputDate | IssueKind::ValueNotOntologyTerm
        )
    }

    pub fn is_missing(self) -> bool {
        matches!(self, IssueKind::MissingRequiredValue | IssueKind::MissingRequiredField)
    }
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Stable issue identifier: 64-bit FNV-1a over `ref|path|kind|observed`,
/// rendered as 16 lowercase hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IssueId(pub u64);

impl IssueId {
    pub fn compute(record_ref: &str, path: &FieldPath, kind: IssueKind, observed: &str) -> Self {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let key = format!("{record_ref}|{path}|{}|{observed}", kind.code());
        IssueId(key.bytes().fold(OFFSET, |hash, b| (hash ^ u64::from(b)).wrapping_mul(PRIME)))
    }
}

impl fmt::Display for IssueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for IssueId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u64::from_str_radix(s, 16).map(IssueId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Coercion,
    TermMatch,
    FieldRename,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Coercion => "coercion",
            Provenance::TermMatch => "term_match",
            Provenance::FieldRename => "field_rename",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Provenance::Coercion, Provenance::TermMatch, Provenance::FieldRename].into_iter().find(|p| p.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SuggestionValue {
    Value(FieldValue),
    Rename(FieldPath),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuggestedValue {
    pub value: SuggestionValue,
    pub score: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub issue_id: IssueId,
    pub record_ref: String,
    pub path: FieldPath,
    pub kind: IssueKind,
    pub observed: String,
    pub suggestions: Vec<SuggestedValue>,
}

impl Issue {
    pub fn new(record_ref: &str, path: FieldPath, fragment: IssueFragment) -> Self {
        Issue {
            issue_id: IssueId::compute(record_ref, &path, fragment.kind, &fragment.observed),
            record_ref: record_ref.to_owned(),
            path,
            kind: fragment.kind,
            observed: fragment.observed,
            suggestions: fragment.suggestions,
        }
    }
}

/// An issue before it is attached to a record and path.
#[derive(Debug, Clone, PartialEq)]
pub struct IssueFragment {
    pub kind: IssueKind,
    pub observed: String,
    pub suggestions: Vec<SuggestedValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordEvaluation {
    pub record_ref: String,
    pub issues: Vec<Issue>,
    pub required_total: usize,
    pub required_filled: usize,
    pub filled_total: usize,
    pub filled_invalid: usize,
    pub status: Status,
    /// Set when the record could not be fetched or parsed; all counts are
    /// then zero.
    pub fetch_error: Option<String>,
}

impl RecordEvaluation {
    pub fn fetch_failed(failure: &FetchFailure) -> Self {
        RecordEvaluation {
            record_ref: failure.record_ref.clone(),
            issues: Vec::new(),
            required_total: 0,
            required_filled: 0,
            filled_total: 0,
            filled_invalid: 0,
            status: Status::Fail,
            fetch_error: Some(failure.cause.clone()),
        }
    }

    pub fn completeness_pct(&self) -> u32 {
        compute_metrics(self).0
    }

    pub fn adherence_pct(&self) -> u32 {
        compute_metrics(self).1
    }
}

/// Integer percentage rounded to nearest, halves away from zero; 100 when
/// the denominator is zero.
pub fn percent(numerator: usize, denominator: usize) -> u32 {
    if denominator == 0 {
        return 100;
    }
    let (n, d) = (numerator as u128, denominator as u128);
    ((200 * n + d) / (2 * d)) as u32
}

/// `(completeness_pct, adherence_pct)`. Records that failed to fetch score 0.
pub fn compute_metrics(eval: &RecordEvaluation) -> (u32, u32) {
    if eval.fetch_error.is_some() {
        return (0, 0);
    }
    (
        percent(eval.required_filled, eval.required_total),
        percent(eval.filled_total - eval.filled_invalid, eval.filled_total),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldCount {
    pub path: FieldPath,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub record_count: usize,
    pub pass_count: usize,
    /// Per template field, the number of records with at least one issue
    /// there. Sorted by count descending, then path.
    pub field_noncompliance: Vec<FieldCount>,
}

impl Summary {
    pub fn from_records(records: &[RecordEvaluation]) -> Self {
        let mut counts: HashMap<&FieldPath, usize> = HashMap::new();
        for record in records {
            let paths: HashSet<&FieldPath> = record
                .issues
                .iter()
                .filter(|i| i.kind.is_missing() || i.kind.is_invalid_value())
                .map(|i| &i.path)
                .collect();
            for path in paths {
                *counts.entry(path).or_default() += 1;
            }
        }
        let mut field_noncompliance: Vec<FieldCount> =
            counts.into_iter().map(|(path, count)| FieldCount { path: path.clone(), count }).collect();
        field_noncompliance
            .sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.path.to_string().cmp(&b.path.to_string())));
        Summary {
            record_count: records.len(),
            pass_count: records.iter().filter(|r| r.status == Status::Pass).count(),
            field_noncompliance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub template_ref: String,
    pub records: Vec<RecordEvaluation>,
    pub summary: Summary,
}

impl EvaluationReport {
    pub fn new(template_ref: impl Into<String>, records: Vec<RecordEvaluation>) -> Self {
        let summary = Summary::from_records(&records);
        EvaluationReport { template_ref: template_ref.into(), records, summary }
    }

    pub fn record(&self, record_ref: &str) -> Option<&RecordEvaluation> {
        self.records.iter().find(|r| r.record_ref == record_ref)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenameProposal {
    pub from: FieldPath,
    pub to: FieldPath,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedEntry {
    pub path: FieldPath,
    pub value: FieldValue,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Alignment {
    /// One entry per value of every record path that names a template
    /// field; an empty value list aligns as a single `Empty`.
    pub aligned: Vec<AlignedEntry>,
    /// Demanded template fields with no record entry at all.
    pub missing_required: Vec<FieldPath>,
    /// Record paths that name no template field, in record order.
    pub unknown: Vec<FieldPath>,
    pub renames: Vec<RenameProposal>,
}

/// Value-level checks for one field value. `demanded` says whether an
/// empty value here is a missing required value.
pub fn check_value(
    spec: &FieldSpec,
    value: &FieldValue,
    demanded: bool,
    value_set: Option<&ValueSet>,
) -> Vec<IssueFragment> {
    let observed = value.display().to_owned();
    let issue = |kind, suggestions| vec![IssueFragment { kind, observed: observed.clone(), suggestions }];
    if value.is_empty() {
        return if demanded { issue(IssueKind::MissingRequiredValue, Vec::new()) } else { Vec::new() };
    }
    match spec.value_kind {
        ValueKind::Text => Vec::new(),
        ValueKind::Integer | ValueKind::Decimal => {
            let decimal = spec.value_kind == ValueKind::Decimal;
            let raw = match value {
                FieldValue::Literal { raw, .. } => Some(raw.as_str()),
                _ => None,
            };
            let valid = raw.is_some_and(|r| if decimal { lexical::is_decimal(r) } else { lexical::is_integer(r) });
            if valid {
                return Vec::new();
            }
            let suggestions = raw
                .and_then(|r| lexical::coerce_leading_number(r, decimal))
                .map(|token| SuggestedValue {
                    value: SuggestionValue::Value(FieldValue::Literal {
                        raw: token.to_owned(),
                        datatype: spec.value_kind.datatype().map(str::to_owned),
                    }),
                    score: 1.0,
                    provenance: Provenance::Coercion,
                })
                .into_iter()
                .collect();
            issue(IssueKind::ExpectingInputNumber, suggestions)
        }
        ValueKind::Date => {
            let valid = matches!(value, FieldValue::Literal { raw, .. } if lexical::is_iso_date(raw));
            if valid {
                Vec::new()
            } else {
                issue(IssueKind::ExpectingInputDate, Vec::new())
            }
        }
        ValueKind::Controlled => {
            let Some(set) = value_set else { return Vec::new() };
            if set.lookup_exact(value).is_some() {
                return Vec::new();
            }
            let suggestions = set
                .closest_match(value.display(), SUGGESTION_LIMIT)
                .into_iter()
                .map(|c| SuggestedValue {
                    value: SuggestionValue::Value(FieldValue::TermRef { iri: c.term.iri, label: c.term.label }),
                    score: c.score,
                    provenance: Provenance::TermMatch,
                })
                .collect();
            issue(IssueKind::ValueNotOntologyTerm, suggestions)
        }
    }
}

/// A template prepared for evaluation: fields flattened, value sets
/// resolved once against a terminology. Shareable across threads.
#[derive(Debug)]
pub struct Evaluator<'t> {
    template: &'t Template,
    fields: Vec<FlatField<'t>>,
    by_path: HashMap<FieldPath, usize>,
    value_sets: Vec<Option<ValueSet>>,
    element_paths: HashSet<FieldPath>,
}

impl<'t> Evaluator<'t> {
    pub fn new(template: &'t Template, terms: &dyn Terminology) -> Result<Self, Vec<TermError>> {
        let fields = template.flatten_fields();
        let mut errors = Vec::new();
        let value_sets = fields
            .iter()
            .map(|f| {
                if f.spec.value_kind != ValueKind::Controlled {
                    return None;
                }
                match terms.resolve_value_set(&f.spec.value_sets) {
                    Ok(set) => Some(set),
                    Err(e) => {
                        errors.extend(e);
                        None
                    }
                }
            })
            .collect();
        if !errors.is_empty() {
            return Err(errors);
        }
        let by_path = fields.iter().enumerate().map(|(i, f)| (f.path.clone(), i)).collect();
        Ok(Evaluator { template, fields, by_path, value_sets, element_paths: template.element_paths().into_iter().collect() })
    }

    pub fn template(&self) -> &'t Template {
        self.template
    }

    pub fn fields(&self) -> &[FlatField<'t>] {
        &self.fields
    }

    pub fn field(&self, path: &FieldPath) -> Option<(&FieldSpec, Option<&ValueSet>)> {
        self.by_path.get(path).map(|&i| (self.fields[i].spec, self.value_sets[i].as_ref()))
    }

    fn is_instantiated(&self, element: &FieldPath, r: &MetadataRecord) -> bool {
        r.entries.keys().any(|p| p == element || element.is_prefix_of(p))
    }

    /// Whether the record must fill `field`: it is required, and every
    /// optional element above it is present in the record.
    fn demanded(&self, field: &FlatField<'_>, r: &MetadataRecord) -> bool {
        field.spec.required && field.optional_ancestors.iter().all(|a| self.is_instantiated(a, r))
    }

    pub fn align_fields(&self, r: &MetadataRecord) -> Alignment {
        let mut alignment = Alignment::default();
        for (path, values) in &r.entries {
            if self.by_path.contains_key(path) {
                if values.is_empty() {
                    alignment.aligned.push(AlignedEntry { path: path.clone(), value: FieldValue::Empty });
                }
                for value in values {
                    alignment.aligned.push(AlignedEntry { path: path.clone(), value: value.clone() });
                }
            } else if !(self.element_paths.contains(path) && values.iter().all(FieldValue::is_empty)) {
                alignment.unknown.push(path.clone());
            }
        }
        for field in &self.fields {
            if self.demanded(field, r) && !r.entries.contains_key(&field.path) {
                alignment.missing_required.push(field.path.clone());
            }
        }

        let mut pairs: Vec<RenameProposal> = Vec::new();
        for missing in &alignment.missing_required {
            for unknown in &alignment.unknown {
                let score = name_similarity(&unknown.to_string(), &missing.to_string());
                if score >= RENAME_THRESHOLD {
                    pairs.push(RenameProposal { from: unknown.clone(), to: missing.clone(), score });
                }
            }
        }
        pairs.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.to.to_string().cmp(&b.to.to_string()))
                .then_with(|| a.from.to_string().cmp(&b.from.to_string()))
        });
        let (mut used_from, mut used_to) = (HashSet::new(), HashSet::new());
        for pair in pairs {
            if !used_from.contains(&pair.from) && !used_to.contains(&pair.to) {
                used_from.insert(pair.from.clone());
                used_to.insert(pair.to.clone());
                alignment.renames.push(pair);
            }
        }
        alignment
    }

    /// A rename is only offered as a repair when the moved values are valid
    /// for the target field, so applying it never adds an invalid value.
    fn rename_keeps_values_valid(&self, values: &[FieldValue], target: &FieldPath) -> bool {
        let Some(&index) = self.by_path.get(target) else { return false };
        values
            .iter()
            .all(|v| check_value(self.fields[index].spec, v, false, self.value_sets[index].as_ref()).is_empty())
    }

    pub fn evaluate_record(&self, r: &MetadataRecord) -> RecordEvaluation {
        let alignment = self.align_fields(r);
        let mut issues = Vec::new();
        let (mut required_total, mut required_filled, mut filled_total) = (0, 0, 0);
        let mut invalid_paths = HashSet::new();

        for (index, field) in self.fields.iter().enumerate() {
            let demanded = self.demanded(field, r);
            let values = r.entries.get(&field.path);
            let filled = values.is_some_and(|vals| vals.iter().any(|v| !v.is_empty()));
            required_total += usize::from(demanded);
            required_filled += usize::from(demanded && filled);
            filled_total += usize::from(filled);

            let Some(values) = values else {
                if demanded {
                    let fragment =
                        IssueFragment { kind: IssueKind::MissingRequiredField, observed: String::new(), suggestions: Vec::new() };
                    issues.push(Issue::new(&r.record_ref, field.path.clone(), fragment));
                }
                continue;
            };
            let empty = [FieldValue::Empty];
            let values: &[FieldValue] = if values.is_empty() { &empty } else { values };
            for value in values {
                for fragment in check_value(field.spec, value, demanded && !filled, self.value_sets[index].as_ref()) {
                    if fragment.kind.is_invalid_value() {
                        invalid_paths.insert(&field.path);
                    }
                    issues.push(Issue::new(&r.record_ref, field.path.clone(), fragment));
                }
            }
        }

        for path in &alignment.unknown {
            let fragment = match alignment.renames.iter().find(|p| &p.from == path) {
                Some(rename) => IssueFragment {
                    kind: IssueKind::PossibleFieldMisspelling,
                    observed: path.to_string(),
                    suggestions: self
                        .rename_keeps_values_valid(&r.entries[path], &rename.to)
                        .then(|| SuggestedValue {
                            value: SuggestionValue::Rename(rename.to.clone()),
                            score: rename.score,
                            provenance: Provenance::FieldRename,
                        })
                        .into_iter()
                        .collect(),
                },
                None => IssueFragment {
                    kind: IssueKind::UnknownField,
                    observed: r.entries[path].iter().map(FieldValue::display).collect::<Vec<_>>().join("; "),
                    suggestions: Vec::new(),
                },
            };
            issues.push(Issue::new(&r.record_ref, path.clone(), fragment));
        }

        let mut seen = HashSet::new();
        issues.retain(|i| seen.insert(i.issue_id));

        let filled_invalid = invalid_paths.len();
        let status = if required_filled == required_total && filled_invalid == 0 { Status::Pass } else { Status::Fail };
        RecordEvaluation {
            record_ref: r.record_ref.clone(),
            issues,
            required_total,
            required_filled,
            filled_total,
            filled_invalid,
            status,
            fetch_error: None,
        }
    }

    /// Evaluates records on `jobs` worker threads (0 = available
    /// parallelism). Output order always matches input order.
    pub fn evaluate_batch(&self, records: &[MetadataRecord], jobs: usize) -> EvaluationReport {
        let evaluations = run_parallel(jobs, || records.par_iter().map(|r| self.evaluate_record(r)).collect());
        EvaluationReport::new(&self.template.id, evaluations)
    }

    /// Like [`Evaluator::evaluate_batch`], with fetch failures carried
    /// through as failed rows.
    pub fn evaluate_fetched(&self, items: &[Result<MetadataRecord, FetchFailure>], jobs: usize) -> EvaluationReport {
        let evaluations = run_parallel(jobs, || {
            items
                .par_iter()
                .map(|item| match item {
                    Ok(r) => self.evaluate_record(r),
                    Err(failure) => RecordEvaluation::fetch_failed(failure),
                })
                .collect()
        });
        EvaluationReport::new(&self.template.id, evaluations)
    }
}

fn run_parallel<T: Send>(jobs: usize, work: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}

pub fn evaluate_record(r: &MetadataRecord, t: &Template, terms: &dyn Terminology) -> Result<RecordEvaluation, Vec<TermError>> {
    Ok(Evaluator::new(t, terms)?.evaluate_record(r))
}

pub fn evaluate_batch(
    records: &[MetadataRecord],
    t: &Template,
    terms: &dyn Terminology,
) -> Result<EvaluationReport, Vec<TermError>> {
    Ok(Evaluator::new(t, terms)?.evaluate_batch(records, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::parse_record;
    use crate::template::parse_template;
    use crate::terms::{load_vocabulary, TermIndex};

    fn template() -> Template {
        parse_template(
            r#"{"id": "urn:t", "children": [
                {"kind": "field", "name": "sample_ID", "valueType": "text", "required": true},
                {"kind": "field", "name": "time", "valueType": "decimal", "required": true},
                {"kind": "field", "name": "count", "valueType": "integer"},
                {"kind": "field", "name": "when", "valueType": "date"},
                {"kind": "field", "name": "medium", "valueType": "controlled", "required": true, "multivalued": true,
                 "valueSets": [{"source": "v", "selector": {"type": "all"}}]},
                {"kind": "element", "name": "contact", "children": [
                    {"kind": "field", "name": "email", "valueType": "text", "required": true}]}
            ]}"#,
        )
        .unwrap()
    }

    fn index() -> TermIndex {
        let (v, _) = load_vocabulary("v", "iri\tlabel\tsynonyms\tparents\nv:m\tMethanol\t\t\nv:r\tRNALater\t\t\n").unwrap();
        TermIndex::new([v]).unwrap()
    }

    fn kinds(e: &RecordEvaluation) -> Vec<(String, IssueKind)> {
        e.issues.iter().map(|i| (i.path.to_string(), i.kind)).collect()
    }

    #[test]
    fn percent_rounding_matches_summary_values() {
        for (n, d, pct) in [(9, 11, 82), (15, 18, 83), (13, 18, 72), (16, 18, 89), (10, 11, 91), (2, 11, 18), (1, 2, 50), (1, 8, 13), (0, 0, 100), (11, 11, 100)] {
            assert_eq!(percent(n, d), pct, "{n}/{d}");
        }
    }

    #[test]
    fn issue_id_is_fnv1a() {
        // FNV-1a 64 of the empty string is the offset basis; of "a" a known constant.
        let p: FieldPath = "x".parse().unwrap();
        let id = IssueId::compute("r", &p, IssueKind::UnknownField, "v");
        assert_eq!(id.to_string().len(), 16);
        assert_eq!(id.to_string().parse::<IssueId>().unwrap(), id);
        let fnv = |s: &str| s.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3));
        assert_eq!(fnv("a"), 0xaf63dc4c8601ec8c);
        assert_eq!(id.0, fnv("r|x|UNKNOWN_FIELD|v"));
    }

    #[test]
    fn number_coercion() {
        let t = template();
        let spec = t.flatten_fields()[1].spec.clone();
        let frags = check_value(&spec, &FieldValue::literal("208 days", None), true, None);
        assert_eq!(frags.len(), 1);
        assert_eq!(frags[0].kind, IssueKind::ExpectingInputNumber);
        assert_eq!(
            frags[0].suggestions[0].value,
            SuggestionValue::Value(FieldValue::Literal { raw: "208".into(), datatype: Some("xsd:float".into()) })
        );
        assert!(check_value(&spec, &FieldValue::literal("208", Some("xsd:float".into())), true, None).is_empty());
        let frags = check_value(&spec, &FieldValue::literal("20.8.1", None), true, None);
        assert!(frags[0].suggestions.is_empty());
    }

    #[test]
    fn record_with_every_kind_of_issue() {
        let t = template();
        let idx = index();
        let ev = Evaluator::new(&t, &idx).unwrap();
        let r = parse_record(
            "r1",
            r#"{"sampl_ID": "S1", "time": "", "count": "3.5", "when": "May 5", "medium": ["methanol", "Methnol"], "color": "red"}"#,
        )
        .unwrap();
        let e = ev.evaluate_record(&r);
        assert_eq!(
            kinds(&e),
            [
                ("sample_ID".into(), IssueKind::MissingRequiredField),
                ("time".into(), IssueKind::MissingRequiredValue),
                ("count".into(), IssueKind::ExpectingInputNumber),
                ("when".into(), IssueKind::ExpectingInputDate),
                ("medium".into(), IssueKind::ValueNotOntologyTerm),
                ("sampl_ID".into(), IssueKind::PossibleFieldMisspelling),
                ("color".into(), IssueKind::UnknownField),
            ]
        );
        assert_eq!((e.required_total, e.required_filled), (3, 1));
        assert_eq!((e.filled_total, e.filled_invalid), (3, 3));
        assert_eq!(e.status, Status::Fail);
        let rename = &e.issues[5].suggestions[0];
        assert_eq!(rename.value, SuggestionValue::Rename("sample_ID".parse().unwrap()));
        assert!((rename.score - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn optional_element_demands_children_once_present() {
        let t = template();
        let idx = index();
        let ev = Evaluator::new(&t, &idx).unwrap();
        let base = r#""sample_ID": "S", "time": "1", "medium": {"@id": "v:m"}"#;
        let absent = parse_record("a", &format!("{{{base}}}")).unwrap();
        assert_eq!(ev.evaluate_record(&absent).status, Status::Pass);
        let present = parse_record("b", &format!(r#"{{{base}, "contact": {{}}}}"#)).unwrap();
        let e = ev.evaluate_record(&present);
        assert_eq!(kinds(&e), [("contact.email".into(), IssueKind::MissingRequiredField)]);
        assert_eq!(e.required_total, 4);
    }

    #[test]
    fn multivalued_empty_entries_only_count_once() {
        let t = template();
        let idx = index();
        let ev = Evaluator::new(&t, &idx).unwrap();
        let r = parse_record("r", r#"{"sample_ID": "S", "time": "1", "medium": ["", "Methanol", ""]}"#).unwrap();
        let e = ev.evaluate_record(&r);
        assert!(e.issues.is_empty(), "{:?}", e.issues);
        let r = parse_record("r", r#"{"sample_ID": "S", "time": "1", "medium": ["", null]}"#).unwrap();
        let e = ev.evaluate_record(&r);
        assert_eq!(kinds(&e), [("medium".into(), IssueKind::MissingRequiredValue)]);
    }

    #[test]
    fn empty_record_against_optional_template() {
        let t = parse_template(r#"{"id": "t", "children": [{"kind": "field", "name": "a", "valueType": "text"}]}"#).unwrap();
        let ev = Evaluator::new(&t, &TermIndex::default()).unwrap();
        let e = ev.evaluate_record(&MetadataRecord::new("r"));
        assert!(e.issues.is_empty());
        assert_eq!(e.status, Status::Pass);
        assert_eq!(compute_metrics(&e), (100, 100));
    }

    #[test]
    fn unresolvable_value_sets_fail_preparation() {
        let t = template();
        let errors = Evaluator::new(&t, &TermIndex::default()).unwrap_err();
        assert_eq!(errors, [TermError::UnknownVocabulary("v".into())]);
    }

    #[test]
    fn empty_batch() {
        let t = template();
        let idx = index();
        let rep = Evaluator::new(&t, &idx).unwrap().evaluate_batch(&[], 2);
        assert_eq!(rep.summary.record_count, 0);
        assert!(rep.records.is_empty());
    }
}
