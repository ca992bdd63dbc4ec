//! Template-driven metadata evaluation and repair.
//!
//! A [`Template`] describes the fields a metadata record should carry.
//! Records are checked against it with terms drawn from controlled
//! vocabularies, producing an [`EvaluationReport`]; repairs derived from
//! the report's suggestions can be reviewed and applied to produce
//! cleaned records.

pub mod authoring;
pub mod evaluate;
pub mod lexical;
pub mod record;
pub mod repair;
pub mod report;
pub mod template;
pub mod terms;
pub mod text;

pub use authoring::{author_template, AuthorError, AuthorOptions};
pub use evaluate::{
    evaluate_batch, evaluate_record, EvaluationReport, Evaluator, Issue, IssueId, IssueKind, Provenance,
    RecordEvaluation, Status, SuggestedValue, SuggestionValue, Summary,
};
pub use record::{
    parse_record, resolve_manifest, serialize_record, FetchFailure, FieldValue, FileFetcher, MetadataRecord,
    RecordError, RecordFetcher, RecordManifest,
};
pub use repair::{
    apply_repairs, parse_decisions, persist_output, propose_repairs, Decision, DecisionError, Policy, RepairAction,
    RepairError, RepairSession, RepairedRecordSet, Replacement, Verdict,
};
pub use report::{parse_report, render_report, report_to_json, ReportFormat};
pub use template::{
    emit_template, parse_template, validate_template, FieldPath, FieldSpec, Template, TemplateDiagnostic,
    TemplateError, ValueKind,
};
pub use terms::{closest_match, load_vocabulary, lookup_exact, TermError, TermIndex, TermRecord, Terminology, ValueSet, Vocabulary};
