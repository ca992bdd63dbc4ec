//! Repair proposals, review decisions, and cleaned-record output.
//!
//! Every issue with a qualifying suggestion yields a pending
//! [`RepairAction`]. A [`RepairSession`] collects reviewer decisions;
//! under [`Policy::Auto`] every non-rejected action applies, under
//! [`Policy::Review`] only accepted ones do.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::evaluate::{
    check_value, EvaluationReport, Evaluator, Issue, IssueId, IssueKind, Provenance, RecordEvaluation, SuggestionValue,
};
use crate::lexical;
use crate::record::{serialize_record, FieldValue, MetadataRecord, RecordManifest};
use crate::template::{FieldPath, Template, ValueKind};

/// Minimum score for a term match to become a repair.
pub const TERM_MATCH_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Auto,
    Review,
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Policy::Auto),
            "review" => Ok(Policy::Review),
            other => Err(format!("unknown policy `{other}` (expected auto or review)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActionStatus {
    Pending,
    Accepted,
    Rejected,
    AutoApplied,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Replacement {
    Value(FieldValue),
    Rename(FieldPath),
}

impl Replacement {
    fn to_json(&self) -> Value {
        match self {
            Replacement::Value(v) => v.to_json(None),
            Replacement::Rename(p) => Value::String(p.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairAction {
    pub issue_id: IssueId,
    pub record_ref: String,
    pub path: FieldPath,
    pub kind: IssueKind,
    pub observed: String,
    /// `None` only for a rejection of an issue that had nothing to propose.
    pub replacement: Option<Replacement>,
    pub status: ActionStatus,
    pub decided_by: String,
}

impl RepairAction {
    fn for_issue(issue: &Issue, replacement: Option<Replacement>, status: ActionStatus, decided_by: &str) -> Self {
        RepairAction {
            issue_id: issue.issue_id,
            record_ref: issue.record_ref.clone(),
            path: issue.path.clone(),
            kind: issue.kind,
            observed: issue.observed.clone(),
            replacement,
            status,
            decided_by: decided_by.to_owned(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "issue_id": self.issue_id.to_string(),
            "record_ref": self.record_ref,
            "path": self.path.to_string(),
            "kind": self.kind.code(),
            "observed": self.observed,
            "replacement": self.replacement.as_ref().map(Replacement::to_json),
            "status": self.status,
            "decided_by": self.decided_by,
        })
    }
}

/// Pending actions for every issue whose top suggestion qualifies:
/// coercions always, term matches scoring at least
/// [`TERM_MATCH_THRESHOLD`], renames (already thresholded at alignment).
pub fn propose_repairs(eval: &RecordEvaluation) -> Vec<RepairAction> {
    eval.issues
        .iter()
        .filter_map(|issue| {
            let top = issue.suggestions.first()?;
            let qualifies = match top.provenance {
                Provenance::Coercion | Provenance::FieldRename => true,
                Provenance::TermMatch => top.score >= TERM_MATCH_THRESHOLD,
            };
            let replacement = match &top.value {
                SuggestionValue::Value(v) => Replacement::Value(v.clone()),
                SuggestionValue::Rename(p) => Replacement::Rename(p.clone()),
            };
            qualifies.then(|| RepairAction::for_issue(issue, Some(replacement), ActionStatus::Pending, "system"))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

/// One reviewer decision, as found in a decisions file or API request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub issue_id: String,
    pub action: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

pub fn parse_decisions(doc: &str) -> Result<Vec<Decision>, serde_json::Error> {
    serde_json::from_str(doc)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecisionError {
    #[error("UNKNOWN_ISSUE: `{0}`")]
    UnknownIssue(String),
    #[error("INVALID_MANUAL_VALUE for `{issue_id}`: {reason}")]
    InvalidManualValue { issue_id: String, reason: String },
    #[error("NO_REPLACEMENT: issue `{0}` has no proposed repair; supply a value")]
    NoReplacement(String),
    #[error("CONFLICTING_DECISION: issue `{0}` was already decided differently")]
    Conflict(String),
}

#[derive(Debug, Clone)]
pub struct RepairSession {
    pub policy: Policy,
    issues: HashMap<IssueId, Issue>,
    actions: BTreeMap<IssueId, RepairAction>,
}

impl RepairSession {
    pub fn new(policy: Policy) -> Self {
        RepairSession { policy, issues: HashMap::new(), actions: BTreeMap::new() }
    }

    pub fn from_report(report: &EvaluationReport, policy: Policy) -> Self {
        let mut session = RepairSession::new(policy);
        for record in &report.records {
            session.add_evaluation(record);
        }
        session
    }

    pub fn add_evaluation(&mut self, eval: &RecordEvaluation) {
        for issue in &eval.issues {
            self.issues.insert(issue.issue_id, issue.clone());
        }
        for action in propose_repairs(eval) {
            self.actions.entry(action.issue_id).or_insert(action);
        }
    }

    pub fn issue(&self, id: IssueId) -> Option<&Issue> {
        self.issues.get(&id)
    }

    pub fn action(&self, id: IssueId) -> Option<&RepairAction> {
        self.actions.get(&id)
    }

    /// All actions ordered by issue id.
    pub fn actions(&self) -> impl Iterator<Item = &RepairAction> {
        self.actions.values()
    }

    pub fn actions_for<'s>(&'s self, record_ref: &'s str) -> impl Iterator<Item = &'s RepairAction> + 's {
        self.actions.values().filter(move |a| a.record_ref == record_ref)
    }

    /// Records decisions atomically: either all apply or, on the first
    /// error, none do. Repeating an identical decision is a no-op; a
    /// decision that contradicts an earlier one is a conflict. Manual values
    /// are validated against the template through `evaluator`.
    pub fn decide(&mut self, decisions: &[Decision], actor: &str, evaluator: &Evaluator<'_>) -> Result<(), DecisionError> {
        let mut staged = self.actions.clone();
        for decision in decisions {
            let id = decision
                .issue_id
                .parse::<IssueId>()
                .ok()
                .filter(|id| self.issues.contains_key(id))
                .ok_or_else(|| DecisionError::UnknownIssue(decision.issue_id.clone()))?;
            let issue = &self.issues[&id];
            let manual = decision
                .value
                .as_deref()
                .filter(|_| decision.action == Verdict::Accept)
                .map(|v| manual_replacement(issue, v, evaluator))
                .transpose()?;
            let conflict = || DecisionError::Conflict(decision.issue_id.clone());

            match (decision.action, staged.get_mut(&id)) {
                (Verdict::Reject, None) => {
                    staged.insert(id, RepairAction::for_issue(issue, None, ActionStatus::Rejected, actor));
                }
                (Verdict::Reject, Some(action)) => match action.status {
                    ActionStatus::Rejected => {}
                    ActionStatus::Pending => {
                        action.status = ActionStatus::Rejected;
                        action.decided_by = actor.to_owned();
                    }
                    _ => return Err(conflict()),
                },
                (Verdict::Accept, None) => {
                    let replacement = manual.ok_or_else(|| DecisionError::NoReplacement(decision.issue_id.clone()))?;
                    staged.insert(id, RepairAction::for_issue(issue, Some(replacement), ActionStatus::Accepted, actor));
                }
                (Verdict::Accept, Some(action)) => match action.status {
                    ActionStatus::Pending => {
                        if let Some(replacement) = manual {
                            action.replacement = Some(replacement);
                        }
                        action.status = ActionStatus::Accepted;
                        action.decided_by = actor.to_owned();
                    }
                    ActionStatus::Accepted => {
                        if manual.is_some_and(|m| action.replacement.as_ref() != Some(&m)) {
                            return Err(conflict());
                        }
                    }
                    _ => return Err(conflict()),
                },
            }
        }
        self.actions = staged;
        Ok(())
    }

    /// Actions that apply to `record_ref` under the session policy, in
    /// application order (path, then issue id).
    pub fn applicable(&self, record_ref: &str) -> Vec<&RepairAction> {
        let mut out: Vec<&RepairAction> = self
            .actions
            .values()
            .filter(|a| a.record_ref == record_ref && a.replacement.is_some())
            .filter(|a| match self.policy {
                Policy::Auto => a.status != ActionStatus::Rejected,
                Policy::Review => a.status == ActionStatus::Accepted,
            })
            .collect();
        out.sort_by(|a, b| a.path.to_string().cmp(&b.path.to_string()).then(a.issue_id.cmp(&b.issue_id)));
        out
    }
}

/// Converts a reviewer-supplied value into a replacement that passes the
/// field's value checks.
fn manual_replacement(issue: &Issue, value: &str, evaluator: &Evaluator<'_>) -> Result<Replacement, DecisionError> {
    let invalid = |reason: String| DecisionError::InvalidManualValue { issue_id: issue.issue_id.to_string(), reason };
    if issue.kind == IssueKind::UnknownField {
        return Err(invalid("unknown fields take no replacement".into()));
    }
    if issue.kind == IssueKind::PossibleFieldMisspelling {
        let target: FieldPath = value.trim().parse().map_err(|e| invalid(format!("{e}")))?;
        if evaluator.field(&target).is_none() {
            return Err(invalid(format!("`{target}` is not a template field")));
        }
        return Ok(Replacement::Rename(target));
    }

    let (spec, value_set) = evaluator
        .field(&issue.path)
        .ok_or_else(|| invalid(format!("`{}` is not a template field", issue.path)))?;
    let trimmed = value.trim();
    let candidate = match spec.value_kind {
        ValueKind::Controlled => {
            let set = value_set.ok_or_else(|| invalid("field has no value set".into()))?;
            let term = set
                .lookup_exact(&FieldValue::literal(trimmed, None))
                .or_else(|| set.get(trimmed))
                .ok_or_else(|| invalid(format!("\"{trimmed}\" is not a term of this field's value set")))?;
            FieldValue::TermRef { iri: term.iri.clone(), label: term.label.clone() }
        }
        ValueKind::Integer | ValueKind::Decimal => {
            let ok = if spec.value_kind == ValueKind::Integer {
                lexical::is_integer(trimmed)
            } else {
                lexical::is_decimal(trimmed)
            };
            if !ok {
                return Err(invalid(format!("\"{trimmed}\" is not a {}", spec.value_kind.as_str())));
            }
            FieldValue::literal(trimmed, spec.value_kind.datatype().map(str::to_owned))
        }
        ValueKind::Date | ValueKind::Text => FieldValue::literal(trimmed, None),
    };
    if candidate.is_empty() {
        return Err(invalid("value is empty".into()));
    }
    let problems = check_value(spec, &candidate, true, value_set);
    if let Some(problem) = problems.first() {
        return Err(invalid(format!("value fails {}", problem.kind)));
    }
    Ok(Replacement::Value(candidate))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepairError {
    #[error("CONFLICTING_ACTIONS at `{path}` in `{record_ref}`: {message}")]
    ConflictingActions { record_ref: String, path: String, message: String },
}

/// An action as it was applied, with the values on either side.
#[derive(Debug, Clone, PartialEq)]
pub struct AppliedAction {
    pub action: RepairAction,
    pub before: Value,
    pub after: Value,
}

impl AppliedAction {
    pub fn to_json(&self) -> Value {
        json!({
            "issue_id": self.action.issue_id.to_string(),
            "path": self.action.path.to_string(),
            "kind": self.action.kind.code(),
            "before": self.before,
            "after": self.after,
            "status": self.action.status,
            "decided_by": self.action.decided_by,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Slot {
    Path(FieldPath),
    Entry(FieldPath, String),
}

fn slot(action: &RepairAction, replacement: &Replacement) -> Slot {
    match replacement {
        Replacement::Rename(to) => Slot::Path(to.clone()),
        Replacement::Value(_) if action.kind == IssueKind::MissingRequiredField => Slot::Path(action.path.clone()),
        Replacement::Value(_) => Slot::Entry(action.path.clone(), action.observed.clone()),
    }
}

/// Applies the session's applicable actions to a copy of `r`.
pub fn apply_repairs(r: &MetadataRecord, session: &RepairSession) -> Result<(MetadataRecord, Vec<AppliedAction>), RepairError> {
    let actions = session.applicable(&r.record_ref);
    let conflict = |path: &FieldPath, message: &str| RepairError::ConflictingActions {
        record_ref: r.record_ref.clone(),
        path: path.to_string(),
        message: message.to_owned(),
    };

    let mut slots: HashMap<Slot, (&FieldPath, &Replacement)> = HashMap::new();
    for action in &actions {
        let replacement = action.replacement.as_ref().expect("applicable actions carry a replacement");
        if let Some(previous) = slots.insert(slot(action, replacement), (&action.path, replacement)) {
            if previous != (&action.path, replacement) {
                return Err(conflict(&action.path, "two actions write the same slot differently"));
            }
        }
    }

    let mut out = r.clone();
    let mut applied = Vec::new();
    let mut done: HashSet<Slot> = HashSet::new();
    for action in actions {
        let replacement = action.replacement.as_ref().expect("applicable actions carry a replacement");
        if !done.insert(slot(action, replacement)) {
            continue;
        }
        let (before, after) = match replacement {
            Replacement::Rename(to) => {
                if out.get(to).is_some_and(|vals| vals.iter().any(|v| !v.is_empty())) {
                    return Err(conflict(to, "rename target already holds a value"));
                }
                let Some(values) = out.entries.shift_remove(&action.path) else { continue };
                out.entries.insert(to.clone(), values);
                (Value::String(action.path.to_string()), Value::String(to.to_string()))
            }
            Replacement::Value(new) => match out.entries.get_mut(&action.path) {
                None => {
                    out.entries.insert(action.path.clone(), vec![new.clone()]);
                    (Value::Null, new.to_json(None))
                }
                Some(values) if values.is_empty() => {
                    values.push(new.clone());
                    (Value::Null, new.to_json(None))
                }
                Some(values) => {
                    let mut before = Value::Null;
                    for value in values.iter_mut().filter(|v| v.display() == action.observed) {
                        if before.is_null() {
                            before = value.to_json(None);
                        }
                        *value = new.clone();
                    }
                    (before, new.to_json(None))
                }
            },
        };
        let mut action = action.clone();
        if action.status == ActionStatus::Pending {
            action.status = ActionStatus::AutoApplied;
        }
        applied.push(AppliedAction { action, before, after });
    }
    Ok((out, applied))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RepairedRecordSet {
    pub records: Vec<MetadataRecord>,
    /// Applied actions, parallel to `records`.
    pub provenance: Vec<Vec<AppliedAction>>,
}

pub fn repair_records(records: &[MetadataRecord], session: &RepairSession) -> Result<RepairedRecordSet, RepairError> {
    let mut set = RepairedRecordSet::default();
    for r in records {
        let (repaired, applied) = apply_repairs(r, session)?;
        set.records.push(repaired);
        set.provenance.push(applied);
    }
    Ok(set)
}

pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersistedRecord {
    pub record_ref: String,
    pub record_file: PathBuf,
    pub sidecar_file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("WRITE_FAILED for `{record_ref}`: {cause}")]
pub struct WriteFailure {
    pub record_ref: String,
    pub cause: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PersistOutcome {
    pub written: Vec<PersistedRecord>,
    pub manifest_file: Option<PathBuf>,
    pub failures: Vec<WriteFailure>,
}

/// File stem for a record reference: characters outside `[A-Za-z0-9._-]`
/// become `_`.
pub fn file_stem(record_ref: &str) -> String {
    let stem: String = record_ref
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect();
    if stem.is_empty() || stem.starts_with('.') {
        format!("r{stem}")
    } else {
        stem
    }
}

pub fn sidecar_json(applied: &[AppliedAction]) -> String {
    let list: Vec<Value> = applied.iter().map(AppliedAction::to_json).collect();
    let mut out = serde_json::to_string_pretty(&list).expect("sidecar serializes");
    out.push('\n');
    out
}

/// Writes each record as `<stem>.json` with a `<stem>.repairs.json`
/// provenance sidecar, then a `manifest.tsv` listing the records written.
/// Outputs depend only on the inputs, so re-running overwrites with
/// identical bytes.
pub fn persist_output(set: &RepairedRecordSet, template: &Template, destination: &Path) -> PersistOutcome {
    let mut outcome = PersistOutcome::default();
    if let Err(e) = std::fs::create_dir_all(destination) {
        outcome.failures = set
            .records
            .iter()
            .map(|r| WriteFailure { record_ref: r.record_ref.clone(), cause: e.to_string() })
            .collect();
        return outcome;
    }

    let mut used = HashSet::new();
    let mut manifest = RecordManifest::default();
    for (index, record) in set.records.iter().enumerate() {
        let base = file_stem(&record.record_ref);
        let mut stem = base.clone();
        let mut n = 2;
        while !used.insert(stem.to_ascii_lowercase()) || stem == "manifest" {
            stem = format!("{base}-{n}");
            n += 1;
        }
        let record_file = destination.join(format!("{stem}.json"));
        let sidecar_file = destination.join(format!("{stem}.repairs.json"));
        let applied = set.provenance.get(index).map(Vec::as_slice).unwrap_or_default();
        let result = std::fs::write(&record_file, serialize_record(record, template))
            .and_then(|()| std::fs::write(&sidecar_file, sidecar_json(applied)));
        match result {
            Ok(()) => {
                manifest.push(record.record_ref.clone(), format!("{stem}.json"));
                outcome.written.push(PersistedRecord { record_ref: record.record_ref.clone(), record_file, sidecar_file });
            }
            Err(e) => outcome.failures.push(WriteFailure { record_ref: record.record_ref.clone(), cause: e.to_string() }),
        }
    }
    let manifest_file = destination.join(MANIFEST_FILE);
    match std::fs::write(&manifest_file, manifest.emit()) {
        Ok(()) => outcome.manifest_file = Some(manifest_file),
        Err(e) => outcome.failures.push(WriteFailure { record_ref: MANIFEST_FILE.into(), cause: e.to_string() }),
    }
    outcome
}
