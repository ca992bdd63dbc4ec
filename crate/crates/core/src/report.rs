//! Rendering evaluation reports: the canonical JSON form (which parses
//! back to an equal [`EvaluationReport`]), a fixed-width text table, and a
//! static HTML page.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::evaluate::{
    compute_metrics, EvaluationReport, FieldCount, Issue, IssueId, IssueKind, Provenance, RecordEvaluation, Status,
    SuggestedValue, SuggestionValue, Summary,
};
use crate::record::FieldValue;
use crate::template::FieldPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
    Html,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("UNSUPPORTED_FORMAT: `{0}` (expected json, text or html)")]
    UnsupportedFormat(String),
    #[error("MALFORMED_DOCUMENT: {0}")]
    Malformed(String),
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" | "report_json" => Ok(ReportFormat::Json),
            "text" | "txt" => Ok(ReportFormat::Text),
            "html" => Ok(ReportFormat::Html),
            _ => Err(ReportError::UnsupportedFormat(s.to_owned())),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportDoc {
    pub template: String,
    pub records: Vec<RecordDoc>,
    pub summary: SummaryDoc,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RecordDoc {
    #[serde(rename = "ref")]
    pub record_ref: String,
    pub status: String,
    pub required_total: usize,
    pub required_filled: usize,
    pub filled_total: usize,
    pub filled_invalid: usize,
    pub completeness_pct: u32,
    pub adherence_pct: u32,
    pub issues: Vec<IssueDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fetch_error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IssueDoc {
    pub id: String,
    pub path: String,
    pub kind: String,
    pub observed: String,
    pub suggestions: Vec<SuggestionDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SuggestionDoc {
    pub value: Value,
    pub score: f64,
    pub provenance: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryDoc {
    pub record_count: usize,
    pub pass_count: usize,
    pub field_noncompliance: Vec<FieldCountDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FieldCountDoc {
    pub path: String,
    pub count: usize,
}

pub fn suggestion_to_doc(s: &SuggestedValue) -> SuggestionDoc {
    let value = match &s.value {
        SuggestionValue::Value(v) => v.to_json(None),
        SuggestionValue::Rename(path) => Value::String(path.to_string()),
    };
    SuggestionDoc { value, score: s.score, provenance: s.provenance.as_str().to_owned() }
}

pub fn issue_to_doc(issue: &Issue) -> IssueDoc {
    IssueDoc {
        id: issue.issue_id.to_string(),
        path: issue.path.to_string(),
        kind: issue.kind.code().to_owned(),
        observed: issue.observed.clone(),
        suggestions: issue.suggestions.iter().map(suggestion_to_doc).collect(),
    }
}

pub fn record_to_doc(r: &RecordEvaluation) -> RecordDoc {
    let (completeness_pct, adherence_pct) = compute_metrics(r);
    RecordDoc {
        record_ref: r.record_ref.clone(),
        status: match r.status {
            Status::Pass => "pass".into(),
            Status::Fail => "fail".into(),
        },
        required_total: r.required_total,
        required_filled: r.required_filled,
        filled_total: r.filled_total,
        filled_invalid: r.filled_invalid,
        completeness_pct,
        adherence_pct,
        issues: r.issues.iter().map(issue_to_doc).collect(),
        fetch_error: r.fetch_error.clone(),
    }
}

pub fn summary_to_doc(s: &Summary) -> SummaryDoc {
    SummaryDoc {
        record_count: s.record_count,
        pass_count: s.pass_count,
        field_noncompliance: s
            .field_noncompliance
            .iter()
            .map(|c| FieldCountDoc { path: c.path.to_string(), count: c.count })
            .collect(),
    }
}

pub fn report_to_doc(rep: &EvaluationReport) -> ReportDoc {
    ReportDoc {
        template: rep.template_ref.clone(),
        records: rep.records.iter().map(record_to_doc).collect(),
        summary: summary_to_doc(&rep.summary),
    }
}

fn bad(message: impl Into<String>) -> ReportError {
    ReportError::Malformed(message.into())
}

fn parse_path(s: &str) -> Result<FieldPath, ReportError> {
    s.parse().map_err(|e| bad(format!("path {s:?}: {e}")))
}

fn issue_from_doc(record_ref: &str, doc: &IssueDoc) -> Result<Issue, ReportError> {
    let path = parse_path(&doc.path)?;
    let kind = IssueKind::from_code(&doc.kind).ok_or_else(|| bad(format!("unknown issue kind `{}`", doc.kind)))?;
    let issue_id = doc.id.parse::<IssueId>().map_err(|_| bad(format!("bad issue id `{}`", doc.id)))?;
    if issue_id != IssueId::compute(record_ref, &path, kind, &doc.observed) {
        return Err(bad(format!("issue id `{}` does not match its content", doc.id)));
    }
    let suggestions = doc
        .suggestions
        .iter()
        .map(|s| {
            let provenance =
                Provenance::from_name(&s.provenance).ok_or_else(|| bad(format!("unknown provenance `{}`", s.provenance)))?;
            let value = match provenance {
                Provenance::FieldRename => {
                    SuggestionValue::Rename(parse_path(s.value.as_str().ok_or_else(|| bad("rename target must be a string"))?)?)
                }
                _ => SuggestionValue::Value(FieldValue::from_json(&s.value).map_err(|e| bad(e.to_string()))?),
            };
            if !(0.0..=1.0).contains(&s.score) {
                return Err(bad("suggestion score outside [0, 1]"));
            }
            Ok(SuggestedValue { value, score: s.score, provenance })
        })
        .collect::<Result<_, _>>()?;
    Ok(Issue { issue_id, record_ref: record_ref.to_owned(), path, kind, observed: doc.observed.clone(), suggestions })
}

fn record_from_doc(doc: &RecordDoc) -> Result<RecordEvaluation, ReportError> {
    let status = match doc.status.as_str() {
        "pass" => Status::Pass,
        "fail" => Status::Fail,
        other => return Err(bad(format!("unknown status `{other}`"))),
    };
    if doc.required_filled > doc.required_total || doc.filled_invalid > doc.filled_total {
        return Err(bad(format!("record `{}` has inconsistent counts", doc.record_ref)));
    }
    let evaluation = RecordEvaluation {
        record_ref: doc.record_ref.clone(),
        issues: doc.issues.iter().map(|i| issue_from_doc(&doc.record_ref, i)).collect::<Result<_, _>>()?,
        required_total: doc.required_total,
        required_filled: doc.required_filled,
        filled_total: doc.filled_total,
        filled_invalid: doc.filled_invalid,
        status,
        fetch_error: doc.fetch_error.clone(),
    };
    if compute_metrics(&evaluation) != (doc.completeness_pct, doc.adherence_pct) {
        return Err(bad(format!("record `{}` percentages do not match its counts", doc.record_ref)));
    }
    let passes = evaluation.fetch_error.is_none()
        && evaluation.required_filled == evaluation.required_total
        && evaluation.filled_invalid == 0;
    if passes != (status == Status::Pass) {
        return Err(bad(format!("record `{}` status does not match its counts", doc.record_ref)));
    }
    Ok(evaluation)
}

pub fn report_from_doc(doc: &ReportDoc) -> Result<EvaluationReport, ReportError> {
    let records = doc.records.iter().map(record_from_doc).collect::<Result<Vec<_>, _>>()?;
    let summary = Summary {
        record_count: doc.summary.record_count,
        pass_count: doc.summary.pass_count,
        field_noncompliance: doc
            .summary
            .field_noncompliance
            .iter()
            .map(|c| Ok(FieldCount { path: parse_path(&c.path)?, count: c.count }))
            .collect::<Result<_, ReportError>>()?,
    };
    if summary != Summary::from_records(&records) {
        return Err(bad("summary does not match the records"));
    }
    Ok(EvaluationReport { template_ref: doc.template.clone(), records, summary })
}

pub fn report_to_json(rep: &EvaluationReport) -> String {
    let mut out = serde_json::to_string_pretty(&report_to_doc(rep)).expect("report serializes");
    out.push('\n');
    out
}

pub fn parse_report(doc: &str) -> Result<EvaluationReport, ReportError> {
    let parsed: ReportDoc = serde_json::from_str(doc).map_err(|e| bad(e.to_string()))?;
    report_from_doc(&parsed)
}

pub fn render_report(rep: &EvaluationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => report_to_json(rep),
        ReportFormat::Text => render_text(rep),
        ReportFormat::Html => render_html(rep),
    }
}

/// Renders by format name; unknown names are [`ReportError::UnsupportedFormat`].
pub fn render_report_as(rep: &EvaluationReport, format: &str) -> Result<String, ReportError> {
    Ok(render_report(rep, format.parse()?))
}

fn status_word(r: &RecordEvaluation) -> &'static str {
    match r.status {
        Status::Pass => "pass",
        Status::Fail => "fail",
    }
}

fn completeness_cell(r: &RecordEvaluation) -> String {
    if let Some(cause) = &r.fetch_error {
        return format!("fetch failed: {cause}");
    }
    let (pct, _) = compute_metrics(r);
    format!(
        "{} ({pct}%) {} out of {} required metadata fields are filled.",
        r.required_filled, r.required_filled, r.required_total
    )
}

fn adherence_cell(r: &RecordEvaluation) -> String {
    if r.fetch_error.is_some() {
        return String::new();
    }
    let (_, pct) = compute_metrics(r);
    format!(
        "{} ({pct}%) {} out of {} filled metadata fields are invalid.",
        r.filled_total - r.filled_invalid,
        r.filled_invalid,
        r.filled_total
    )
}

fn describe_suggestion(s: &SuggestedValue) -> String {
    match &s.value {
        SuggestionValue::Value(v) => format!("\"{}\"", v.display()),
        SuggestionValue::Rename(path) => format!("rename to `{path}`"),
    }
}

fn render_text(rep: &EvaluationReport) -> String {
    let header = ["METADATA REFERENCE", "STATUS", "COMPLETENESS", "ADHERENCE"];
    let rows: Vec<[String; 4]> = rep
        .records
        .iter()
        .map(|r| [r.record_ref.clone(), status_word(r).to_owned(), completeness_cell(r), adherence_cell(r)])
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: [&str; 4]| {
        let mut s = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i == 3 {
                s.push_str(cell);
            } else {
                let pad = widths[i] - cell.chars().count();
                s.push_str(cell);
                s.push_str(&" ".repeat(pad + 2));
            }
        }
        s.trim_end().to_owned()
    };

    let mut out = String::new();
    let _ = writeln!(out, "Metadata Evaluation Summary");
    let _ = writeln!(out, "Template: {}", rep.template_ref);
    let _ = writeln!(out, "Evaluating {} metadata records ({} pass)", rep.summary.record_count, rep.summary.pass_count);
    let _ = writeln!(out);
    let _ = writeln!(out, "{}", line(header));
    for row in &rows {
        let _ = writeln!(out, "{}", line([&row[0], &row[1], &row[2], &row[3]]));
    }

    if !rep.summary.field_noncompliance.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "Most often noncompliant fields");
        let width = rep.summary.field_noncompliance.iter().map(|c| c.path.to_string().len()).max().unwrap_or(0);
        for c in &rep.summary.field_noncompliance {
            let _ = writeln!(out, "  {:<width$}  {}", c.path.to_string(), c.count);
        }
    }

    for r in rep.records.iter().filter(|r| !r.issues.is_empty()) {
        let _ = writeln!(out);
        let _ = writeln!(out, "{}: found {} issues", r.record_ref, r.issues.len());
        for issue in &r.issues {
            let _ = write!(out, "  {}  {}  \"{}\"", issue.path, issue.kind, issue.observed);
            if let Some(top) = issue.suggestions.first() {
                let _ = write!(out, "  -> {}", describe_suggestion(top));
                if issue.suggestions.len() > 1 {
                    let _ = write!(out, " (+{} more)", issue.suggestions.len() - 1);
                }
            }
            out.push('\n');
        }
    }
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn render_html(rep: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Metadata Evaluation Summary</title>\n\
<style>body{{font-family:sans-serif;margin:2em}}table{{border-collapse:collapse}}td,th{{border:1px solid #ccc;padding:4px 8px;text-align:left}}\
.pass{{color:#1a7f37}}.fail{{color:#cf222e}}</style>\n</head>\n<body>\n<h1>Metadata Evaluation Summary</h1>\n\
<p>Template: {}</p>\n<p>Evaluating {} metadata records</p>\n",
        escape(&rep.template_ref),
        rep.summary.record_count
    );
    out.push_str("<table>\n<thead><tr><th>Metadata reference</th><th>Status</th><th>Completeness</th><th>Adherence</th></tr></thead>\n<tbody>\n");
    for r in &rep.records {
        let glyph = if r.status == Status::Pass { "&#10003;" } else { "&#10007;" };
        let _ = writeln!(
            out,
            "<tr><td>{}</td><td class=\"{}\">{glyph}</td><td>{}</td><td>{}</td></tr>",
            escape(&r.record_ref),
            status_word(r),
            escape(&completeness_cell(r)),
            escape(&adherence_cell(r))
        );
    }
    out.push_str("</tbody>\n</table>\n");
    if !rep.summary.field_noncompliance.is_empty() {
        out.push_str("<h2>Most often noncompliant fields</h2>\n<table>\n<thead><tr><th>Field</th><th>Records</th></tr></thead>\n<tbody>\n");
        for c in &rep.summary.field_noncompliance {
            let _ = writeln!(out, "<tr><td>{}</td><td>{}</td></tr>", escape(&c.path.to_string()), c.count);
        }
        out.push_str("</tbody>\n</table>\n");
    }
    for r in rep.records.iter().filter(|r| !r.issues.is_empty()) {
        let _ = writeln!(out, "<h2>{}: found {} issues</h2>", escape(&r.record_ref), r.issues.len());
        out.push_str("<table>\n<thead><tr><th>Field name</th><th>Field value</th><th>Issue</th><th>Suggested repair</th></tr></thead>\n<tbody>\n");
        for issue in &r.issues {
            let suggestions: Vec<String> = issue.suggestions.iter().map(|s| escape(&describe_suggestion(s))).collect();
            let _ = writeln!(
                out,
                "<tr><td>{}</td><td>\"{}\"</td><td>{}</td><td>{}</td></tr>",
                escape(&issue.path.to_string()),
                escape(&issue.observed),
                issue.kind,
                suggestions.join("<br>")
            );
        }
        out.push_str("</tbody>\n</table>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(record_ref: &str, req: (usize, usize), filled: (usize, usize)) -> RecordEvaluation {
        let pass = req.0 == req.1 && filled.1 == 0;
        RecordEvaluation {
            record_ref: record_ref.into(),
            issues: Vec::new(),
            required_total: req.1,
            required_filled: req.0,
            filled_total: filled.0,
            filled_invalid: filled.1,
            status: if pass { Status::Pass } else { Status::Fail },
            fetch_error: None,
        }
    }

    #[test]
    fn text_table_row_fragments() {
        let rep = EvaluationReport::new("urn:t", vec![row("A4_S1", (11, 11), (18, 0)), row("A4_S2", (9, 11), (18, 0))]);
        let text = render_report(&rep, ReportFormat::Text);
        let a = text.lines().find(|l| l.starts_with("A4_S1")).unwrap();
        assert!(a.contains("11 out of 11 required metadata fields are filled"));
        assert!(a.contains("0 out of 18 filled metadata fields are invalid"));
        let b = text.lines().find(|l| l.starts_with("A4_S2")).unwrap();
        assert!(b.contains("9 (82%) 9 out of 11"));
    }

    #[test]
    fn empty_report_is_header_only() {
        let rep = EvaluationReport::new("urn:t", Vec::new());
        let text = render_report(&rep, ReportFormat::Text);
        let last = text.lines().last().unwrap();
        assert!(last.starts_with("METADATA REFERENCE"));
        assert_eq!(parse_report(&report_to_json(&rep)).unwrap(), rep);
    }

    #[test]
    fn unsupported_format() {
        let rep = EvaluationReport::new("urn:t", Vec::new());
        assert_eq!(render_report_as(&rep, "pdf").unwrap_err(), ReportError::UnsupportedFormat("pdf".into()));
        assert!(render_report_as(&rep, "HTML").unwrap().starts_with("<!DOCTYPE html>"));
    }

    #[test]
    fn rejects_inconsistent_documents() {
        let rep = EvaluationReport::new("urn:t", vec![row("A", (9, 11), (18, 3))]);
        let good = report_to_json(&rep);
        assert_eq!(parse_report(&good).unwrap(), rep);
        for (from, to) in [
            ("\"completeness_pct\": 82", "\"completeness_pct\": 81"),
            ("\"required_filled\": 9", "\"required_filled\": 12"),
            ("\"pass_count\": 0", "\"pass_count\": 1"),
            ("\"status\": \"fail\"", "\"status\": \"meh\""),
        ] {
            assert!(good.contains(from), "{from}");
            assert!(parse_report(&good.replace(from, to)).is_err(), "{to}");
        }
    }
}
