//! Replays the checked-in fuzz corpus through the same entry points and
//! invariants as the fuzz targets, so the seeds stay meaningful on stable.

mod common;

use std::fs;
use std::path::PathBuf;

use fairlint_core::authoring::{author_template, AuthorOptions};
use fairlint_core::lexical::{coerce_leading_number, is_decimal, is_integer, is_iso_date};
use fairlint_core::report::{parse_report, render_report, report_to_json, ReportFormat};
use fairlint_core::template::has_errors;
use fairlint_core::terms::{emit_vocabulary, load_vocabulary, ValueSet};
use fairlint_core::*;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = common::fixtures().join("../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn template_seeds() {
    for (p, data) in seeds("parse_template") {
        let t = parse_template(&data).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let emitted = emit_template(&t);
        assert_eq!(parse_template(&emitted).unwrap(), t);
    }
}

#[test]
fn authoring_seeds() {
    for (p, data) in seeds("author_template") {
        let t = author_template(&data, &AuthorOptions::default()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let known: Vec<String> = t.vocabulary_refs().into_iter().collect();
        assert!(!has_errors(&validate_template(&t, &known)));
        assert_eq!(parse_template(&emit_template(&t)).unwrap(), t);
    }
}

#[test]
fn record_seeds() {
    let empty = Template { id: "urn:fuzz".into(), name: String::new(), description: String::new(), children: Vec::new() };
    for (p, data) in seeds("parse_record") {
        let r = parse_record("fuzz", &data).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(r.normalized(), r);
        assert_eq!(parse_record("fuzz", &serialize_record(&r, &empty)).unwrap(), r);
    }
}

#[test]
fn vocabulary_seeds() {
    for (p, data) in seeds("load_vocabulary") {
        let (v, diags) = load_vocabulary("fuzz", &data).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(load_vocabulary("fuzz", &emit_vocabulary(&v)).unwrap().0, v);
        let set = ValueSet::new(v.terms().cloned());
        for t in v.terms() {
            assert_eq!(set.closest_match(&t.label, 1)[0].score, 1.0);
        }
    }
}

#[test]
fn manifest_seeds() {
    for (p, data) in seeds("parse_manifest") {
        let m = RecordManifest::parse(&data).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(RecordManifest::parse(&m.emit()).unwrap(), m);
    }
}

#[test]
fn report_seeds() {
    for (p, data) in seeds("parse_report") {
        let rep = parse_report(&data).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(parse_report(&report_to_json(&rep)).unwrap(), rep);
        let _ = render_report(&rep, ReportFormat::Text);
        let _ = render_report(&rep, ReportFormat::Html);
    }
}

#[test]
fn decision_seeds() {
    for (p, data) in seeds("parse_decisions") {
        let ds = parse_decisions(&data).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let json = serde_json::to_string(&ds).unwrap();
        assert_eq!(parse_decisions(&json).unwrap(), ds);
        for d in &ds {
            assert!(d.issue_id.parse::<IssueId>().is_ok());
        }
    }
}

#[test]
fn scalar_seeds() {
    let mut hits = 0;
    for (_, data) in seeds("parse_scalars") {
        if let Ok(p) = data.parse::<FieldPath>() {
            assert_eq!(p.to_string(), data);
            hits += 1;
        }
        if let Ok(id) = data.parse::<IssueId>() {
            assert_eq!(id.to_string().parse::<IssueId>().unwrap(), id);
        }
        for decimal in [false, true] {
            if let Some(token) = coerce_leading_number(&data, decimal) {
                assert!(if decimal { is_decimal(token) } else { is_integer(token) });
            }
        }
        let _ = is_iso_date(&data);
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(&data) {
            if let Ok(value) = FieldValue::from_json(&v) {
                assert_eq!(FieldValue::from_json(&value.to_json(None)).unwrap(), value);
                hits += 1;
            }
        }
    }
    assert!(hits >= 3);
}
