mod common;

use std::collections::HashSet;

use common::gen;
use fairlint_core::authoring::{author_template, AuthorOptions};
use fairlint_core::evaluate::compute_metrics;
use fairlint_core::repair::{ActionStatus, Decision, Policy, RepairSession, Verdict};
use fairlint_core::template::{validate_template, Selector, TemplateNode, ValueSetSpec};
use fairlint_core::terms::ValueSet;
use fairlint_core::{FieldValue, IssueKind, Status, Terminology};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg(128))]

    #[test]
    fn flatten_is_one_entry_per_field_with_propagated_requirement(seed in any::<u64>()) {
        let w = gen::world(seed, 15, 0);
        fn walk(nodes: &[TemplateNode], ancestors_required: bool, out: &mut Vec<bool>) {
            for n in nodes {
                match n {
                    TemplateNode::Field(f) => out.push(f.required && ancestors_required),
                    TemplateNode::Element(e) => walk(&e.children, ancestors_required && e.required, out),
                }
            }
        }
        let mut expected = Vec::new();
        walk(&w.template.children, true, &mut expected);
        let flat = w.template.flatten_fields();
        prop_assert_eq!(flat.iter().map(|f| f.effective_required).collect::<Vec<_>>(), expected);
        let unique: HashSet<_> = flat.iter().map(|f| &f.path).collect();
        prop_assert_eq!(unique.len(), flat.len());
    }

    #[test]
    fn branch_contains_root_and_is_closed_under_children(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let vocab = gen::vocabulary(&mut rng, "v", 40);
        let root = vocab.terms().collect::<Vec<_>>().choose(&mut rng).unwrap().iri.clone();
        let idx = fairlint_core::TermIndex::new([vocab.clone()]).unwrap();
        let spec = ValueSetSpec { source: "v".into(), selector: Selector::Branch { root: root.clone() } };
        let set = idx.resolve_value_set(&[spec]).unwrap();
        let members: HashSet<&str> = set.terms().iter().map(|t| t.iri.as_str()).collect();
        prop_assert!(members.contains(root.as_str()));
        for t in vocab.terms() {
            if t.parents.iter().any(|p| members.contains(p.as_str())) {
                prop_assert!(members.contains(t.iri.as_str()), "{} missing", t.iri);
            }
        }
    }

    #[test]
    fn exact_lookup_iff_perfect_score(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let vocab = gen::vocabulary(&mut rng, "v", 30);
        let set = ValueSet::new(vocab.terms().cloned());
        let query = if rng.random_bool(0.5) {
            let t = set.terms().choose(&mut rng).unwrap();
            let form = std::iter::once(&t.label).chain(&t.synonyms).collect::<Vec<_>>().choose(&mut rng).unwrap().to_string();
            if rng.random_bool(0.5) { form.to_uppercase() } else { format!("  {form} ") }
        } else {
            gen::phrase(&mut rng, 3)
        };
        let exact = set.lookup_exact(&FieldValue::literal(query.clone(), None)).is_some();
        let top = set.closest_match(&query, 1)[0].score;
        prop_assert_eq!(exact, top == 1.0, "query {:?}", query);
    }

    #[test]
    fn metrics_agree_with_issues(seed in any::<u64>()) {
        let w = gen::world(seed, 12, 4);
        let idx = w.index();
        let ev = fairlint_core::Evaluator::new(&w.template, &idx).unwrap();
        let batch = ev.evaluate_batch(&w.records, 3);
        for (r, e) in w.records.iter().zip(&batch.records) {
            prop_assert_eq!(&ev.evaluate_record(r), e, "batch and single evaluation differ");
            let invalid: HashSet<_> = e.issues.iter().filter(|i| i.kind.is_invalid_value()).map(|i| &i.path).collect();
            prop_assert_eq!(invalid.len(), e.filled_invalid);
            let missing = e.issues.iter().filter(|i| i.kind.is_missing()).count();
            prop_assert_eq!(e.required_total - e.required_filled, missing);
            prop_assert!(e.required_filled <= e.required_total && e.filled_invalid <= e.filled_total);
            let (c, a) = compute_metrics(e);
            prop_assert!(c <= 100 && a <= 100);
            let pass = e.status == Status::Pass;
            prop_assert_eq!(pass, e.required_filled == e.required_total && e.filled_invalid == 0);
            if pass {
                prop_assert!(c == 100 && a == 100);
                prop_assert!(e.issues.iter().all(|i| i.kind != IssueKind::MissingRequiredField));
            }
            let ids: HashSet<_> = e.issues.iter().map(|i| i.issue_id).collect();
            prop_assert_eq!(ids.len(), e.issues.len());
        }
        let recount = fairlint_core::Summary::from_records(&batch.records);
        prop_assert_eq!(recount, batch.summary.clone());
    }

    #[test]
    fn records_keep_unknown_keys_and_normalize_idempotently(seed in any::<u64>()) {
        let w = gen::world(seed, 10, 3);
        for r in &w.records {
            let doc = fairlint_core::serialize_record(r, &w.template);
            let back = fairlint_core::parse_record(&r.record_ref, &doc).unwrap();
            let keys: HashSet<_> = back.entries.keys().collect();
            for k in r.entries.keys() {
                prop_assert!(keys.contains(k), "{} dropped", k);
            }
            prop_assert_eq!(&back.normalized(), &back);
            prop_assert_eq!(&back.normalized().normalized(), &back.normalized());
        }
    }

    #[test]
    fn decisions_never_revert(seed in any::<u64>()) {
        let w = gen::world(seed, 10, 3);
        let idx = w.index();
        let ev = fairlint_core::Evaluator::new(&w.template, &idx).unwrap();
        let report = ev.evaluate_batch(&w.records, 1);
        let mut session = RepairSession::new(Policy::Review);
        for r in &report.records {
            session.add_evaluation(r);
        }
        let ids: Vec<String> = report.records.iter().flat_map(|r| r.issues.iter().map(|i| i.issue_id.to_string())).collect();
        if ids.is_empty() {
            return Ok(());
        }
        let mut rng = gen::rng(seed ^ 0xdec1);
        let mut decided = std::collections::HashMap::new();
        for _ in 0..20 {
            let id = ids.choose(&mut rng).unwrap().clone();
            let action = if rng.random_bool(0.5) { Verdict::Accept } else { Verdict::Reject };
            let _ = session.decide(&[Decision { issue_id: id, action, value: None }], "p", &ev);
            for a in session.actions() {
                if let Some(prev) = decided.get(&a.issue_id) {
                    prop_assert_eq!(&a.status, prev, "decision changed");
                } else if a.status != ActionStatus::Pending {
                    decided.insert(a.issue_id, a.status);
                }
            }
        }
    }

    #[test]
    fn authored_templates_validate(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let mut lines = Vec::new();
        let mut labels = HashSet::new();
        for _ in 0..rng.random_range(0..8) {
            let label = gen::phrase(&mut rng, 3);
            let machine = fairlint_core::authoring::derive_machine_name(&label);
            if machine.is_empty() || !labels.insert(machine) {
                continue;
            }
            let kind = *["text", "integer", "decimal", "date", "controlled"].choose(&mut rng).unwrap();
            let mut line = format!("{label} : {kind}");
            if rng.random_bool(0.5) { line.push_str(" required"); }
            if rng.random_bool(0.2) { line.push_str(" multivalued"); }
            if kind == "controlled" { line.push_str(" vocab=v"); }
            lines.push(line);
        }
        let t = author_template(&lines.join("\n"), &AuthorOptions::default()).unwrap();
        prop_assert!(validate_template(&t, &["v"]).is_empty());
        let again = fairlint_core::parse_template(&fairlint_core::emit_template(&t)).unwrap();
        prop_assert_eq!(again, t);
    }
}
