#![allow(dead_code)]

pub mod gen;

use std::path::PathBuf;

use fairlint_core::record::{resolve_manifest, FileFetcher, RecordManifest};
use fairlint_core::{load_vocabulary, parse_record, parse_template, MetadataRecord, TermIndex, Template};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn template() -> Template {
    parse_template(&read("sample_section.json")).expect("fixture template parses")
}

pub fn index() -> TermIndex {
    let vocabs = ["hubmap-samples", "units"].map(|id| {
        let (v, diags) = load_vocabulary(id, &read(&format!("{id}.tsv"))).expect("fixture vocabulary loads");
        assert!(diags.is_empty(), "{diags:?}");
        v
    });
    TermIndex::new(vocabs).expect("distinct vocabularies")
}

pub fn record(rel: &str) -> MetadataRecord {
    let stem = rel.rsplit('/').next().unwrap().trim_end_matches(".json");
    parse_record(stem, &read(rel)).expect("fixture record parses")
}

pub fn single_record() -> MetadataRecord {
    record("single/Visium_90LC_I4_S2.json")
}

pub fn batch_records() -> Vec<MetadataRecord> {
    let manifest = RecordManifest::load(&fixtures().join("batch/manifest.tsv")).expect("manifest loads");
    resolve_manifest(&manifest, &FileFetcher::new())
        .into_iter()
        .map(|r| r.expect("fixture record resolves"))
        .collect()
}

pub fn rename_record() -> MetadataRecord {
    record("rename/Visium_90LC_A4_S3.json")
}

/// Every fixture record, for whole-corpus properties.
pub fn all_records() -> Vec<MetadataRecord> {
    let mut all = vec![single_record(), rename_record()];
    all.extend(batch_records());
    all
}
