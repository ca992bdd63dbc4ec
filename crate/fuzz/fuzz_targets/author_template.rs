#![no_main]

use fairlint_core::authoring::{author_template, AuthorOptions};
use fairlint_core::template::{emit_template, has_errors, parse_template, validate_template};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(t) = author_template(data, &AuthorOptions::default()) {
        let known: Vec<String> = t.vocabulary_refs().into_iter().collect();
        assert!(!has_errors(&validate_template(&t, &known)));
        assert_eq!(parse_template(&emit_template(&t)).expect("authored template re-parses"), t);
    }
});
