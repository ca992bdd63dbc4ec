#![no_main]

use fairlint_core::template::{emit_template, parse_template};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(t) = parse_template(data) {
        let emitted = emit_template(&t);
        let again = parse_template(&emitted).expect("emitted template parses");
        assert_eq!(again, t);
        assert_eq!(emit_template(&again), emitted);
        let _ = t.flatten_fields();
    }
});
