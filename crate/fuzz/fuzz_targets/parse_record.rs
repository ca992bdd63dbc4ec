#![no_main]

use fairlint_core::record::{parse_record, serialize_record};
use fairlint_core::Template;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    // With no template fields nothing gains a datatype, so output must
    // read back as the same record.
    let empty = Template { id: "urn:fuzz".into(), name: String::new(), description: String::new(), children: Vec::new() };
    if let Ok(r) = parse_record("fuzz", data) {
        assert_eq!(r.normalized(), r);
        let back = parse_record("fuzz", &serialize_record(&r, &empty)).expect("serialized record parses");
        assert_eq!(back, r);
    }
});
