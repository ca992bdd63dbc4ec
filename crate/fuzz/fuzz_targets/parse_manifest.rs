#![no_main]

use fairlint_core::RecordManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(m) = RecordManifest::parse(data) {
        assert_eq!(RecordManifest::parse(&m.emit()).expect("emitted manifest parses"), m);
    }
});
