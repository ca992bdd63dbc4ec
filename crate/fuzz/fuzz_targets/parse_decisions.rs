#![no_main]

use fairlint_core::repair::parse_decisions;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(decisions) = parse_decisions(data) {
        let json = serde_json::to_string(&decisions).unwrap();
        assert_eq!(parse_decisions(&json).unwrap(), decisions);
        for d in &decisions {
            let _ = d.issue_id.parse::<fairlint_core::IssueId>();
        }
    }
});
