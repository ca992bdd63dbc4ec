#![no_main]

use fairlint_core::report::{parse_report, render_report, report_to_json, ReportFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(rep) = parse_report(data) {
        let json = report_to_json(&rep);
        assert_eq!(parse_report(&json).expect("rendered report parses"), rep);
        let _ = render_report(&rep, ReportFormat::Text);
        let _ = render_report(&rep, ReportFormat::Html);
    }
});
