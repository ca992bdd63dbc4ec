#![no_main]

use fairlint_core::evaluate::IssueId;
use fairlint_core::lexical::{coerce_leading_number, is_decimal, is_integer, is_iso_date};
use fairlint_core::{FieldPath, FieldValue};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(p) = data.parse::<FieldPath>() {
        assert_eq!(p.to_string(), data);
    }
    if let Ok(id) = data.parse::<IssueId>() {
        assert_eq!(id.to_string().parse::<IssueId>().unwrap(), id);
    }
    for decimal in [false, true] {
        if let Some(token) = coerce_leading_number(data, decimal) {
            assert!(if decimal { is_decimal(token) } else { is_integer(token) });
        }
    }
    let _ = is_iso_date(data);
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(data) {
        if let Ok(value) = FieldValue::from_json(&v) {
            assert_eq!(FieldValue::from_json(&value.to_json(None)).unwrap(), value);
        }
    }
});
