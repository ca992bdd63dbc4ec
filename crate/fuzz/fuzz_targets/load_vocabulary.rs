#![no_main]

use fairlint_core::terms::{emit_vocabulary, load_vocabulary, ValueSet};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let Ok((v, _)) = load_vocabulary("fuzz", data) else { return };
    let (again, _) = load_vocabulary("fuzz", &emit_vocabulary(&v)).expect("emitted vocabulary loads");
    assert_eq!(again, v);
    let first = v.terms().next().cloned();
    if let Some(t) = first {
        let _ = v.branch(&t.iri);
        let set = ValueSet::new(v.terms().cloned());
        let best = set.closest_match(&t.label, 3);
        assert_eq!(best[0].score, 1.0);
    }
});
