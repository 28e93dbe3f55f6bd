//! Fuzz the GLYF feature-file parser: arbitrary bytes must either be
//! rejected with an error or produce a dataset that satisfies its
//! invariants and survives a re-encode round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = glyphgame::features::dataset_from_bytes(data) {
        assert!(!ds.is_empty());
        assert!(ds.dim() > 0);
        for item in ds.items() {
            assert_eq!(item.values.len(), ds.dim());
            assert!(item.values.iter().all(|v| v.is_finite()));
            assert!((item.class_id as usize) < ds.num_classes());
        }
        let bytes = glyphgame::features::dataset_to_bytes(&ds);
        let again = glyphgame::features::dataset_from_bytes(&bytes).expect("re-encode parses");
        assert_eq!(again, ds);
    }
});
