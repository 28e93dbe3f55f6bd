//! Fuzz the GLYC checkpoint parser: no panics on malformed input, and
//! anything accepted must re-encode to bytes that parse again.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ck) = glyphgame::checkpoint::Checkpoint::from_bytes(data) {
        let bytes = ck.to_bytes();
        let again =
            glyphgame::checkpoint::Checkpoint::from_bytes(&bytes).expect("re-encode parses");
        assert_eq!(again.rng_states, ck.rng_states);
        assert_eq!(again.groups, ck.groups);
    }
});
