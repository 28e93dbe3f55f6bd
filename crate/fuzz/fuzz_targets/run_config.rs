//! Fuzz the TOML run-config parser: malformed text must come back as
//! a config error, never a panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(cfg) = glyphgame::config::RunConfig::from_toml(data) {
        // accepted configs re-serialize and re-parse to the same value
        let text = cfg.to_toml();
        let again = glyphgame::config::RunConfig::from_toml(&text).expect("round trip");
        assert_eq!(again, cfg);
    }
});
