#![no_main]

use libfuzzer_sys::fuzz_target;
use memkernel_cli::config::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(map) = parse_config(text) {
            for (key, value) in &map {
                assert!(!key.is_empty() && !value.is_empty());
                assert_eq!(value.trim(), value);
            }
        }
    }
});
