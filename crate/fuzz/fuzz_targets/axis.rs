#![no_main]

use libfuzzer_sys::fuzz_target;
use memkernel_cli::axis::{parse_axis, MAX_AXIS_POINTS};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(axis) = parse_axis(text) {
            assert!(!axis.values.is_empty() && axis.values.len() <= MAX_AXIS_POINTS);
            assert!(axis.values.iter().all(|v| v.is_finite()));
        }
    }
});
