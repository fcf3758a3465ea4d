#![no_main]

use libfuzzer_sys::fuzz_target;
use sslrc_core::scene::parse_array_str;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(array) = parse_array_str(text) {
            assert!(array.len() >= 2);
        }
    }
});
