#![no_main]

use libfuzzer_sys::fuzz_target;
use sslrc_core::srp::{decode_maps, encode_maps};

fuzz_target!(|data: &[u8]| {
    // anything that decodes must re-encode to the same bytes
    if let Ok(records) = decode_maps(data) {
        assert_eq!(encode_maps(&records), data);
    }
});
