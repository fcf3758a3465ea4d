#![no_main]

use libfuzzer_sys::fuzz_target;
use sslrc_core::io::decode_wav;

fuzz_target!(|data: &[u8]| {
    if let Ok(signal) = decode_wav(data) {
        assert!(signal.channels().iter().all(|c| c.iter().all(|v| v.is_finite())));
    }
});
