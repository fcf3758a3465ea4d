#![no_main]

use libfuzzer_sys::fuzz_target;
use sslrc_core::detect::TraceSummary;

fuzz_target!(|data: &[u8]| {
    let _ = serde_json::from_slice::<TraceSummary>(data);
});
