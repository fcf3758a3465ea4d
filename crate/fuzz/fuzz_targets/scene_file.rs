#![no_main]

use libfuzzer_sys::fuzz_target;
use sslrc_core::scene::parse_scene_str;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(scene) = parse_scene_str(text, None) {
            assert!(scene.validate().is_ok());
        }
    }
});
