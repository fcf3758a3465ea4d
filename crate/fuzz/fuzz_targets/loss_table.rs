#![no_main]

use libfuzzer_sys::fuzz_target;
use sslrc_core::riskctl::LossTable;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = LossTable::read_csv(data, 3) {
        let mut out = Vec::new();
        table.write_csv(&mut out).unwrap();
        assert_eq!(LossTable::read_csv(out.as_slice(), 3).unwrap(), table);
    }
});
