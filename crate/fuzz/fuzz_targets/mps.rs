#![no_main]

use libfuzzer_sys::fuzz_target;
use mvsp::linearize::{read_mps, write_mps};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = read_mps(text) {
        let again = read_mps(&write_mps(&model)).expect("written model parses");
        assert_eq!(again, model);
    }
});
