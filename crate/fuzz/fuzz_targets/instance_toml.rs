#![no_main]

use libfuzzer_sys::fuzz_target;
use mvsp::instance::io::{from_toml, to_toml};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(instance) = from_toml(text) {
        let again = from_toml(&to_toml(&instance)).expect("written instance parses");
        assert_eq!(again, instance);
    }
});
