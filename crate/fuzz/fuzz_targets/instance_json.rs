#![no_main]

use libfuzzer_sys::fuzz_target;
use scuc_lab::powergrid::{parse_instance, to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(instance) = parse_instance(text) {
        // Anything accepted must survive a write and re-read unchanged.
        let again = parse_instance(&to_json(&instance)).expect("written instance parses");
        assert_eq!(again, instance);
    }
});
