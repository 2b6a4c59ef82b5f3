#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use scuc_lab::harness::{parse_hints, HintsDocument};
use scuc_lab::powergrid::{parse_instance, UCInstance};

static CASE: &str = include_str!("../../crates/core/fixtures/case6.json");

fn instance() -> &'static UCInstance {
    static INSTANCE: OnceLock<UCInstance> = OnceLock::new();
    INSTANCE.get_or_init(|| parse_instance(CASE).expect("fixture parses"))
}

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let inst = instance();
    if let Ok(hints) = parse_hints(&text, inst) {
        let doc = serde_json::to_string(&HintsDocument::from_hints(&hints, inst)).unwrap();
        assert_eq!(parse_hints(&doc, inst).expect("written hints parse"), hints);
    }
});
