#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use scuc_lab::learn::parse_sample;
use scuc_lab::powergrid::{parse_instance, UCInstance};

static CASE: &str = include_str!("../../crates/core/fixtures/case6.json");

fn instance() -> &'static UCInstance {
    static INSTANCE: OnceLock<UCInstance> = OnceLock::new();
    INSTANCE.get_or_init(|| parse_instance(CASE).expect("fixture parses"))
}

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_sample(text, &instance().network);
    }
});
