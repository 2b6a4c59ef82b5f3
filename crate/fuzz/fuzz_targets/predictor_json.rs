#![no_main]

use libfuzzer_sys::fuzz_target;
use scuc_lab::learn::parse_predictor;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(predictor) = parse_predictor(text) {
        parse_predictor(&predictor.to_json()).expect("written predictor parses");
    }
});
