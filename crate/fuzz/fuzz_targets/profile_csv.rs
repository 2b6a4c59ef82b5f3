#![no_main]

use libfuzzer_sys::fuzz_target;
use scuc_lab::sampling::{fit_profile_stats, read_reference_loads};

fuzz_target!(|data: &[u8]| {
    if let Ok(days) = read_reference_loads(data) {
        if let Ok(stats) = fit_profile_stats(&days) {
            assert!(stats.mean.iter().chain(&stats.std_dev).all(|v| v.is_finite()));
        }
    }
});
