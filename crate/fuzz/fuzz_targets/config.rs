#![no_main]

use libfuzzer_sys::fuzz_target;
use purify_cli::config::parse_config;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(entries) = parse_config(&text) {
        for e in &entries {
            assert!(!e.key.is_empty() && e.line >= 1);
        }
    }
});
