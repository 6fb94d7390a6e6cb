#![no_main]

use libfuzzer_sys::fuzz_target;
use purify_cli::config::parse_header;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_header(text);
    }
});
