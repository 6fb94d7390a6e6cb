#![no_main]

use libfuzzer_sys::fuzz_target;
use purify_cli::config::{format_list, parse_list, MAX_RANGE};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(values) = parse_list(text) {
        assert!(values.len() <= MAX_RANGE);
        // The canonical form written into headers must read back unchanged.
        assert_eq!(parse_list(&format_list(&values)).ok(), Some(values));
    }
});
