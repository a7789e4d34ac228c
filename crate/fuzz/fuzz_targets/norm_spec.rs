#![no_main]

use ckn_cli::config::{format_norm_family, parse_norm_family};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(family) = parse_norm_family(text) {
        let formatted = format_norm_family(&family);
        assert_eq!(parse_norm_family(&formatted), Ok(family));
    }
});
