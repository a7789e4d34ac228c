#![no_main]

use ckn_cli::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    match RunConfig::parse(text) {
        Ok(config) => {
            // Accepted configs must survive the canonical round trip.
            let canonical = config.canonical();
            let again = RunConfig::parse(&canonical).expect("canonical form reparses");
            assert_eq!(again.canonical(), canonical);
            assert_eq!(again.fingerprint(), config.fingerprint());
        }
        Err(e) => {
            // Errors point at a real line of the input (or at none).
            assert!(e.line <= text.lines().count());
        }
    }
});
