#![no_main]

use ckn_cli::ReportBundle;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(bundle) = ReportBundle::decode(text) {
        let encoded = bundle.encode();
        let again = ReportBundle::decode(&encoded).expect("encoded bundle decodes");
        assert_eq!(again, bundle);
        assert_eq!(again.encode(), encoded);
    }
});
