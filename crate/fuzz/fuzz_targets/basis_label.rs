#![no_main]

use libfuzzer_sys::fuzz_target;
use qrc_core::fock::BasisLabel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(label) = text.parse::<BasisLabel>() {
        let back: BasisLabel = label.to_string().parse().expect("display form parses");
        assert_eq!(back, label);
    }
});
