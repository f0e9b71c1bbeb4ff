#![no_main]

use libfuzzer_sys::fuzz_target;
use qrc_core::config::{ConfigFile, ExperimentConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(file) = ConfigFile::parse(text) else {
        return;
    };
    // what we write back must parse to the same file
    let again = ConfigFile::parse(&file.to_toml()).expect("canonical form parses");
    assert_eq!(file.to_toml(), again.to_toml());
    if let Ok(config) = ExperimentConfig::resolve(file) {
        let _ = config.sweep.grid();
        let _ = config.dynamics_cases();
    }
});
