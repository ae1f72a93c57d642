#![no_main]

use libfuzzer_sys::fuzz_target;
use tng_core::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ExperimentConfig::from_json_str(text) {
        let back = ExperimentConfig::from_json_str(&config.to_json_pretty()).expect("serialized config parses");
        assert_eq!(back, config);
        let _ = config.expand_grid();
    }
});
