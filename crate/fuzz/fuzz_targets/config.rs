#![no_main]

use libfuzzer_sys::fuzz_target;
use pat_cli::ExperimentConfig;

fuzz_target!(|text: &str| {
    if let Ok(cfg) = ExperimentConfig::from_toml(text) {
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).expect("serialised config parses");
        assert_eq!(again, cfg);
    }
});
