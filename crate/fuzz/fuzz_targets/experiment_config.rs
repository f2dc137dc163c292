#![no_main]
use libfuzzer_sys::fuzz_target;
use qft_core::pauli_sim::ExperimentConfig;

fuzz_target!(|data: &str| {
    for parsed in [ExperimentConfig::from_toml(data), ExperimentConfig::from_json(data)] {
        if let Ok(cfg) = parsed {
            assert!(cfg.validate().is_ok());
            assert!(cfg.trials > 0 && !cfg.rounds.is_empty());
        }
    }
});
