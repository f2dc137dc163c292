#![no_main]
use libfuzzer_sys::fuzz_target;
use qft_core::noise::NoiseModel;

fuzz_target!(|data: &str| {
    for parsed in [NoiseModel::from_json(data), NoiseModel::from_toml(data)] {
        if let Ok(model) = parsed {
            let json = serde_json::to_string(&model).unwrap();
            assert_eq!(NoiseModel::from_json(&json).unwrap(), model);
            let _ = model.rate();
            let _ = model.with_delta(0.5).validate();
        }
    }
});
