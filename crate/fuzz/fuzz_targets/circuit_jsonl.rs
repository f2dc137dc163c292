#![no_main]
use libfuzzer_sys::fuzz_target;
use qft_core::circuit::LayeredCircuit;

fuzz_target!(|data: &str| {
    if let Ok(c) = LayeredCircuit::from_jsonl(data) {
        let text = c.to_jsonl();
        let again = LayeredCircuit::from_jsonl(&text).expect("serialized circuit parses");
        assert_eq!(again.to_jsonl(), text);
        assert_eq!(again.num_locations(), c.num_locations());
    }
});
