#![no_main]
use libfuzzer_sys::fuzz_target;
use qft_core::pauli::PauliOp;

fuzz_target!(|data: &str| {
    if let Some(p) = PauliOp::parse(data) {
        let printed = p.to_string();
        assert_eq!(PauliOp::parse(&printed), Some(p));
    }
});
