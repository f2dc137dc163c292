#![no_main]
use libfuzzer_sys::fuzz_target;
use qft_core::code::{CodeDefinition, CodeSummary};

fuzz_target!(|data: &str| {
    let Ok(def) = CodeDefinition::from_json(data) else {
        return;
    };
    // Exact distance search is exponential in n; keep iterations fast.
    if def.n > 14 {
        return;
    }
    if let Ok(code) = def.build() {
        let summary = CodeSummary::of(&code);
        assert_eq!(summary.n, def.n);
        assert!(code.hx().mul_transpose(code.hz()).is_zero());
        let again = CodeDefinition::from_json(&code.to_definition().to_json()).unwrap();
        assert_eq!(again.build().unwrap().m(), code.m());
    }
});
