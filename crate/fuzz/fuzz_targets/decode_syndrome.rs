#![no_main]
use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use qft_core::code::CssCode;
use qft_core::decoder::{Decoder, DecoderKind};
use qft_core::gf2::BitVector;

struct Fixture {
    code: CssCode,
    decoders: Vec<Box<dyn Decoder>>,
}

fn fixtures() -> &'static [Fixture] {
    static CELL: OnceLock<Vec<Fixture>> = OnceLock::new();
    CELL.get_or_init(|| {
        [
            CssCode::steane(),
            CssCode::hgp_repetition(3),
            CssCode::hgp_repetition(4),
        ]
        .into_iter()
        .map(|code| {
            let decoders = [DecoderKind::Lookup, DecoderKind::Greedy, DecoderKind::Hybrid]
                .into_iter()
                .filter_map(|k| k.build(&code).ok())
                .collect();
            Fixture { code, decoders }
        })
        .collect()
    })
}

fuzz_target!(|data: &[u8]| {
    let Some((&selector, bytes)) = data.split_first() else {
        return;
    };
    let all = fixtures();
    let fixture = &all[selector as usize % all.len()];
    let len = fixture.code.num_checks();
    let bits: Vec<u8> = (0..len)
        .map(|i| bytes.get(i / 8).map_or(0, |b| (b >> (i % 8)) & 1))
        .collect();
    let syndrome = BitVector::from_bits(&bits);
    for decoder in &fixture.decoders {
        let d = decoder.decode(&syndrome).expect("syndrome has the decoder's length");
        let produced = fixture.code.syndrome(&d.correction).unwrap();
        if !d.flagged {
            assert_eq!(produced, syndrome, "{} left a syndrome", decoder.name());
        }
    }
    // A syndrome of the wrong length is an error, never a panic.
    let short = BitVector::zeros(len.saturating_sub(1));
    for decoder in &fixture.decoders {
        assert!(decoder.decode(&short).is_err());
    }
});
