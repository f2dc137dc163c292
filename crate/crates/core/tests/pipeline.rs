use qft_core::circuit::{build_syndrome_circuit, LayeredCircuit};
use qft_core::code::{hamming_7_4, hypergraph_product, CodeDefinition, CssCode};
use qft_core::decoder::{certify_budgets, DecoderKind};
use qft_core::ftcompile::{plan_layout, BlockSizeRule, CodeFamily};
use qft_core::noise::{sample_faults, substream_rng, NoiseModel};
use qft_core::pauli::{Pauli1, PauliOp};
use qft_core::pauli_sim::{
    ec_step, ideal_correction, is_harmless, push_to_end, run_memory_experiment, BlockContext, ExperimentConfig,
};

#[test]
fn definition_file_round_trip_preserves_behaviour() {
    let code = CssCode::hgp_repetition(3);
    let text = code.to_definition().to_json();
    let rebuilt = CodeDefinition::from_json(&text).unwrap().build().unwrap();
    assert_eq!((rebuilt.n(), rebuilt.m(), rebuilt.d_min()), (13, 1, Some(3)));

    let a = build_syndrome_circuit(&code).unwrap().to_jsonl();
    let b = build_syndrome_circuit(&rebuilt).unwrap().to_jsonl();
    assert_eq!(a, b);
    assert_eq!(LayeredCircuit::from_jsonl(&a).unwrap().to_jsonl(), a);
}

#[test]
fn config_drives_a_reproducible_experiment() {
    let cfg = ExperimentConfig::from_toml(
        r#"
code = "steane"
decoder = "hybrid"
noise = { variant = "depolarizing", delta = 0.002 }
rounds = [3]
trials = 4000
seed = 99
"#,
    )
    .unwrap();
    let block = BlockContext::new(CssCode::bundled(&cfg.code).unwrap(), cfg.decoder).unwrap();
    let run = || run_memory_experiment(&block, &cfg.noise, cfg.rounds[0], cfg.trials, cfg.seed).unwrap();
    let first = run();
    assert_eq!(first, run());
    assert!(first.failures > 0 && first.failures < first.trials / 4);
    assert!(first.ci_low <= first.failure_rate() && first.failure_rate() <= first.ci_high);
}

#[test]
fn ec_round_agrees_with_pushed_faults() {
    let block = BlockContext::new(CssCode::steane(), DecoderKind::Lookup).unwrap();
    let model = NoiseModel::Depolarizing { delta: 0.02 };
    let mut nontrivial = 0;
    for trial in 0..300 {
        let faults = sample_faults(block.circuit(), &model, &mut substream_rng(5, trial, 0, 0)).unwrap();
        let pushed = push_to_end(block.circuit(), &faults).unwrap();
        let round = ec_step(
            &block,
            &PauliOp::identity(7),
            &model,
            &mut substream_rng(5, trial, 0, 0),
        )
        .unwrap();
        assert_eq!(round.faults, faults.len());
        assert_eq!(round.observed_syndrome, pushed.syndrome_flips);
        let correction = block.decoder().decode(&pushed.syndrome_flips).unwrap().correction;
        assert!(round
            .residual
            .same_string(&pushed.data_pauli(7).mul_unsigned(&correction)));
        nontrivial += !faults.is_empty() as usize;
    }
    assert!(nontrivial > 100);
}

#[test]
fn certified_budget_holds_after_a_noiseless_round() {
    let code = CssCode::steane();
    let block = BlockContext::new(code.clone(), DecoderKind::Lookup).unwrap();
    let cert = certify_budgets(&code, block.decoder(), 1, 0).unwrap();
    assert_eq!(cert.t_residual, 0);
    for q in 0..7 {
        for p in [Pauli1::X, Pauli1::Y, Pauli1::Z] {
            let e = PauliOp::single(7, q, p);
            assert!(is_harmless(&code, &ideal_correction(&block, &e).unwrap()));
        }
    }
}

#[test]
fn hamming_layout_uses_a_constructible_code() {
    let layout = plan_layout(16, 7.0, CodeFamily::HgpHamming, BlockSizeRule::SquareRoot).unwrap();
    let code = hypergraph_product(&hamming_7_4(), &hamming_7_4()).unwrap();
    assert_eq!((layout.n as usize, layout.m as usize), (code.n(), code.m()));
    assert!(code.ldpc_profile().r <= 7);
}
