//! Pauli-frame simulation of Clifford circuits with Pauli faults, pushing
//! faults to the end of a syndrome circuit, and Monte Carlo error-correction
//! rounds over one or more code blocks.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{build_syndrome_circuit, shade, CircuitError, GateKind, LayeredCircuit, Location};
use crate::code::{CodeError, CssCode};
use crate::decoder::{Decoder, DecoderError, DecoderKind};
use crate::gf2::BitVector;
use crate::noise::{sample_faults, substream_rng, FaultEvent, NoiseError, NoiseModel};
use crate::pauli::{Pauli1, PauliOp};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("no gate at layer {}, position {}", .0.layer, .0.position)]
    InvalidLocation(Location),
    #[error("fault at layer {}, position {} acts on {got} qubits, the gate on {expected}", .location.layer, .location.position)]
    FaultArity {
        location: Location,
        expected: usize,
        got: usize,
    },
    #[error("frame covers {got} wires, the circuit {expected}")]
    WireMismatch { expected: usize, got: usize },
    #[error("rounds and trials must be at least 1")]
    EmptyExperiment,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Pauli error on every wire (phase ignored) plus the measurement flips
/// recorded so far, in measurement order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliFrame {
    x: BitVector,
    z: BitVector,
    flips: Vec<bool>,
}

impl PauliFrame {
    pub fn new(wires: usize) -> Self {
        Self {
            x: BitVector::zeros(wires),
            z: BitVector::zeros(wires),
            flips: Vec::new(),
        }
    }

    /// Frame carrying `error` on the lowest wires.
    pub fn with_data(wires: usize, error: &PauliOp) -> Self {
        let mut f = Self::new(wires);
        f.apply(error, &(0..error.num_qubits()).collect::<Vec<_>>());
        f
    }

    pub fn wires(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &BitVector {
        &self.x
    }

    pub fn z(&self) -> &BitVector {
        &self.z
    }

    pub fn flips(&self) -> &[bool] {
        &self.flips
    }

    pub fn flip_bits(&self) -> BitVector {
        BitVector::from_bits(&self.flips)
    }

    /// Multiplies `p` (on `wires`, in order) into the frame.
    pub fn apply(&mut self, p: &PauliOp, wires: &[usize]) {
        for (i, &w) in wires.iter().enumerate() {
            if p.x_bits().get(i) {
                self.x.flip(w);
            }
            if p.z_bits().get(i) {
                self.z.flip(w);
            }
        }
    }

    /// Phase-free Pauli on wires `start..start + len`.
    pub fn restrict(&self, start: usize, len: usize) -> PauliOp {
        PauliOp::from_parts(self.x.slice(start, len), self.z.slice(start, len))
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.x.or(&self.z).ones().collect()
    }

    fn clear(&mut self, w: usize) {
        self.x.set(w, false);
        self.z.set(w, false);
    }

    fn conjugate(&mut self, kind: &GateKind, ops: &[usize]) {
        match kind {
            GateKind::H => {
                let w = ops[0];
                let (x, z) = (self.x.get(w), self.z.get(w));
                self.x.set(w, z);
                self.z.set(w, x);
            }
            GateKind::S => {
                if self.x.get(ops[0]) {
                    self.z.flip(ops[0]);
                }
            }
            GateKind::Cnot => {
                let (c, t) = (ops[0], ops[1]);
                if self.x.get(c) {
                    self.x.flip(t);
                }
                if self.z.get(t) {
                    self.z.flip(c);
                }
            }
            GateKind::Cz => {
                let (a, b) = (ops[0], ops[1]);
                let (xa, xb) = (self.x.get(a), self.x.get(b));
                if xb {
                    self.z.flip(a);
                }
                if xa {
                    self.z.flip(b);
                }
            }
            _ => {}
        }
    }
}

fn index_faults<'f>(
    circuit: &LayeredCircuit,
    faults: &'f [FaultEvent],
) -> Result<BTreeMap<Location, Vec<&'f PauliOp>>, SimError> {
    let mut by_loc: BTreeMap<Location, Vec<&PauliOp>> = BTreeMap::new();
    for f in faults {
        let gate = circuit.gate(f.location).ok_or(SimError::InvalidLocation(f.location))?;
        if f.effect.num_qubits() != gate.arity() {
            return Err(SimError::FaultArity {
                location: f.location,
                expected: gate.arity(),
                got: f.effect.num_qubits(),
            });
        }
        by_loc.entry(f.location).or_default().push(&f.effect);
    }
    Ok(by_loc)
}

fn run_layers(
    circuit: &LayeredCircuit,
    frame: &mut PauliFrame,
    faults: &BTreeMap<Location, Vec<&PauliOp>>,
    from_layer: usize,
) {
    for (layer, gates) in circuit.layers().iter().enumerate().skip(from_layer) {
        for (position, g) in gates.iter().enumerate() {
            let here = faults.get(&Location { layer, position });
            let ops = &g.operands;
            if g.kind.is_measurement() {
                for p in here.into_iter().flatten() {
                    frame.apply(p, ops);
                }
                let w = ops[0];
                frame.flips.push(if g.kind == GateKind::MeasX {
                    frame.z.get(w)
                } else {
                    frame.x.get(w)
                });
                continue;
            }
            if g.kind.is_prep() {
                frame.clear(ops[0]);
            } else {
                frame.conjugate(&g.kind, ops);
            }
            for p in here.into_iter().flatten() {
                frame.apply(p, ops);
            }
        }
    }
}

fn measurements_before(circuit: &LayeredCircuit, layer: usize) -> usize {
    circuit.layers()[..layer]
        .iter()
        .flatten()
        .filter(|g| g.kind.is_measurement())
        .count()
}

/// Conjugates `initial` through `circuit`, inserting `faults` inline, and
/// records a flip bit per measurement.
pub fn propagate(
    circuit: &LayeredCircuit,
    initial: &PauliFrame,
    faults: &[FaultEvent],
) -> Result<PauliFrame, SimError> {
    if initial.wires() != circuit.quantum_wires() {
        return Err(SimError::WireMismatch {
            expected: circuit.quantum_wires(),
            got: initial.wires(),
        });
    }
    let index = index_faults(circuit, faults)?;
    let mut frame = initial.clone();
    frame.flips.clear();
    run_layers(circuit, &mut frame, &index, 0);
    Ok(frame)
}

/// Equivalent error at the end of a circuit: the residual Pauli on every
/// wire and the measurement flips.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminalError {
    pub frame: PauliOp,
    pub syndrome_flips: BitVector,
}

impl TerminalError {
    pub fn data_pauli(&self, n: usize) -> PauliOp {
        self.frame.restrict(0, n)
    }
}

/// Pushes every fault separately from its own location to the end of the
/// circuit and multiplies the results.
pub fn push_to_end(circuit: &LayeredCircuit, faults: &[FaultEvent]) -> Result<TerminalError, SimError> {
    let wires = circuit.quantum_wires();
    let mut x = BitVector::zeros(wires);
    let mut z = BitVector::zeros(wires);
    let mut flips = BitVector::zeros(circuit.classical_wires());
    for f in faults {
        let one = std::slice::from_ref(f);
        let index = index_faults(circuit, one)?;
        let mut frame = PauliFrame::new(wires);
        run_layers(circuit, &mut frame, &index, f.location.layer);
        x.xor_assign(&frame.x);
        z.xor_assign(&frame.z);
        let offset = measurements_before(circuit, f.location.layer);
        for (i, &b) in frame.flips.iter().enumerate() {
            if b {
                flips.flip(offset + i);
            }
        }
    }
    Ok(TerminalError {
        frame: PauliOp::from_parts(x, z),
        syndrome_flips: flips,
    })
}

/// Wires that a fault can reach: the operands, spread through every later
/// layer (from the measurement itself for measurement faults).
pub fn fault_shade(circuit: &LayeredCircuit, faults: &[FaultEvent]) -> Result<BTreeSet<usize>, SimError> {
    let mut out = BTreeSet::new();
    for f in faults {
        let g = circuit.gate(f.location).ok_or(SimError::InvalidLocation(f.location))?;
        let from = if g.kind.is_measurement() {
            f.location.layer
        } else {
            f.location.layer + 1
        };
        let seed: BTreeSet<usize> = f.effect.support().ones().map(|i| g.operands[i]).collect();
        out.extend(shade(circuit, &seed, from, circuit.depth())?);
    }
    Ok(out)
}

/// Counting bound on the terminal support: a fault of arity `a` in layer
/// `i` (1-based) of a depth-`d` circuit reaches at most `a · 2^{d−i+1}` wires.
pub fn shade_size_bound(circuit: &LayeredCircuit, faults: &[FaultEvent]) -> u128 {
    let d = circuit.depth();
    faults
        .iter()
        .map(|f| {
            let exp = (d - f.location.layer).min(120) as u32;
            (f.effect.num_qubits() as u128) << exp
        })
        .sum()
}

/// Summary of an exhaustive comparison of inline propagation and pushing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PushCheckReport {
    pub locations: usize,
    pub single_faults: usize,
    pub cases: u64,
    pub mismatches: u64,
    pub shade_violations: u64,
    pub bound_violations: u64,
}

impl PushCheckReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0 && self.shade_violations == 0 && self.bound_violations == 0
    }
}

/// Every (location, nontrivial Pauli) insertion of `circuit`.
pub fn all_single_faults(circuit: &LayeredCircuit) -> Vec<FaultEvent> {
    const P: [Pauli1; 4] = [Pauli1::I, Pauli1::X, Pauli1::Y, Pauli1::Z];
    let mut out = Vec::new();
    for (location, g) in circuit.locations() {
        let a = g.arity();
        for k in 1..(1usize << (2 * a)) {
            let labels: Vec<Pauli1> = (0..a).map(|i| P[(k >> (2 * i)) & 3]).collect();
            out.push(FaultEvent {
                location,
                effect: PauliOp::from_labels(&labels),
            });
        }
    }
    out
}

fn check_case(circuit: &LayeredCircuit, faults: &[FaultEvent], report: &mut PushCheckReport) -> Result<(), SimError> {
    report.cases += 1;
    let inline = propagate(circuit, &PauliFrame::new(circuit.quantum_wires()), faults)?;
    let pushed = push_to_end(circuit, faults)?;
    let inline_frame = PauliOp::from_parts(inline.x.clone(), inline.z.clone());
    if inline_frame != pushed.frame || inline.flip_bits() != pushed.syndrome_flips {
        report.mismatches += 1;
    }
    let cone = fault_shade(circuit, faults)?;
    let measured: Vec<usize> = circuit
        .layers()
        .iter()
        .flatten()
        .filter(|g| g.kind.is_measurement())
        .map(|g| g.operands[0])
        .collect();
    let flipped = pushed.syndrome_flips.ones().map(|i| measured[i]);
    let support: Vec<usize> = pushed.frame.support().ones().collect();
    if !support.iter().copied().chain(flipped).all(|w| cone.contains(&w)) {
        report.shade_violations += 1;
    }
    if support.len() as u128 > shade_size_bound(circuit, faults) {
        report.bound_violations += 1;
    }
    Ok(())
}

/// Compares inline propagation with [`push_to_end`] over all fault sets of
/// size at most `max_faults` (1 or 2), checking shade containment and the
/// counting bound on each.
pub fn exhaustive_push_check(circuit: &LayeredCircuit, max_faults: usize) -> Result<PushCheckReport, SimError> {
    let singles = all_single_faults(circuit);
    let mut report = PushCheckReport {
        locations: circuit.num_locations(),
        single_faults: singles.len(),
        ..Default::default()
    };
    if max_faults >= 1 {
        for f in &singles {
            check_case(circuit, std::slice::from_ref(f), &mut report)?;
        }
    }
    if max_faults >= 2 {
        let partial: Vec<Result<PushCheckReport, SimError>> = (0..singles.len())
            .into_par_iter()
            .map(|i| {
                let mut r = PushCheckReport::default();
                for j in (i + 1)..singles.len() {
                    check_case(circuit, &[singles[i].clone(), singles[j].clone()], &mut r)?;
                }
                Ok(r)
            })
            .collect();
        for r in partial {
            let r = r?;
            report.cases += r.cases;
            report.mismatches += r.mismatches;
            report.shade_violations += r.shade_violations;
            report.bound_violations += r.bound_violations;
        }
    }
    Ok(report)
}

/// A code block with its syndrome circuit and decoder.
pub struct BlockContext {
    code: CssCode,
    circuit: LayeredCircuit,
    decoder: Box<dyn Decoder>,
}

impl BlockContext {
    pub fn new(code: CssCode, decoder: DecoderKind) -> Result<Self, SimError> {
        let decoder = decoder.build(&code)?;
        Self::with_decoder(code, decoder)
    }

    pub fn with_decoder(code: CssCode, decoder: Box<dyn Decoder>) -> Result<Self, SimError> {
        let circuit = build_syndrome_circuit(&code)?;
        Ok(Self { code, circuit, decoder })
    }

    pub fn code(&self) -> &CssCode {
        &self.code
    }

    pub fn circuit(&self) -> &LayeredCircuit {
        &self.circuit
    }

    pub fn decoder(&self) -> &dyn Decoder {
        self.decoder.as_ref()
    }
}

/// Outcome of one error-correction round on one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockRound {
    pub observed_syndrome: BitVector,
    pub faults: usize,
    pub residual: PauliOp,
    pub heralded: bool,
}

/// Noisy syndrome extraction on a block carrying `error`, then decoding and
/// correction. The measured syndrome already includes every fault's flips.
pub fn ec_step(
    block: &BlockContext,
    error: &PauliOp,
    model: &NoiseModel,
    rng: &mut impl Rng,
) -> Result<BlockRound, SimError> {
    let n = block.code.n();
    let faults = sample_faults(&block.circuit, model, rng)?;
    let frame = propagate(
        &block.circuit,
        &PauliFrame::with_data(block.circuit.quantum_wires(), error),
        &faults,
    )?;
    let observed = frame.flip_bits();
    let d = block.decoder.decode(&observed)?;
    Ok(BlockRound {
        observed_syndrome: observed,
        faults: faults.len(),
        residual: frame.restrict(0, n).mul_unsigned(&d.correction),
        heralded: d.flagged,
    })
}

/// Whether `residual` leaves codewords unchanged.
pub fn is_harmless(code: &CssCode, residual: &PauliOp) -> bool {
    code.syndrome_unchecked(residual).is_zero() && code.acts_trivially_on_logicals(residual)
}

/// Residual left by a noiseless syndrome measurement and decode.
pub fn ideal_correction(block: &BlockContext, error: &PauliOp) -> Result<PauliOp, SimError> {
    let d = block.decoder.decode(&block.code.syndrome_unchecked(error))?;
    Ok(error.mul_unsigned(&d.correction))
}

/// One block taking part in a parallel round; `id` keys its random stream.
pub struct BlockInput<'a> {
    pub id: u64,
    pub context: &'a BlockContext,
    pub error: PauliOp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EcRoundResult {
    pub ids: Vec<u64>,
    pub observed_syndromes: Vec<BitVector>,
    pub residuals: Vec<PauliOp>,
    pub residual_weights: Vec<usize>,
    /// The residual survives a further noiseless round as a logical error.
    pub logical_failure: Vec<bool>,
    pub heralded: Vec<bool>,
}

/// One noisy error-correction round on every block. Each block draws from
/// the substream `(seed, trial, id, round)`, so results do not depend on
/// block order.
pub fn run_ec_round(
    blocks: &[BlockInput<'_>],
    model: &NoiseModel,
    seed: u64,
    trial: u64,
    round: u64,
) -> Result<EcRoundResult, SimError> {
    let mut out = EcRoundResult {
        ids: Vec::with_capacity(blocks.len()),
        observed_syndromes: Vec::with_capacity(blocks.len()),
        residuals: Vec::with_capacity(blocks.len()),
        residual_weights: Vec::with_capacity(blocks.len()),
        logical_failure: Vec::with_capacity(blocks.len()),
        heralded: Vec::with_capacity(blocks.len()),
    };
    for b in blocks {
        let mut rng = substream_rng(seed, trial, b.id, round);
        let r = ec_step(b.context, &b.error, model, &mut rng)?;
        let after = ideal_correction(b.context, &r.residual)?;
        out.ids.push(b.id);
        out.residual_weights.push(b.context.code.reduced_weight(&r.residual)?);
        out.logical_failure.push(!is_harmless(&b.context.code, &after));
        out.observed_syndromes.push(r.observed_syndrome);
        out.residuals.push(r.residual);
        out.heralded.push(r.heralded);
    }
    Ok(out)
}

/// First-order logical failure of one noisy round followed by a noiseless
/// one under depolarizing noise: the failure probability is
/// `coefficient · δ + O(δ²)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeadingOrder {
    pub coefficient: f64,
    pub failing_faults: usize,
    pub single_faults: usize,
}

/// Enumerates every single fault of the block's syndrome circuit, weighted
/// by its probability per unit `δ`.
pub fn leading_order_failure(block: &BlockContext) -> Result<LeadingOrder, SimError> {
    let c = &block.circuit;
    let n = block.code.n();
    let mut out = LeadingOrder {
        coefficient: 0.0,
        failing_faults: 0,
        single_faults: 0,
    };
    for f in all_single_faults(c) {
        let g = c.gate(f.location).ok_or(SimError::InvalidLocation(f.location))?;
        let weight = if g.kind.is_measurement() {
            let flip = if g.kind == GateKind::MeasX {
                Pauli1::Z
            } else {
                Pauli1::X
            };
            if f.effect != PauliOp::from_labels(&[flip]) {
                continue;
            }
            1.0
        } else {
            1.0 / ((1usize << (2 * g.arity())) - 1) as f64
        };
        out.single_faults += 1;
        let frame = propagate(c, &PauliFrame::new(c.quantum_wires()), std::slice::from_ref(&f))?;
        let d = block.decoder.decode(&frame.flip_bits())?;
        let residual = frame.restrict(0, n).mul_unsigned(&d.correction);
        if !is_harmless(&block.code, &ideal_correction(block, &residual)?) {
            out.coefficient += weight;
            out.failing_faults += 1;
        }
    }
    Ok(out)
}

/// Wilson score interval for `successes` out of `trials` at `z` standard
/// deviations.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub const CONFIDENCE_Z: f64 = 1.96;

/// Aggregate statistics of a memory experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryStats {
    pub code: String,
    pub decoder: String,
    pub rounds: u32,
    pub trials: u64,
    pub seed: u64,
    pub failures: u64,
    pub heralded: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `residual_histograms[r][w]`: trials whose residual after round `r`
    /// has reduced weight `w`.
    pub residual_histograms: Vec<Vec<u64>>,
}

impl MemoryStats {
    pub fn failure_rate(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }

    /// Standard error of the failure rate.
    pub fn standard_error(&self) -> f64 {
        let p = self.failure_rate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

#[derive(Clone, Debug, Default)]
struct Tally {
    failures: u64,
    heralded: u64,
    histograms: Vec<Vec<u64>>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.failures += other.failures;
        self.heralded += other.heralded;
        if self.histograms.len() < other.histograms.len() {
            self.histograms.resize(other.histograms.len(), Vec::new());
        }
        for (a, b) in self.histograms.iter_mut().zip(other.histograms) {
            if a.len() < b.len() {
                a.resize(b.len(), 0);
            }
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self
    }
}

fn memory_trial(
    block: &BlockContext,
    model: &NoiseModel,
    rounds: u32,
    seed: u64,
    trial: u64,
) -> Result<Tally, SimError> {
    let mut error = PauliOp::identity(block.code.n());
    let mut tally = Tally {
        histograms: vec![Vec::new(); rounds as usize],
        ..Default::default()
    };
    for round in 0..rounds {
        let mut rng = substream_rng(seed, trial, 0, round as u64);
        let r = ec_step(block, &error, model, &mut rng)?;
        if r.heralded {
            tally.heralded += 1;
        }
        let w = block.code.reduced_weight(&r.residual)?;
        let h = &mut tally.histograms[round as usize];
        if h.len() <= w {
            h.resize(w + 1, 0);
        }
        h[w] += 1;
        error = r.residual;
    }
    let last = ideal_correction(block, &error)?;
    if !is_harmless(&block.code, &last) {
        tally.failures = 1;
    }
    Ok(tally)
}

/// `trials` independent runs of `rounds` noisy error-correction rounds
/// followed by one noiseless round; a trial fails when the final residual
/// acts nontrivially on the codespace. Trials run in parallel on the rayon
/// pool and the result is independent of scheduling.
pub fn run_memory_experiment(
    block: &BlockContext,
    model: &NoiseModel,
    rounds: u32,
    trials: u64,
    seed: u64,
) -> Result<MemoryStats, SimError> {
    if rounds == 0 || trials == 0 {
        return Err(SimError::EmptyExperiment);
    }
    model.validate()?;
    let tally = (0..trials)
        .into_par_iter()
        .map(|t| memory_trial(block, model, rounds, seed, t))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    let (ci_low, ci_high) = wilson_interval(tally.failures, trials, CONFIDENCE_Z);
    let mut histograms = tally.histograms;
    histograms.resize(rounds as usize, Vec::new());
    Ok(MemoryStats {
        code: block.code.name().to_string(),
        decoder: block.decoder.name().to_string(),
        rounds,
        trials,
        seed,
        failures: tally.failures,
        heralded: tally.heralded,
        ci_low,
        ci_high,
        residual_histograms: histograms,
    })
}

/// Aggregate of a parallel-block experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParallelStats {
    pub blocks: usize,
    pub trials: u64,
    /// Trials in which every block's residual stayed within the budget.
    pub within_budget: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Per block id, in the order given: trials with a logical failure.
    pub failures_by_block: Vec<(u64, u64)>,
    /// Per block id: trials over the budget.
    pub over_budget_by_block: Vec<(u64, u64)>,
}

/// Repeats [`run_ec_round`] with per-trial input errors drawn by `input`
/// (called with trial index and block id), counting trials in which every
/// residual has reduced weight at most `budget`.
pub fn run_parallel_blocks(
    contexts: &[(u64, &BlockContext)],
    input: impl Fn(u64, u64) -> PauliOp + Sync,
    model: &NoiseModel,
    budget: usize,
    trials: u64,
    seed: u64,
) -> Result<ParallelStats, SimError> {
    if trials == 0 {
        return Err(SimError::EmptyExperiment);
    }
    model.validate()?;
    let h = contexts.len();
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| {
            let blocks: Vec<BlockInput> = contexts
                .iter()
                .map(|&(id, ctx)| BlockInput {
                    id,
                    context: ctx,
                    error: input(t, id),
                })
                .collect();
            let r = run_ec_round(&blocks, model, seed, t, 0)?;
            let over: Vec<u64> = r.residual_weights.iter().map(|&w| (w > budget) as u64).collect();
            let fail: Vec<u64> = r.logical_failure.iter().map(|&f| f as u64).collect();
            Ok((over, fail))
        })
        .try_fold(
            || (0u64, vec![0u64; h], vec![0u64; h]),
            |(ok, mut over_acc, mut fail_acc), res: Result<(Vec<u64>, Vec<u64>), SimError>| {
                let (over, fail) = res?;
                let all_ok = over.iter().all(|&o| o == 0);
                for i in 0..h {
                    over_acc[i] += over[i];
                    fail_acc[i] += fail[i];
                }
                Ok::<_, SimError>((ok + all_ok as u64, over_acc, fail_acc))
            },
        )
        .try_reduce(
            || (0u64, vec![0u64; h], vec![0u64; h]),
            |(a, mut oa, mut fa), (b, ob, fb)| {
                for i in 0..h {
                    oa[i] += ob[i];
                    fa[i] += fb[i];
                }
                Ok((a + b, oa, fa))
            },
        )?;
    let (within, over, fail) = per_trial;
    let (ci_low, ci_high) = wilson_interval(within, trials, CONFIDENCE_Z);
    let ids: Vec<u64> = contexts.iter().map(|(id, _)| *id).collect();
    Ok(ParallelStats {
        blocks: h,
        trials,
        within_budget: within,
        ci_low,
        ci_high,
        failures_by_block: ids.iter().copied().zip(fail).collect(),
        over_budget_by_block: ids.iter().copied().zip(over).collect(),
    })
}

/// Experiment parameters as read from TOML or JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Bundled code name or path to a code definition JSON.
    pub code: String,
    #[serde(default = "default_decoder")]
    pub decoder: DecoderKind,
    pub noise: NoiseModel,
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default = "default_rounds")]
    pub rounds: Vec<u32>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_decoder() -> DecoderKind {
    DecoderKind::Lookup
}

fn default_rounds() -> Vec<u32> {
    vec![1]
}

fn default_trials() -> u64 {
    1000
}

pub const MAX_CONFIG_TRIALS: u64 = 1 << 40;

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.noise.validate().map_err(|e| format!("noise: {e}"))?;
        if let Some(d) = self.deltas.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(format!("deltas: {d} is outside [0, 1]"));
        }
        if self.rounds.is_empty() || self.rounds.contains(&0) {
            return Err("rounds: every entry must be at least 1".into());
        }
        if self.trials == 0 || self.trials > MAX_CONFIG_TRIALS {
            return Err(format!("trials: must be in 1..={MAX_CONFIG_TRIALS}"));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        let c: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let c: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::exact_sim::{encode_logical, simulate_circuit, StateVector};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn steane_ctx() -> BlockContext {
        BlockContext::new(CssCode::steane(), DecoderKind::Lookup).unwrap()
    }

    #[test]
    fn trivial_frame_stays_trivial() {
        let ctx = steane_ctx();
        let c = ctx.circuit();
        let f = propagate(c, &PauliFrame::new(c.quantum_wires()), &[]).unwrap();
        assert!(f.x().is_zero() && f.z().is_zero());
        assert!(f.flips().iter().all(|b| !b));
        assert_eq!(f.flips().len(), 6);
    }

    #[test]
    fn cnot_copies_x_forward() {
        let c = LayeredCircuit::from_layers(2, vec![vec![Gate::cnot(0, 1)]]).unwrap();
        let f = propagate(&c, &PauliFrame::with_data(2, &PauliOp::parse("XI").unwrap()), &[]).unwrap();
        assert_eq!(f.restrict(0, 2), PauliOp::parse("XX").unwrap());
        let f = propagate(&c, &PauliFrame::with_data(2, &PauliOp::parse("IZ").unwrap()), &[]).unwrap();
        assert_eq!(f.restrict(0, 2), PauliOp::parse("ZZ").unwrap());
    }

    #[test]
    fn invalid_fault_locations() {
        let c = LayeredCircuit::from_layers(2, vec![vec![Gate::cnot(0, 1)]]).unwrap();
        let bad = FaultEvent {
            location: Location { layer: 3, position: 0 },
            effect: PauliOp::parse("XX").unwrap(),
        };
        assert!(matches!(
            propagate(&c, &PauliFrame::new(2), &[bad]),
            Err(SimError::InvalidLocation(_))
        ));
        let wrong_arity = FaultEvent {
            location: Location { layer: 0, position: 0 },
            effect: PauliOp::parse("X").unwrap(),
        };
        assert!(matches!(
            push_to_end(&c, &[wrong_arity]),
            Err(SimError::FaultArity { .. })
        ));
    }

    #[test]
    fn noiseless_frame_yields_the_syndrome() {
        let ctx = steane_ctx();
        let code = ctx.code();
        for q in 0..7 {
            for p in Pauli1::NONTRIVIAL {
                let e = PauliOp::single(7, q, p);
                let f = propagate(ctx.circuit(), &PauliFrame::with_data(13, &e), &[]).unwrap();
                assert_eq!(f.flip_bits(), code.syndrome(&e).unwrap());
                assert_eq!(f.restrict(0, 7).x_bits(), e.x_bits());
                assert_eq!(f.restrict(0, 7).z_bits(), e.z_bits());
            }
        }
    }

    #[test]
    fn single_fault_downstream_cnot() {
        // X on data qubit before the Z-check CNOTs spreads to the ancilla only
        let ctx = steane_ctx();
        let c = ctx.circuit();
        let (loc, _) = c
            .locations()
            .find(|(l, g)| l.layer == 0 && g.operands == vec![0])
            .unwrap();
        let f = FaultEvent {
            location: loc,
            effect: PauliOp::parse("X").unwrap(),
        };
        let t = push_to_end(c, &[f]).unwrap();
        assert_eq!(t.data_pauli(7), PauliOp::single(7, 0, Pauli1::X));
        assert_eq!(
            t.syndrome_flips,
            ctx.code().syndrome(&PauliOp::single(7, 0, Pauli1::X)).unwrap()
        );
    }

    #[test]
    fn exhaustive_single_faults_agree() {
        let ctx = steane_ctx();
        let r = exhaustive_push_check(ctx.circuit(), 1).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.cases as usize, r.single_faults);
    }

    #[test]
    fn frame_matches_statevector() {
        let ctx = steane_ctx();
        let code = ctx.code();
        let base = ctx.circuit();
        let psi = encode_logical(code, &[Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)])
            .unwrap()
            .normalized();
        let start = psi.tensor(&StateVector::zero(6).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let singles = all_single_faults(base);
        for _ in 0..40 {
            let k = rng.random_range(1..=3);
            let faults: Vec<FaultEvent> = (0..k)
                .map(|_| singles[rng.random_range(0..singles.len())].clone())
                .collect();
            // Pauli layers carry the faults: before measurements, after other gates
            let mut ordered = LayeredCircuit::new(base.quantum_wires());
            for (layer, gates) in base.layers().iter().enumerate() {
                let here: Vec<&FaultEvent> = faults.iter().filter(|f| f.location.layer == layer).collect();
                let pauli_layers = |meas: bool| -> Vec<Vec<Gate>> {
                    let mut per_wire: BTreeMap<usize, Vec<Gate>> = BTreeMap::new();
                    for f in &here {
                        let g = &gates[f.location.position];
                        if g.kind.is_measurement() != meas {
                            continue;
                        }
                        for (i, &w) in g.operands.iter().enumerate() {
                            let p = f.effect.restrict(i, 1);
                            if !p.is_identity() {
                                per_wire
                                    .entry(w)
                                    .or_default()
                                    .push(Gate::new(GateKind::Pauli(p), vec![w]).unwrap());
                            }
                        }
                    }
                    let mut out = Vec::new();
                    while per_wire.values().any(|v| !v.is_empty()) {
                        out.push(per_wire.values_mut().filter_map(|v| v.pop()).collect());
                    }
                    out
                };
                for l in pauli_layers(true) {
                    ordered.push_layer(l).unwrap();
                }
                ordered.push_layer(gates.clone()).unwrap();
                for l in pauli_layers(false) {
                    ordered.push_layer(l).unwrap();
                }
            }
            let run = simulate_circuit(&ordered, &start, &mut rng).unwrap();
            assert!(run.probabilities.iter().all(|&p| p > 1.0 - 1e-9));
            let frame = propagate(base, &PauliFrame::new(13), &faults).unwrap();
            assert_eq!(run.outcomes, frame.flips());
            // data block equals frame·ψ up to phase, ancillas in a basis state
            let data_err = frame.restrict(0, 7);
            let mut expected_data = psi.applied_pauli(&data_err);
            expected_data.normalize();
            let amps = run.state.amplitudes();
            let anc_index = (0..amps.len())
                .max_by(|&a, &b| amps[a].norm_sqr().total_cmp(&amps[b].norm_sqr()))
                .unwrap()
                >> 7;
            let slice: Vec<Complex64> = (0..128).map(|d| amps[d | (anc_index << 7)]).collect();
            let got = StateVector::from_amplitudes(7, slice).unwrap();
            assert!((got.fidelity(&expected_data) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_noise_round() {
        let ctx = steane_ctx();
        let blocks: Vec<BlockInput> = (0..3)
            .map(|id| BlockInput {
                id,
                context: &ctx,
                error: if id == 1 {
                    PauliOp::single(7, 0, Pauli1::X)
                } else {
                    PauliOp::identity(7)
                },
            })
            .collect();
        let r = run_ec_round(&blocks, &NoiseModel::noiseless(), 1, 0, 0).unwrap();
        assert!(r.observed_syndromes[0].is_zero() && r.observed_syndromes[2].is_zero());
        assert_eq!(
            r.observed_syndromes[1],
            ctx.code().syndrome(&PauliOp::single(7, 0, Pauli1::X)).unwrap()
        );
        assert!(r.residual_weights.iter().all(|&w| w == 0));
        assert!(r.logical_failure.iter().all(|f| !f));
    }

    #[test]
    fn block_order_does_not_matter() {
        let ctx = steane_ctx();
        let model = NoiseModel::Depolarizing { delta: 0.05 };
        let inputs: Vec<PauliOp> = (0..3).map(|q| PauliOp::single(7, q, Pauli1::Y)).collect();
        for trial in 0..50 {
            let fwd: Vec<BlockInput> = (0..3)
                .map(|i| BlockInput {
                    id: i as u64,
                    context: &ctx,
                    error: inputs[i].clone(),
                })
                .collect();
            let rev: Vec<BlockInput> = (0..3)
                .rev()
                .map(|i| BlockInput {
                    id: i as u64,
                    context: &ctx,
                    error: inputs[i].clone(),
                })
                .collect();
            let a = run_ec_round(&fwd, &model, 9, trial, 0).unwrap();
            let b = run_ec_round(&rev, &model, 9, trial, 0).unwrap();
            for i in 0..3 {
                assert_eq!(a.residuals[i], b.residuals[2 - i]);
                assert_eq!(a.observed_syndromes[i], b.observed_syndromes[2 - i]);
            }
        }
    }

    #[test]
    fn memory_without_noise_never_fails() {
        let ctx = steane_ctx();
        let s = run_memory_experiment(&ctx, &NoiseModel::noiseless(), 5, 200, 3).unwrap();
        assert_eq!(s.failures, 0);
        assert_eq!(s.residual_histograms.len(), 5);
        assert_eq!(s.residual_histograms[4], vec![200]);
    }

    #[test]
    fn memory_is_reproducible() {
        let ctx = steane_ctx();
        let m = NoiseModel::Depolarizing { delta: 0.01 };
        let a = run_memory_experiment(&ctx, &m, 3, 2000, 17).unwrap();
        let b = run_memory_experiment(&ctx, &m, 3, 2000, 17).unwrap();
        assert_eq!(a, b);
        assert!(a.failures > 0);
    }

    #[test]
    fn one_round_rate_matches_leading_order() {
        let ctx = steane_ctx();
        let lead = leading_order_failure(&ctx).unwrap();
        assert!(lead.failing_faults > 0);
        let delta = 1e-4;
        let trials = 200_000;
        let s = run_memory_experiment(&ctx, &NoiseModel::Depolarizing { delta }, 1, trials, 21).unwrap();
        let predicted = lead.coefficient * delta;
        let sigma = (predicted / trials as f64).sqrt();
        // probability of two or more faults bounds the higher-order terms
        let locations = ctx.circuit().num_locations() as f64;
        let higher = (locations * delta).powi(2) / 2.0;
        let rate = s.failure_rate();
        assert!(
            (rate - predicted).abs() < 4.0 * sigma + higher,
            "rate {rate}, predicted {predicted}"
        );
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 100, 1.96);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.0370).abs() < 1e-3);
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    }

    #[test]
    fn config_parsing() {
        let c = ExperimentConfig::from_toml(
            "code = \"steane\"\ndecoder = \"hybrid\"\ndeltas = [0.001]\nrounds = [10]\ntrials = 100\nseed = 4\n[noise]\nvariant = \"depolarizing\"\ndelta = 0.001\n",
        )
        .unwrap();
        assert_eq!(c.decoder, DecoderKind::Hybrid);
        assert!(ExperimentConfig::from_toml(
            "code = \"steane\"\nrounds = [0]\n[noise]\nvariant = \"meas_flip\"\ndelta = 0.1\n"
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"code":"steane","noise":{"variant":"depolarizing","delta":0.1},"bogus":1}"#
        )
        .is_err());
    }
}
