//! Dense statevector and channel tools for non-Pauli checks: syndrome
//! projection and branching, coherent-error single-shot verification, Naimark
//! factoring of noisy measurements, diamond-norm sandwich bounds, and
//! physical-level gate teleportation.
//!
//! Wire `w` is bit `w` of the amplitude index. Operators on fewer wires than
//! the state act on the lowest wires.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{GateKind, LayeredCircuit};
use crate::code::{CodeError, CssCode, COEFFICIENT_TOLERANCE};
use crate::decoder::{Decoder, DecoderError};
use crate::gf2::BitVector;
use crate::pauli::{Pauli1, PauliOp, Phase};

pub const MAX_STATE_WIRES: usize = 22;
/// Tolerance for state-level equality checks.
pub const STATE_TOLERANCE: f64 = 1e-10;
/// Branches with smaller probability are dropped.
pub const BRANCH_CUTOFF: f64 = 1e-12;
/// Largest channel dimension accepted by [`channel_distance_bounds`].
pub const MAX_CHANNEL_DIM: usize = 4;

const SEED_CODE_STATES: u64 = 0x5eed_c0de;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactSimError {
    #[error("{wires} wires exceed the statevector limit of {MAX_STATE_WIRES}")]
    SizeLimit { wires: usize },
    #[error("operator acts on {got} qubits, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("state has squared norm {norm_sqr}, expected 1")]
    Unnormalized { norm_sqr: f64 },
    #[error("state is not in the codespace (projection keeps {kept} of its weight)")]
    NotInCodespace { kept: f64 },
    #[error("operator reduced weight {weight} is not below d_min/2 (d_min = {d_min:?})")]
    WeightPreconditionViolated { weight: usize, d_min: Option<usize> },
    #[error("not a POVM: {0}")]
    NotAPovm(String),
    #[error("channel dimension {dim} exceeds the supported maximum {MAX_CHANNEL_DIM}")]
    DimensionTooLarge { dim: usize },
    #[error("logical gate acts on {got} logical qubits but the code encodes {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("logical qubit {qubit} out of range for {m} logical qubits")]
    InvalidQubit { qubit: usize, m: usize },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    wires: usize,
    amps: Vec<Complex64>,
}

fn check_wires(wires: usize) -> Result<(), ExactSimError> {
    if wires > MAX_STATE_WIRES {
        return Err(ExactSimError::SizeLimit { wires });
    }
    Ok(())
}

fn masks(p: &PauliOp) -> (usize, usize) {
    (p.x_bits().to_u64() as usize, p.z_bits().to_u64() as usize)
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(wires: usize) -> Result<Self, ExactSimError> {
        check_wires(wires)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << wires];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { wires, amps })
    }

    pub fn from_amplitudes(wires: usize, amps: Vec<Complex64>) -> Result<Self, ExactSimError> {
        check_wires(wires)?;
        if amps.len() != 1 << wires {
            return Err(ExactSimError::LengthMismatch {
                expected: 1 << wires,
                got: amps.len(),
            });
        }
        Ok(Self { wires, amps })
    }

    /// Haar-like random state from complex Gaussian amplitudes.
    pub fn random(wires: usize, rng: &mut impl Rng) -> Result<Self, ExactSimError> {
        check_wires(wires)?;
        let amps = (0..1usize << wires)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let mut s = Self { wires, amps };
        s.normalize();
        Ok(s)
    }

    pub fn wires(&self) -> usize {
        self.wires
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm and returns the previous squared norm.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm_sqr();
        if n > 0.0 {
            let s = 1.0 / n.sqrt();
            for a in &mut self.amps {
                *a *= s;
            }
        }
        n
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn scale(&mut self, c: Complex64) {
        for a in &mut self.amps {
            *a *= c;
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.wires, other.wires, "wire count mismatch");
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Global-phase-insensitive fidelity `|⟨a|b⟩|² / (‖a‖²‖b‖²)`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        let denom = self.norm_sqr() * other.norm_sqr();
        if denom == 0.0 {
            return 0.0;
        }
        self.inner(other).norm_sqr() / denom
    }

    /// `self ⊗ other` with `self` on the low wires.
    pub fn tensor(&self, other: &Self) -> Result<Self, ExactSimError> {
        let wires = self.wires + other.wires;
        check_wires(wires)?;
        let mut amps = Vec::with_capacity(1 << wires);
        for b in &other.amps {
            for a in &self.amps {
                amps.push(a * b);
            }
        }
        Ok(Self { wires, amps })
    }

    fn add_scaled(&mut self, other: &Self, c: Complex64) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += c * b;
        }
    }

    /// `P|ψ⟩` for `P` on the lowest `P.num_qubits()` wires.
    pub fn apply_pauli(&mut self, p: &PauliOp) {
        assert!(p.num_qubits() <= self.wires, "Pauli larger than the register");
        let (xm, zm) = masks(p);
        let phase = p.phase().to_complex();
        let old = std::mem::take(&mut self.amps);
        let mut new = vec![Complex64::new(0.0, 0.0); old.len()];
        for (b, a) in old.into_iter().enumerate() {
            let sign = if (b & zm).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            new[b ^ xm] = a * phase * sign;
        }
        self.amps = new;
    }

    pub fn applied_pauli(&self, p: &PauliOp) -> Self {
        let mut s = self.clone();
        s.apply_pauli(p);
        s
    }

    /// `(1 + (−1)^outcome · P)/2 |ψ⟩` for Hermitian `P`.
    pub fn project_pauli(&mut self, p: &PauliOp, outcome: bool) {
        let moved = self.applied_pauli(p);
        let sign = if outcome { -0.5 } else { 0.5 };
        for a in &mut self.amps {
            *a *= 0.5;
        }
        self.add_scaled(&moved, Complex64::new(sign, 0.0));
    }

    /// `⟨ψ|P|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expectation(&self, p: &PauliOp) -> Complex64 {
        self.inner(&self.applied_pauli(p)) / self.norm_sqr()
    }

    pub fn apply_x(&mut self, w: usize) {
        let bit = 1 << w;
        for b in 0..self.amps.len() {
            if b & bit == 0 {
                self.amps.swap(b, b | bit);
            }
        }
    }

    pub fn apply_h(&mut self, w: usize) {
        let bit = 1 << w;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for b in 0..self.amps.len() {
            if b & bit == 0 {
                let (a0, a1) = (self.amps[b], self.amps[b | bit]);
                self.amps[b] = (a0 + a1) * s;
                self.amps[b | bit] = (a0 - a1) * s;
            }
        }
    }

    pub fn apply_s(&mut self, w: usize) {
        let bit = 1 << w;
        for (b, a) in self.amps.iter_mut().enumerate() {
            if b & bit != 0 {
                *a *= Complex64::new(0.0, 1.0);
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let (c, t) = (1 << control, 1 << target);
        for b in 0..self.amps.len() {
            if b & c != 0 && b & t == 0 {
                self.amps.swap(b, b | t);
            }
        }
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) {
        let m = (1 << a) | (1 << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & m == m {
                *amp = -*amp;
            }
        }
    }

    /// Probability that measuring wire `w` in Z gives 1.
    pub fn prob_one(&self, w: usize) -> f64 {
        let bit = 1 << w;
        let p1: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(b, _)| b & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        p1 / self.norm_sqr()
    }

    /// Projects wire `w` onto Z outcome `one` and renormalizes.
    pub fn collapse(&mut self, w: usize, one: bool) {
        let bit = 1 << w;
        for (b, a) in self.amps.iter_mut().enumerate() {
            if (b & bit != 0) != one {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        self.normalize();
    }
}

/// Result of running a circuit on a statevector with sampled measurements.
#[derive(Clone, Debug)]
pub struct CircuitRun {
    pub state: StateVector,
    pub outcomes: Vec<bool>,
    /// Probability of each sampled outcome.
    pub probabilities: Vec<f64>,
}

fn measure_z(state: &mut StateVector, w: usize, rng: &mut impl Rng) -> (bool, f64) {
    let p1 = state.prob_one(w);
    let one = rng.random::<f64>() < p1;
    state.collapse(w, one);
    (one, if one { p1 } else { 1.0 - p1 })
}

/// Runs `circuit` on `state`, sampling measurement and reset outcomes.
pub fn simulate_circuit(
    circuit: &LayeredCircuit,
    state: &StateVector,
    rng: &mut impl Rng,
) -> Result<CircuitRun, ExactSimError> {
    if state.wires() != circuit.quantum_wires() {
        return Err(ExactSimError::LengthMismatch {
            expected: circuit.quantum_wires(),
            got: state.wires(),
        });
    }
    let mut s = state.clone();
    let mut outcomes = Vec::new();
    let mut probabilities = Vec::new();
    for layer in circuit.layers() {
        for g in layer {
            let ops = &g.operands;
            match &g.kind {
                GateKind::Idle => {}
                GateKind::H => s.apply_h(ops[0]),
                GateKind::S => s.apply_s(ops[0]),
                GateKind::Cnot => s.apply_cnot(ops[0], ops[1]),
                GateKind::Cz => s.apply_cz(ops[0], ops[1]),
                GateKind::Pauli(p) => {
                    let full = p.embed(s.wires(), ops);
                    s.apply_pauli(&full);
                }
                GateKind::PrepZ | GateKind::PrepX => {
                    let (one, _) = measure_z(&mut s, ops[0], rng);
                    if one {
                        s.apply_x(ops[0]);
                    }
                    if g.kind == GateKind::PrepX {
                        s.apply_h(ops[0]);
                    }
                }
                GateKind::MeasZ => {
                    let (one, p) = measure_z(&mut s, ops[0], rng);
                    outcomes.push(one);
                    probabilities.push(p);
                }
                GateKind::MeasX => {
                    s.apply_h(ops[0]);
                    let (one, p) = measure_z(&mut s, ops[0], rng);
                    s.apply_h(ops[0]);
                    outcomes.push(one);
                    probabilities.push(p);
                }
            }
        }
    }
    Ok(CircuitRun {
        state: s,
        outcomes,
        probabilities,
    })
}

/// A linear operator `Σ c_k P_k` over (block ⊗ auxiliary) wires: block qubits
/// are the low indices of every term, auxiliary qubits follow.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperatorExpr {
    aux_qubits: usize,
    block_qubits: usize,
    terms: Vec<(Complex64, PauliOp)>,
}

impl LinearOperatorExpr {
    /// Merges equal Pauli strings (phases folded into coefficients) and drops
    /// coefficients below the pruning threshold.
    pub fn new(aux_qubits: usize, block_qubits: usize, terms: Vec<(Complex64, PauliOp)>) -> Self {
        let total = aux_qubits + block_qubits;
        let mut merged: BTreeMap<(BitVector, BitVector), Complex64> = BTreeMap::new();
        for (c, p) in terms {
            assert_eq!(p.num_qubits(), total, "term acts on the wrong number of qubits");
            let key = (p.x_bits().clone(), p.z_bits().clone());
            *merged.entry(key).or_default() += c * p.phase().to_complex();
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.norm() > COEFFICIENT_TOLERANCE)
            .map(|((x, z), c)| (c, PauliOp::from_parts(x, z)))
            .collect();
        Self {
            aux_qubits,
            block_qubits,
            terms,
        }
    }

    /// `cos θ · I + i sin θ · P` on a block with no auxiliary system.
    pub fn coherent_rotation(p: &PauliOp, theta: f64) -> Self {
        let n = p.num_qubits();
        Self::new(
            0,
            n,
            vec![
                (Complex64::new(theta.cos(), 0.0), PauliOp::identity(n)),
                (Complex64::new(0.0, theta.sin()), p.clone()),
            ],
        )
    }

    pub fn identity(block_qubits: usize) -> Self {
        Self::new(
            0,
            block_qubits,
            vec![(Complex64::new(1.0, 0.0), PauliOp::identity(block_qubits))],
        )
    }

    pub fn terms(&self) -> &[(Complex64, PauliOp)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn aux_qubits(&self) -> usize {
        self.aux_qubits
    }

    pub fn block_qubits(&self) -> usize {
        self.block_qubits
    }

    /// Distinct block Pauli strings carrying a nonzero auxiliary factor.
    pub fn block_components(&self, n: usize) -> Result<BTreeMap<PauliKey, Vec<usize>>, ExactSimError> {
        if n != self.block_qubits {
            return Err(ExactSimError::LengthMismatch {
                expected: self.block_qubits,
                got: n,
            });
        }
        let mut out: BTreeMap<PauliKey, Vec<usize>> = BTreeMap::new();
        for (k, (_, p)) in self.terms.iter().enumerate() {
            out.entry(PauliKey::of(&p.restrict(0, n))).or_default().push(k);
        }
        Ok(out)
    }

    /// `Σ c_k P_k |ψ⟩` with the operator on the lowest wires of the state.
    pub fn apply(&self, state: &StateVector) -> StateVector {
        let mut out = StateVector {
            wires: state.wires,
            amps: vec![Complex64::new(0.0, 0.0); state.amps.len()],
        };
        for (c, p) in &self.terms {
            out.add_scaled(&state.applied_pauli(p), *c);
        }
        out
    }
}

/// Phase-free Pauli string usable as a map key.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliKey {
    x: BitVector,
    z: BitVector,
}

impl PauliKey {
    pub fn of(p: &PauliOp) -> Self {
        Self {
            x: p.x_bits().clone(),
            z: p.z_bits().clone(),
        }
    }

    pub fn x_bits(&self) -> &BitVector {
        &self.x
    }

    pub fn z_bits(&self) -> &BitVector {
        &self.z
    }

    pub fn to_pauli(&self) -> PauliOp {
        PauliOp::from_parts(self.x.clone(), self.z.clone())
    }
}

fn check_block(code: &CssCode, state: &StateVector) -> Result<(), ExactSimError> {
    if state.wires() < code.n() {
        return Err(ExactSimError::LengthMismatch {
            expected: code.n(),
            got: state.wires(),
        });
    }
    Ok(())
}

/// `Π_σ |ψ⟩` with `Π_σ = Π_i (1 + (−1)^{σ_i} M_i)/2` over the generators in
/// syndrome order, acting on the lowest `n` wires.
pub fn project_syndrome(
    code: &CssCode,
    state: &StateVector,
    syndrome: &BitVector,
) -> Result<StateVector, ExactSimError> {
    check_block(code, state)?;
    if syndrome.len() != code.num_checks() {
        return Err(ExactSimError::LengthMismatch {
            expected: code.num_checks(),
            got: syndrome.len(),
        });
    }
    let mut s = state.clone();
    for (i, g) in code.generators().iter().enumerate() {
        s.project_pauli(g, syndrome.get(i));
    }
    Ok(s)
}

#[derive(Clone, Debug)]
pub struct MeasurementBranch {
    pub outcome: BitVector,
    pub probability: f64,
    pub state: StateVector,
}

/// All syndrome outcomes with probability above the cutoff, with normalized
/// post-measurement states, in increasing syndrome order.
pub fn enumerate_branches(code: &CssCode, state: &StateVector) -> Result<Vec<MeasurementBranch>, ExactSimError> {
    check_block(code, state)?;
    let total = state.norm_sqr();
    let gens = code.generators();
    let l = gens.len();
    let mut frontier = vec![(BitVector::zeros(l), state.clone())];
    for (i, g) in gens.iter().enumerate() {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for (sigma, s) in frontier {
            for outcome in [false, true] {
                let mut t = s.clone();
                t.project_pauli(g, outcome);
                if t.norm_sqr() / total > BRANCH_CUTOFF {
                    let mut o = sigma.clone();
                    o.set(i, outcome);
                    next.push((o, t));
                }
            }
        }
        frontier = next;
    }
    let mut branches: Vec<MeasurementBranch> = frontier
        .into_iter()
        .map(|(outcome, mut s)| {
            let p = s.normalize() / total;
            MeasurementBranch {
                outcome,
                probability: p,
                state: s,
            }
        })
        .collect();
    branches.sort_by_key(|b| b.outcome.to_bits());
    Ok(branches)
}

/// Per-branch outcome of [`verify_nonpauli_single_shot`].
#[derive(Clone, Debug, Serialize)]
pub struct NonPauliBranch {
    pub syndrome: BitVector,
    pub recorded: BitVector,
    pub probability: f64,
    /// Probability predicted from the reconstructed auxiliary operator.
    pub predicted_probability: f64,
    /// Fidelity of the branch state with `(A_σ ⊗ P_σ)|ψ⟩`.
    pub collapse_fidelity: f64,
    /// Fidelity of the corrected state with `(A_σ ⊗ R)|ψ⟩`.
    pub corrected_fidelity: f64,
    pub residual: String,
    pub residual_weight: usize,
    pub residual_logical: bool,
    pub heralded: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NonPauliReport {
    pub operator_weight: usize,
    pub branches: Vec<NonPauliBranch>,
    pub total_probability: f64,
    pub min_collapse_fidelity: f64,
    pub min_corrected_fidelity: f64,
    pub max_residual_weight: usize,
}

/// The reconstructed factor of one syndrome sector: on the codespace the
/// sector's part of `E` equals `A_σ ⊗ P_σ`.
#[derive(Clone, Debug)]
pub struct SectorFactor {
    pub representative: PauliOp,
    pub auxiliary: LinearOperatorExpr,
    /// Whether every term of the sector is stabilizer-equivalent to the
    /// representative.
    pub collapses: bool,
}

/// Groups the terms of `e` by block syndrome and folds each group onto one
/// representative block Pauli, using `S|ψ⟩ = |ψ⟩` for stabilizers `S`.
pub fn sector_factors(
    code: &CssCode,
    e: &LinearOperatorExpr,
) -> Result<BTreeMap<Vec<u8>, SectorFactor>, ExactSimError> {
    let n = code.n();
    if e.block_qubits() != n {
        return Err(ExactSimError::LengthMismatch {
            expected: n,
            got: e.block_qubits(),
        });
    }
    let aux = e.aux_qubits();
    let mut grouped: BTreeMap<Vec<u8>, Vec<(Complex64, PauliOp, PauliOp)>> = BTreeMap::new();
    for (c, p) in e.terms() {
        let block = p.restrict(0, n);
        let aux_part = p.restrict(n, aux);
        let sigma = code.syndrome_unchecked(&block).to_bits();
        grouped.entry(sigma).or_default().push((*c, block, aux_part));
    }
    let mut out = BTreeMap::new();
    for (sigma, terms) in grouped {
        let rep = terms[0].1.clone();
        let mut collapses = true;
        let mut aux_terms = Vec::with_capacity(terms.len());
        for (c, block, aux_part) in terms {
            // block = rep · Q with Q = rep† · block
            let q = rep.adjoint().mul(&block);
            let lambda = if code.is_stabilizer(&q) {
                q.phase().to_complex()
            } else {
                collapses = false;
                Complex64::new(1.0, 0.0)
            };
            aux_terms.push((c * lambda, aux_part));
        }
        out.insert(
            sigma,
            SectorFactor {
                representative: rep,
                auxiliary: LinearOperatorExpr::new(0, aux, aux_terms),
                collapses,
            },
        );
    }
    Ok(out)
}

fn codespace_check(code: &CssCode, state: &StateVector) -> Result<(), ExactSimError> {
    let kept = project_syndrome(code, state, &BitVector::zeros(code.num_checks()))?.norm_sqr() / state.norm_sqr();
    if (kept - 1.0).abs() > 1e-9 {
        return Err(ExactSimError::NotInCodespace { kept });
    }
    Ok(())
}

/// Checks single-shot correction of a non-Pauli error `E` on a codeword:
/// each syndrome branch of `E|ψ⟩`, recorded with flips `e_syn` and corrected
/// by `decoder`, must equal a single residual Pauli applied to `|ψ⟩` (with the
/// auxiliary factor of its sector).
pub fn verify_nonpauli_single_shot(
    code: &CssCode,
    decoder: &dyn Decoder,
    state: &StateVector,
    e: &LinearOperatorExpr,
    e_syn: &BitVector,
) -> Result<NonPauliReport, ExactSimError> {
    let n = code.n();
    let weight = code.operator_reduced_weight(e)?;
    let d_min = code.d_min();
    if d_min.is_none_or(|d| 2 * weight >= d) {
        return Err(ExactSimError::WeightPreconditionViolated { weight, d_min });
    }
    if state.wires() != n + e.aux_qubits() {
        return Err(ExactSimError::LengthMismatch {
            expected: n + e.aux_qubits(),
            got: state.wires(),
        });
    }
    codespace_check(code, state)?;
    if e_syn.len() != code.num_checks() {
        return Err(ExactSimError::LengthMismatch {
            expected: code.num_checks(),
            got: e_syn.len(),
        });
    }
    let factors = sector_factors(code, e)?;
    let image = e.apply(state);
    let total = image.norm_sqr();
    let branches = enumerate_branches(code, &image)?;

    let mut out = Vec::with_capacity(branches.len());
    for b in branches {
        let key = b.outcome.to_bits();
        let recorded = b.outcome.xor(e_syn);
        let decoding = decoder.decode(&recorded)?;
        let (collapse_fidelity, predicted_probability, corrected_fidelity, residual) = match factors.get(&key) {
            Some(f) if f.collapses => {
                let rep_full = f.representative.tensor(&PauliOp::identity(e.aux_qubits()));
                let aux_full = LinearOperatorExpr::new(
                    0,
                    n + e.aux_qubits(),
                    f.auxiliary
                        .terms()
                        .iter()
                        .map(|(c, a)| (*c, PauliOp::identity(n).tensor(a)))
                        .collect(),
                );
                let predicted = aux_full.apply(&state.applied_pauli(&rep_full));
                let residual = decoding.correction.mul_unsigned(&f.representative);
                let corrected = b
                    .state
                    .applied_pauli(&decoding.correction.tensor(&PauliOp::identity(e.aux_qubits())));
                let target = aux_full.apply(&state.applied_pauli(&residual.tensor(&PauliOp::identity(e.aux_qubits()))));
                (
                    b.state.fidelity(&predicted),
                    predicted.norm_sqr() / total,
                    corrected.fidelity(&target),
                    residual,
                )
            }
            _ => (0.0, 0.0, 0.0, decoding.correction.clone()),
        };
        out.push(NonPauliBranch {
            syndrome: b.outcome.clone(),
            recorded,
            probability: b.probability,
            predicted_probability,
            collapse_fidelity,
            corrected_fidelity,
            residual_weight: code.reduced_weight(&residual)?,
            residual_logical: code.is_nontrivial_logical(&residual),
            residual: residual.to_string(),
            heralded: decoding.flagged,
        });
    }
    Ok(NonPauliReport {
        operator_weight: weight,
        total_probability: out.iter().map(|b| b.probability).sum(),
        min_collapse_fidelity: out.iter().map(|b| b.collapse_fidelity).fold(1.0, f64::min),
        min_corrected_fidelity: out.iter().map(|b| b.corrected_fidelity).fold(1.0, f64::min),
        max_residual_weight: out.iter().map(|b| b.residual_weight).max().unwrap_or(0),
        branches: out,
    })
}

pub type CMatrix = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Unnormalized Choi matrix `J(T) = Σ |i⟩⟨j| ⊗ T(|i⟩⟨j|)`, input factor first.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    pub d_in: usize,
    pub d_out: usize,
    pub matrix: CMatrix,
}

impl ChoiMatrix {
    pub fn from_map(d_in: usize, d_out: usize, map: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let mut j = CMatrix::zeros(d_in * d_out, d_in * d_out);
        for i in 0..d_in {
            for k in 0..d_in {
                let mut e = CMatrix::zeros(d_in, d_in);
                e[(i, k)] = c(1.0);
                let out = map(&e);
                for a in 0..d_out {
                    for b in 0..d_out {
                        j[(i * d_out + a, k * d_out + b)] = out[(a, b)];
                    }
                }
            }
        }
        Self { d_in, d_out, matrix: j }
    }

    pub fn from_kraus(d_in: usize, kraus: &[CMatrix]) -> Self {
        let d_out = kraus.first().map_or(d_in, |k| k.nrows());
        Self::from_map(d_in, d_out, |rho| {
            let mut out = CMatrix::zeros(d_out, d_out);
            for k in kraus {
                out += k * rho * k.adjoint();
            }
            out
        })
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(
            (self.d_in, self.d_out),
            (other.d_in, other.d_out),
            "Choi shape mismatch"
        );
        Self {
            d_in: self.d_in,
            d_out: self.d_out,
            matrix: &self.matrix - &other.matrix,
        }
    }

    pub fn trace_norm(&self) -> f64 {
        trace_norm(&self.matrix)
    }

    /// Trace-norm distance to another Choi matrix.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).trace_norm()
    }
}

pub fn trace_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Choi matrix of `ρ ↦ UρU† − ρ`.
pub fn unitary_difference(u: &CMatrix) -> ChoiMatrix {
    let d = u.nrows();
    ChoiMatrix::from_map(d, d, |rho| u * rho * u.adjoint() - rho)
}

/// Choi matrix of `ρ ↦ [(1−δ)ρ + δ tr(ρ) I/2] − ρ` on a qubit.
pub fn depolarizing_difference(delta: f64) -> ChoiMatrix {
    ChoiMatrix::from_map(2, 2, |rho| {
        let tr = rho.trace();
        CMatrix::identity(2, 2) * (tr * c(delta / 2.0)) - rho * c(delta)
    })
}

/// `diag(1, e^{iθ})`.
pub fn z_rotation(theta: f64) -> CMatrix {
    let mut u = CMatrix::identity(2, 2);
    u[(1, 1)] = Complex64::from_polar(1.0, theta);
    u
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistanceBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Sandwich bounds on the diamond norm of a Hermiticity-preserving map given
/// by its Choi matrix: the upper bound is `‖J‖₁`; the lower bound is the best
/// output trace norm over `samples` seeded pure inputs on system ⊗ reference,
/// plus the maximally entangled input.
pub fn channel_distance_bounds(delta: &ChoiMatrix, samples: usize, seed: u64) -> Result<DistanceBounds, ExactSimError> {
    let dim = delta.d_in.max(delta.d_out);
    if dim > MAX_CHANNEL_DIM {
        return Err(ExactSimError::DimensionTooLarge { dim });
    }
    let d = delta.d_in;
    let upper = delta.trace_norm();
    let output_norm = |phi: &CMatrix| {
        let lifted = phi.kronecker(&CMatrix::identity(delta.d_out, delta.d_out));
        trace_norm(&(&lifted * &delta.matrix * lifted.adjoint()))
    };
    let max_entangled = CMatrix::identity(d, d) * c(1.0 / (d as f64).sqrt());
    let mut lower = output_norm(&max_entangled);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut phi = CMatrix::from_fn(d, d, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = phi.norm();
        phi /= c(norm);
        lower = lower.max(output_norm(&phi));
    }
    Ok(DistanceBounds {
        lower: lower.min(upper),
        upper,
    })
}

/// Hermitian square root with eigenvalues in `(−1e−12, 0)` clamped to zero.
fn psd_sqrt(p: &CMatrix) -> Result<CMatrix, ExactSimError> {
    let eig = p.clone().symmetric_eigen();
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < -1e-12 {
            return Err(ExactSimError::NotAPovm(format!("negative eigenvalue {v:e}")));
        }
        *v = v.max(0.0).sqrt();
    }
    let v = &eig.eigenvectors;
    let diag = CMatrix::from_diagonal(&vals.map(c));
    Ok(v * diag * v.adjoint())
}

/// Factors the noisy measurement `ρ ↦ Σ_a tr(P_a ρ)|a⟩⟨a|` as an ideal
/// computational-basis measurement after the channel whose Kraus operators
/// are returned, `K_i = Σ_a |a⟩⟨i| √P_a` (from the isometry `Σ_a √P_a ⊗ |a⟩`).
pub fn naimark_factor(povm: &[CMatrix]) -> Result<Vec<CMatrix>, ExactSimError> {
    let Some(first) = povm.first() else {
        return Err(ExactSimError::NotAPovm("no effects".into()));
    };
    let d = first.nrows();
    let k = povm.len();
    let mut sum = CMatrix::zeros(d, d);
    let mut roots = Vec::with_capacity(k);
    for p in povm {
        if p.nrows() != d || p.ncols() != d {
            return Err(ExactSimError::NotAPovm("effects have different shapes".into()));
        }
        if (p - p.adjoint()).norm() > STATE_TOLERANCE {
            return Err(ExactSimError::NotAPovm("effect is not Hermitian".into()));
        }
        roots.push(psd_sqrt(p)?);
        sum += p;
    }
    if (sum - CMatrix::identity(d, d)).norm() > STATE_TOLERANCE {
        return Err(ExactSimError::NotAPovm("effects do not sum to the identity".into()));
    }
    Ok((0..d)
        .map(|i| CMatrix::from_fn(k, d, |a, col| roots[a][(i, col)]))
        .collect())
}

/// Kraus operators `|a⟩⟨a|` of the ideal `k`-outcome measurement.
pub fn ideal_measurement_kraus(k: usize) -> Vec<CMatrix> {
    (0..k)
        .map(|a| {
            let mut m = CMatrix::zeros(k, k);
            m[(a, a)] = c(1.0);
            m
        })
        .collect()
}

/// Kraus operators of `second ∘ first`.
pub fn compose_kraus(first: &[CMatrix], second: &[CMatrix]) -> Vec<CMatrix> {
    second.iter().flat_map(|b| first.iter().map(move |a| b * a)).collect()
}

/// Choi matrix of `ρ ↦ Σ_a tr(P_a ρ)|a⟩⟨a|`.
pub fn noisy_measurement_choi(povm: &[CMatrix]) -> ChoiMatrix {
    let d = povm[0].nrows();
    let k = povm.len();
    ChoiMatrix::from_map(d, k, |rho| {
        let mut out = CMatrix::zeros(k, k);
        for (a, p) in povm.iter().enumerate() {
            out[(a, a)] = (p * rho).trace();
        }
        out
    })
}

/// Random two-outcome qubit POVM `{P, 1 − P}` with `0 ⪯ P ⪯ 1`.
pub fn random_binary_povm(rng: &mut impl Rng) -> [CMatrix; 2] {
    let g = CMatrix::from_fn(2, 2, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let (q, _) = g.qr().unpack();
    let l0: f64 = rng.random();
    let l1: f64 = rng.random();
    let p0 = &q * CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(l0), c(l1)])) * q.adjoint();
    let p1 = CMatrix::identity(2, 2) - &p0;
    [p0, p1]
}

/// A Clifford gate on the logical qubits of a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogicalGate {
    H(usize),
    S(usize),
    X(usize),
    Z(usize),
    Cnot(usize, usize),
}

/// A logical Clifford given as a gate sequence (first gate applied first),
/// characterized by the signed images of the logical `X_i` and `Z_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalClifford {
    m: usize,
    gates: Vec<LogicalGate>,
}

impl LogicalClifford {
    pub fn new(m: usize, gates: Vec<LogicalGate>) -> Result<Self, ExactSimError> {
        for g in &gates {
            let qs: Vec<usize> = match *g {
                LogicalGate::H(q) | LogicalGate::S(q) | LogicalGate::X(q) | LogicalGate::Z(q) => vec![q],
                LogicalGate::Cnot(a, b) => {
                    if m < 2 {
                        return Err(ExactSimError::ArityMismatch { expected: m, got: 2 });
                    }
                    if a == b {
                        return Err(ExactSimError::InvalidQubit { qubit: a, m });
                    }
                    vec![a, b]
                }
            };
            if let Some(&q) = qs.iter().find(|&&q| q >= m) {
                return Err(ExactSimError::InvalidQubit { qubit: q, m });
            }
        }
        Ok(Self { m, gates })
    }

    pub fn identity(m: usize) -> Self {
        Self { m, gates: Vec::new() }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn gates(&self) -> &[LogicalGate] {
        &self.gates
    }

    fn gate_image(m: usize, g: LogicalGate, q: usize, is_x: bool) -> PauliOp {
        let single = |p: Pauli1, w: usize| PauliOp::single(m, w, p);
        let default = single(if is_x { Pauli1::X } else { Pauli1::Z }, q);
        match g {
            LogicalGate::H(a) if a == q => single(if is_x { Pauli1::Z } else { Pauli1::X }, q),
            LogicalGate::S(a) if a == q && is_x => single(Pauli1::Y, q),
            LogicalGate::X(a) if a == q && !is_x => default.with_phase(Phase::MinusOne),
            LogicalGate::Z(a) if a == q && is_x => default.with_phase(Phase::MinusOne),
            LogicalGate::Cnot(c, t) if is_x && c == q => single(Pauli1::X, c).mul(&single(Pauli1::X, t)),
            LogicalGate::Cnot(c, t) if !is_x && t == q => single(Pauli1::Z, c).mul(&single(Pauli1::Z, t)),
            _ => default,
        }
    }

    fn conjugate_by(m: usize, g: LogicalGate, p: &PauliOp) -> PauliOp {
        let mut out = PauliOp::identity(m).with_phase(p.phase());
        for q in p.x_bits().ones() {
            out = out.mul(&Self::gate_image(m, g, q, true));
        }
        for q in p.z_bits().ones() {
            out = out.mul(&Self::gate_image(m, g, q, false));
        }
        out
    }

    /// `U P U†` for a logical Pauli `P`.
    pub fn conjugate(&self, p: &PauliOp) -> PauliOp {
        self.gates
            .iter()
            .fold(p.clone(), |acc, &g| Self::conjugate_by(self.m, g, &acc))
    }

    pub fn image_x(&self, i: usize) -> PauliOp {
        self.conjugate(&PauliOp::single(self.m, i, Pauli1::X))
    }

    pub fn image_z(&self, i: usize) -> PauliOp {
        self.conjugate(&PauliOp::single(self.m, i, Pauli1::Z))
    }

    /// The `2^m × 2^m` unitary, logical qubit `i` on bit `i`.
    pub fn matrix(&self) -> CMatrix {
        let dim = 1 << self.m;
        let mut u = CMatrix::identity(dim, dim);
        for &g in &self.gates {
            let mut gm = CMatrix::zeros(dim, dim);
            for col in 0..dim {
                match g {
                    LogicalGate::H(q) => {
                        let s = std::f64::consts::FRAC_1_SQRT_2;
                        let bit = 1 << q;
                        gm[(col & !bit, col)] += c(s);
                        gm[(col | bit, col)] += c(if col & bit != 0 { -s } else { s });
                    }
                    LogicalGate::S(q) => {
                        gm[(col, col)] = if col & (1 << q) != 0 {
                            Complex64::new(0.0, 1.0)
                        } else {
                            c(1.0)
                        };
                    }
                    LogicalGate::X(q) => gm[(col ^ (1 << q), col)] = c(1.0),
                    LogicalGate::Z(q) => gm[(col, col)] = c(if col & (1 << q) != 0 { -1.0 } else { 1.0 }),
                    LogicalGate::Cnot(ctl, t) => {
                        let row = if col & (1 << ctl) != 0 { col ^ (1 << t) } else { col };
                        gm[(row, col)] = c(1.0);
                    }
                }
            }
            u = gm * u;
        }
        u
    }
}

/// Physical operator for a logical Pauli `i^k X^x Z^z` via the code's
/// logical representatives.
pub fn lift_logical(code: &CssCode, p: &PauliOp) -> PauliOp {
    let n = code.n();
    let mut x = BitVector::zeros(n);
    let mut z = BitVector::zeros(n);
    for i in p.x_bits().ones() {
        x.xor_assign(code.x_logicals()[i].x_bits());
    }
    for i in p.z_bits().ones() {
        z.xor_assign(code.z_logicals()[i].z_bits());
    }
    PauliOp::from_parts(x, z).with_phase(p.phase())
}

fn project_onto(mut s: StateVector, ops: &[PauliOp]) -> StateVector {
    for op in ops {
        s.project_pauli(op, false);
    }
    s.normalized()
}

/// The encoded logical `|0…0⟩` of `code`.
pub fn encode_zero(code: &CssCode) -> Result<StateVector, ExactSimError> {
    let n = code.n();
    check_wires(n)?;
    let mut ops = code.generators();
    ops.extend(code.z_logicals().iter().cloned());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED_CODE_STATES);
    Ok(project_onto(StateVector::random(n, &mut rng)?, &ops))
}

/// `Σ_k a_k X̄^k |0̄⟩` for logical amplitudes `a` of length `2^m`.
pub fn encode_logical(code: &CssCode, amplitudes: &[Complex64]) -> Result<StateVector, ExactSimError> {
    let m = code.m();
    if amplitudes.len() != 1 << m {
        return Err(ExactSimError::LengthMismatch {
            expected: 1 << m,
            got: amplitudes.len(),
        });
    }
    let zero = encode_zero(code)?;
    let mut out = StateVector {
        wires: zero.wires,
        amps: vec![Complex64::new(0.0, 0.0); zero.amps.len()],
    };
    for (k, a) in amplitudes.iter().enumerate() {
        if a.norm() == 0.0 {
            continue;
        }
        let logical = PauliOp::x_type(BitVector::from_u64(m, k as u64));
        out.add_scaled(&zero.applied_pauli(&lift_logical(code, &logical)), *a);
    }
    Ok(out)
}

/// Encoded two-block state `(1 ⊗ U)|Φ⟩^{⊗m}` of logical Bell pairs between
/// block A (wires `0..n`) and block B (wires `n..2n`).
pub fn prepare_ancilla_ideal(code: &CssCode, gate: &LogicalClifford) -> Result<StateVector, ExactSimError> {
    let n = code.n();
    check_wires(2 * n)?;
    if gate.m() != code.m() {
        return Err(ExactSimError::ArityMismatch {
            expected: code.m(),
            got: gate.m(),
        });
    }
    let id = PauliOp::identity(n);
    let mut ops = Vec::new();
    for g in code.generators() {
        ops.push(g.tensor(&id));
        ops.push(id.tensor(&g));
    }
    for i in 0..code.m() {
        ops.push(code.x_logicals()[i].tensor(&lift_logical(code, &gate.image_x(i))));
        ops.push(code.z_logicals()[i].tensor(&lift_logical(code, &gate.image_z(i))));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED_CODE_STATES);
    Ok(project_onto(StateVector::random(2 * n, &mut rng)?, &ops))
}

/// Aggregate over all measurement outcomes with the same logical Bell class.
#[derive(Clone, Debug, Serialize)]
pub struct TeleportClass {
    /// Logical `XX` outcome bits, then logical `ZZ` outcome bits.
    pub logical_outcome: String,
    pub outcomes: usize,
    pub probability: f64,
    pub min_fidelity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TeleportRecord {
    pub first_block_bits: String,
    pub second_block_bits: String,
    pub logical_outcome: String,
}

#[derive(Clone, Debug)]
pub struct TeleportResult {
    /// Corrected output block for the most likely outcome.
    pub output: StateVector,
    pub record: TeleportRecord,
    pub classes: Vec<TeleportClass>,
    pub min_fidelity: f64,
    pub total_probability: f64,
}

fn parity(bits: usize, support: &BitVector) -> bool {
    (bits & support.to_u64() as usize).count_ones() % 2 == 1
}

fn bit_string(bits: usize, len: usize) -> String {
    (0..len).map(|i| if bits >> i & 1 == 1 { '1' } else { '0' }).collect()
}

/// Teleports the data block through the ancilla: transversal CNOT from data
/// onto the first ancilla block, transversal H on data, Z measurement of both,
/// then the Pauli correction `(U X^b Z^a U†)†` on the second ancilla block.
/// Every outcome branch is compared against `expected`.
pub fn teleport_gate(
    code: &CssCode,
    data: &StateVector,
    ancilla: &StateVector,
    gate: &LogicalClifford,
    expected: &StateVector,
) -> Result<TeleportResult, ExactSimError> {
    let n = code.n();
    let m = code.m();
    check_wires(3 * n)?;
    for s in [data, ancilla, expected] {
        let norm_sqr = s.norm_sqr();
        if (norm_sqr - 1.0).abs() > 1e-9 {
            return Err(ExactSimError::Unnormalized { norm_sqr });
        }
    }
    if data.wires() != n || expected.wires() != n || ancilla.wires() != 2 * n {
        return Err(ExactSimError::LengthMismatch {
            expected: n,
            got: data.wires(),
        });
    }
    if gate.m() != m {
        return Err(ExactSimError::ArityMismatch {
            expected: m,
            got: gate.m(),
        });
    }
    let mut joint = data.tensor(ancilla)?;
    for j in 0..n {
        joint.apply_cnot(j, n + j);
    }
    for j in 0..n {
        joint.apply_h(j);
    }

    let block = 1usize << n;
    let mut classes: BTreeMap<(usize, usize), TeleportClass> = BTreeMap::new();
    let mut best: Option<(f64, StateVector, TeleportRecord)> = None;
    let mut min_fidelity = 1.0f64;
    let mut total_probability = 0.0;
    for md in 0..block {
        for ma in 0..block {
            let base = md | (ma << n);
            let amps: Vec<Complex64> = (0..block).map(|a2| joint.amps[base | (a2 << (2 * n))]).collect();
            let mut slice = StateVector { wires: n, amps };
            let p = slice.norm_sqr();
            if p <= BRANCH_CUTOFF {
                continue;
            }
            total_probability += p;
            let mut a = 0usize;
            let mut b = 0usize;
            for i in 0..m {
                if parity(md, code.x_logicals()[i].x_bits()) {
                    a |= 1 << i;
                }
                if parity(ma, code.z_logicals()[i].z_bits()) {
                    b |= 1 << i;
                }
            }
            let frame = PauliOp::from_parts(BitVector::from_u64(m, b as u64), BitVector::from_u64(m, a as u64));
            let correction = lift_logical(code, &gate.conjugate(&frame));
            slice.apply_pauli(&correction);
            slice.normalize();
            let f = slice.fidelity(expected);
            min_fidelity = min_fidelity.min(f);
            let label = format!("{}{}", bit_string(a, m), bit_string(b, m));
            let class = classes.entry((a, b)).or_insert_with(|| TeleportClass {
                logical_outcome: label.clone(),
                outcomes: 0,
                probability: 0.0,
                min_fidelity: 1.0,
            });
            class.outcomes += 1;
            class.probability += p;
            class.min_fidelity = class.min_fidelity.min(f);
            if best.as_ref().is_none_or(|(bp, _, _)| p > *bp + 1e-15) {
                best = Some((
                    p,
                    slice,
                    TeleportRecord {
                        first_block_bits: bit_string(md, n),
                        second_block_bits: bit_string(ma, n),
                        logical_outcome: label,
                    },
                ));
            }
        }
    }
    let (_, output, record) = best.expect("a normalized state has a nonzero branch");
    Ok(TeleportResult {
        output,
        record,
        classes: classes.into_values().collect(),
        min_fidelity,
        total_probability,
    })
}

/// Prepares `|ψ_L⟩` and the ancilla for `gate`, teleports, and compares with
/// the encoded `U|ψ_L⟩`.
pub fn verify_teleportation(
    code: &CssCode,
    logical_amplitudes: &[Complex64],
    gate: &LogicalClifford,
) -> Result<TeleportResult, ExactSimError> {
    let data = encode_logical(code, logical_amplitudes)?.normalized();
    let ancilla = prepare_ancilla_ideal(code, gate)?;
    let target = gate.matrix() * nalgebra::DVector::from_column_slice(logical_amplitudes);
    let expected = encode_logical(code, target.as_slice())?.normalized();
    teleport_gate(code, &data, &ancilla, gate, &expected)
}
