//! Circuit noise: stochastic Pauli fault sampling, coherent and adversarial
//! error models, and exact binomial-tail arithmetic for weight truncation.

use num_bigint::BigInt;
use num_traits::{Float, One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{GateKind, LayeredCircuit, Location};
use crate::code::{for_each_combination, CodeError, CssCode};
use crate::decoder::{single_shot_step, Decoder, DecoderError};
use crate::exact_sim::LinearOperatorExpr;
use crate::gf2::BitVector;
use crate::pauli::{Pauli1, PauliOp};

/// Largest number of candidate errors the adversarial search will try.
pub const ADVERSARY_SEARCH_CAP: u64 = 10_000_000;
const MAX_COMPOSITE_DEPTH: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("rate {0} is outside [0, 1]")]
    InvalidRate(f64),
    #[error("rotation angle {0} is not finite")]
    InvalidAngle(f64),
    #[error("{0} noise cannot be sampled as stochastic Pauli faults")]
    NonStochasticModel(&'static str),
    #[error("n·δ must be positive")]
    DegenerateInput,
    #[error("threshold {t} exceeds n = {n}")]
    ThresholdOutOfRange { n: u64, t: u64 },
    #[error("composite models nest deeper than {MAX_COMPOSITE_DEPTH}")]
    TooDeep,
    #[error("adversarial search over {cases} candidates exceeds the cap {ADVERSARY_SEARCH_CAP}")]
    SearchTooLarge { cases: u128 },
    #[error("invalid noise model: {0}")]
    Parse(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
}

/// Circuit-noise model. Serialized with a `variant` tag, for example
/// `{"variant": "depolarizing", "delta": 0.001}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    /// Every location independently suffers a uniformly random nontrivial
    /// Pauli on its operands with probability `delta`; measurements flip.
    Depolarizing { delta: f64 },
    /// Only measurement outcomes flip, each with probability `delta`.
    MeasFlip { delta: f64 },
    /// `exp(iθP)` on every data qubit; exact simulation only.
    CoherentOverrotation { axis: Pauli1, theta: f64 },
    /// Worst-case Pauli of reduced weight at most `budget` per block.
    AdversarialBudget { budget: usize },
    /// Independent superposition of several models.
    Composite { components: Vec<NoiseModel> },
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::Depolarizing { delta: 0.0 }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        self.validate_at(0)
    }

    fn validate_at(&self, depth: usize) -> Result<(), NoiseError> {
        if depth > MAX_COMPOSITE_DEPTH {
            return Err(NoiseError::TooDeep);
        }
        match self {
            Self::Depolarizing { delta } | Self::MeasFlip { delta } => {
                if !(0.0..=1.0).contains(delta) {
                    return Err(NoiseError::InvalidRate(*delta));
                }
            }
            Self::CoherentOverrotation { axis, theta } => {
                if !theta.is_finite() {
                    return Err(NoiseError::InvalidAngle(*theta));
                }
                if *axis == Pauli1::I {
                    return Err(NoiseError::Parse("rotation axis must be X, Y or Z".into()));
                }
            }
            Self::AdversarialBudget { .. } => {}
            Self::Composite { components } => {
                for c in components {
                    c.validate_at(depth + 1)?;
                }
            }
        }
        Ok(())
    }

    pub fn is_stochastic(&self) -> bool {
        match self {
            Self::Depolarizing { .. } | Self::MeasFlip { .. } => true,
            Self::Composite { components } => components.iter().all(Self::is_stochastic),
            _ => false,
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Self::Depolarizing { .. } => "depolarizing",
            Self::MeasFlip { .. } => "meas_flip",
            Self::CoherentOverrotation { .. } => "coherent_overrotation",
            Self::AdversarialBudget { .. } => "adversarial_budget",
            Self::Composite { .. } => "composite",
        }
    }

    /// The stochastic rate, when every stochastic component shares one.
    pub fn rate(&self) -> Option<f64> {
        match self {
            Self::Depolarizing { delta } | Self::MeasFlip { delta } => Some(*delta),
            Self::Composite { components } => {
                let mut rates = components.iter().filter_map(Self::rate);
                let first = rates.next()?;
                rates.all(|r| r == first).then_some(first)
            }
            _ => None,
        }
    }

    /// Copy with every stochastic rate replaced by `delta`.
    pub fn with_delta(&self, delta: f64) -> Self {
        match self {
            Self::Depolarizing { .. } => Self::Depolarizing { delta },
            Self::MeasFlip { .. } => Self::MeasFlip { delta },
            Self::Composite { components } => Self::Composite {
                components: components.iter().map(|c| c.with_delta(delta)).collect(),
            },
            other => other.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, NoiseError> {
        let m: Self = serde_json::from_str(text).map_err(|e| NoiseError::Parse(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn from_toml(text: &str) -> Result<Self, NoiseError> {
        let m: Self = toml::from_str(text).map_err(|e| NoiseError::Parse(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }
}

/// A Pauli fault at one circuit location. For measurements the effect acts
/// just before the measurement; for every other gate, just after it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultEvent {
    pub location: Location,
    /// Pauli on the location's operands, in operand order.
    pub effect: PauliOp,
}

/// Counter-based generator for one (trial, block, round) substream.
pub fn substream_rng(seed: u64, trial: u64, block: u64, round: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, v) in key.chunks_exact_mut(8).zip([seed, trial, block, round]) {
        chunk.copy_from_slice(&v.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Pauli that flips the outcome of a measurement of this kind.
fn outcome_flip(kind: &GateKind) -> Pauli1 {
    if *kind == GateKind::MeasX {
        Pauli1::Z
    } else {
        Pauli1::X
    }
}

const PAULIS: [Pauli1; 4] = [Pauli1::I, Pauli1::X, Pauli1::Y, Pauli1::Z];

fn random_nontrivial(arity: usize, rng: &mut impl Rng) -> PauliOp {
    let k = rng.random_range(1..(1usize << (2 * arity)));
    let labels: Vec<Pauli1> = (0..arity).map(|i| PAULIS[(k >> (2 * i)) & 3]).collect();
    PauliOp::from_labels(&labels)
}

/// Indices `i < len` each kept independently with probability `p`, by
/// geometric skipping.
fn bernoulli_indices(len: usize, p: f64, rng: &mut impl Rng) -> Vec<usize> {
    if p <= 0.0 || len == 0 {
        return Vec::new();
    }
    if p >= 1.0 {
        return (0..len).collect();
    }
    let log_q = (-p).ln_1p();
    let mut out = Vec::new();
    let mut i = 0usize;
    loop {
        let u: f64 = 1.0 - rng.random::<f64>();
        let skip = (u.ln() / log_q).floor();
        if !skip.is_finite() || skip >= (len - i) as f64 {
            break;
        }
        i += skip as usize;
        out.push(i);
        i += 1;
        if i >= len {
            break;
        }
    }
    out
}

fn sample_into(
    circuit: &LayeredCircuit,
    model: &NoiseModel,
    rng: &mut impl Rng,
    out: &mut Vec<FaultEvent>,
) -> Result<(), NoiseError> {
    match model {
        NoiseModel::Depolarizing { delta } => {
            let locs: Vec<_> = circuit.locations().collect();
            for i in bernoulli_indices(locs.len(), *delta, rng) {
                let (location, g) = locs[i];
                let effect = if g.kind.is_measurement() {
                    PauliOp::from_labels(&[outcome_flip(&g.kind)])
                } else {
                    random_nontrivial(g.arity(), rng)
                };
                out.push(FaultEvent { location, effect });
            }
        }
        NoiseModel::MeasFlip { delta } => {
            let meas: Vec<_> = circuit.locations().filter(|(_, g)| g.kind.is_measurement()).collect();
            for i in bernoulli_indices(meas.len(), *delta, rng) {
                let (location, g) = meas[i];
                out.push(FaultEvent {
                    location,
                    effect: PauliOp::from_labels(&[outcome_flip(&g.kind)]),
                });
            }
        }
        NoiseModel::Composite { components } => {
            for c in components {
                sample_into(circuit, c, rng, out)?;
            }
        }
        other => return Err(NoiseError::NonStochasticModel(other.kind_name())),
    }
    Ok(())
}

/// Samples independent Pauli faults for every location of `circuit`.
/// Events are ordered by location within each model component.
pub fn sample_faults(
    circuit: &LayeredCircuit,
    model: &NoiseModel,
    rng: &mut impl Rng,
) -> Result<Vec<FaultEvent>, NoiseError> {
    model.validate()?;
    let mut out = Vec::new();
    sample_into(circuit, model, rng, &mut out)?;
    Ok(out)
}

pub fn sample_faults_seeded(
    circuit: &LayeredCircuit,
    model: &NoiseModel,
    seed: u64,
) -> Result<Vec<FaultEvent>, NoiseError> {
    sample_faults(circuit, model, &mut substream_rng(seed, 0, 0, 0))
}

/// `cos θ · I + i sin θ · P_q` on an `n`-qubit block.
pub fn overrotation_operator(axis: Pauli1, theta: f64, n: usize, qubit: usize) -> LinearOperatorExpr {
    LinearOperatorExpr::coherent_rotation(&PauliOp::single(n, qubit, axis), theta)
}

/// `p = a / 2^k` exactly.
fn dyadic(p: f64) -> (BigInt, u32) {
    let (mantissa, exponent, _) = p.integer_decode();
    if exponent >= 0 {
        (BigInt::from(mantissa) << exponent as usize, 0)
    } else {
        let mut a = BigInt::from(mantissa);
        let mut k = (-exponent) as u32;
        while k > 0 && (&a & BigInt::one()).is_zero() && !a.is_zero() {
            a >>= 1;
            k -= 1;
        }
        (a, k)
    }
}

/// `ln(num / den)` for positive integers of any size.
fn ln_ratio(num: &BigInt, den: &BigInt) -> f64 {
    fn ln_big(x: &BigInt) -> f64 {
        let bits = x.bits();
        let shift = bits.saturating_sub(60);
        let top: BigInt = x >> shift;
        let top: f64 = top.to_string().parse().unwrap_or(f64::NAN);
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
    if num.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_big(num) - ln_big(den)
}

fn binomial_row(n: u64) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigInt::one();
    row.push(c.clone());
    for j in 1..=n {
        c = c * BigInt::from(n - j + 1) / BigInt::from(j);
        row.push(c.clone());
    }
    row
}

/// Exact binomial tail expressed as `ln` of a ratio of integers.
#[derive(Clone, Debug)]
struct ExactTail {
    num: BigInt,
    den: BigInt,
}

impl ExactTail {
    fn ln(&self) -> f64 {
        ln_ratio(&self.num, &self.den)
    }

    fn value(&self) -> f64 {
        self.ln().exp()
    }
}

fn check_tail_args(n: u64, delta: f64, t: u64) -> Result<(), NoiseError> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(NoiseError::InvalidRate(delta));
    }
    if t > n {
        return Err(NoiseError::ThresholdOutOfRange { n, t });
    }
    Ok(())
}

/// `Σ_{j>t} C(n,j) δ^j` with `δ = a/2^k`, over the common denominator `2^{kn}`.
fn raw_tail(n: u64, delta: f64, t: u64) -> ExactTail {
    let (a, k) = dyadic(delta);
    let row = binomial_row(n);
    let mut num = BigInt::zero();
    let mut a_pow = num_traits::pow(a.clone(), t as usize + 1);
    for j in (t + 1)..=n {
        num += (&row[j as usize] * &a_pow) << (k as u64 * (n - j)) as usize;
        a_pow *= &a;
    }
    ExactTail {
        num,
        den: BigInt::one() << (k as u64 * n) as usize,
    }
}

/// `Pr(X > t)` for `X ~ Binomial(n, δ/(1+δ))`, over the common denominator
/// `(2^k + a)^n`.
fn probability_tail(n: u64, delta: f64, t: u64) -> ExactTail {
    let (a, k) = dyadic(delta);
    let scale = BigInt::one() << k as usize;
    let row = binomial_row(n);
    let mut num = BigInt::zero();
    for j in (t + 1)..=n {
        num += &row[j as usize]
            * num_traits::pow(a.clone(), j as usize)
            * num_traits::pow(scale.clone(), (n - j) as usize);
    }
    ExactTail {
        num,
        den: num_traits::pow(scale + a, n as usize),
    }
}

/// `Σ_{j>t} C(n,j) δ^j`, summed exactly.
pub fn binomial_tail(n: u64, delta: f64, t: u64) -> Result<f64, NoiseError> {
    check_tail_args(n, delta, t)?;
    Ok(raw_tail(n, delta, t).value())
}

/// `Pr(X > t)` for `X ~ Binomial(n, δ/(1+δ))`, summed exactly.
pub fn binomial_tail_probability(n: u64, delta: f64, t: u64) -> Result<f64, NoiseError> {
    check_tail_args(n, delta, t)?;
    Ok(probability_tail(n, delta, t).value())
}

/// Natural log of [`binomial_tail_probability`], finite far below `f64` range.
pub fn binomial_tail_probability_ln(n: u64, delta: f64, t: u64) -> Result<f64, NoiseError> {
    check_tail_args(n, delta, t)?;
    Ok(probability_tail(n, delta, t).ln())
}

/// Weight-truncation parameters for `n` locations at rate `δ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationBound {
    pub n: u64,
    pub delta: f64,
    /// Truncation weight `⌈5nδ⌉`.
    pub t: u64,
    /// `exp(−nδ/3)`.
    pub bound: f64,
    /// Integer threshold `⌊5nδ/(1+δ)⌋` of the binomial tail.
    pub tail_threshold: u64,
    /// `ln(e^{nδ} · Pr(X > 5nδ/(1+δ)))`, `X ~ Binomial(n, δ/(1+δ))`.
    pub ln_lhs: f64,
    /// `ln` of the bound, `−nδ/3`.
    pub ln_bound: f64,
    pub certified: bool,
}

impl TruncationBound {
    pub fn lhs(&self) -> f64 {
        self.ln_lhs.exp()
    }
}

/// Truncation weight and tail bound, with the chain
/// `e^{nδ} · Pr(X > 5nδ/(1+δ)) ≤ exp(−nδ/3)` checked by exact summation.
pub fn truncation_bound(n: u64, delta: f64) -> Result<TruncationBound, NoiseError> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(NoiseError::InvalidRate(delta));
    }
    let nd = n as f64 * delta;
    if nd <= 0.0 {
        return Err(NoiseError::DegenerateInput);
    }
    let t = ((5.0 * nd - 1e-9).ceil().max(0.0) as u64).min(n);
    let tail_threshold = ((5.0 * nd / (1.0 + delta) + 1e-12).floor() as u64).min(n);
    let ln_lhs = nd + binomial_tail_probability_ln(n, delta, tail_threshold)?;
    let ln_bound = -nd / 3.0;
    Ok(TruncationBound {
        n,
        delta,
        t,
        bound: ln_bound.exp(),
        tail_threshold,
        ln_lhs,
        ln_bound,
        certified: ln_lhs <= ln_bound,
    })
}

pub const GRID_SIZES: [u64; 5] = [10, 30, 100, 300, 1000];
pub const GRID_RATES: [f64; 4] = [1e-3, 1e-2, 0.05, 0.1];

/// [`truncation_bound`] over the standard size × rate grid.
pub fn certification_grid() -> Result<Vec<TruncationBound>, NoiseError> {
    GRID_SIZES
        .iter()
        .flat_map(|&n| GRID_RATES.iter().map(move |&d| truncation_bound(n, d)))
        .collect()
}

/// Result of the adversarial weight-budget search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdversarialChoice {
    pub error: PauliOp,
    pub residual: PauliOp,
    pub residual_weight: usize,
    pub residual_logical: bool,
    pub cases: u64,
}

fn binomial_count(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// Searches Paulis whose X and Z parts each have weight at most `budget` for
/// the one whose residual after a single-shot step with `e_syn` is worst:
/// logical residuals first, then the largest residual reduced weight.
pub fn adversarial_error(
    code: &CssCode,
    decoder: &dyn Decoder,
    budget: usize,
    e_syn: &BitVector,
) -> Result<AdversarialChoice, NoiseError> {
    let n = code.n();
    let per_side: u128 = (0..=budget.min(n)).map(|w| binomial_count(n, w)).sum();
    let cases = per_side * per_side;
    if cases > ADVERSARY_SEARCH_CAP as u128 {
        return Err(NoiseError::SearchTooLarge { cases });
    }
    let mut sides = Vec::new();
    for w in 0..=budget.min(n) {
        for_each_combination(n, w, |idx| {
            sides.push(BitVector::from_indices(n, idx));
            true
        });
    }
    let mut best: Option<AdversarialChoice> = None;
    let mut count = 0u64;
    for ex in &sides {
        for ez in &sides {
            count += 1;
            let e = PauliOp::from_parts(ex.clone(), ez.clone());
            let residual = single_shot_step(code, decoder, &e, e_syn)?;
            let residual_weight = code.reduced_weight(&residual)?;
            let residual_logical = code.is_nontrivial_logical(&residual);
            let better = best
                .as_ref()
                .is_none_or(|b| (residual_logical, residual_weight) > (b.residual_logical, b.residual_weight));
            if better {
                best = Some(AdversarialChoice {
                    error: e,
                    residual,
                    residual_weight,
                    residual_logical,
                    cases: 0,
                });
            }
        }
    }
    let mut choice = best.expect("the identity is always a candidate");
    choice.cases = count;
    Ok(choice)
}

/// Unencoded-qubit memory failure probability after `rounds` idle steps of
/// single-qubit depolarizing noise at rate `delta`: `¾(1 − (1 − 4δ/3)^T)`.
pub fn unencoded_failure_probability(delta: f64, rounds: u32) -> f64 {
    0.75 * (1.0 - (1.0 - 4.0 * delta / 3.0).powi(rounds as i32))
}
