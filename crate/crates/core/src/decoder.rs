//! Pluggable syndrome decoders and exhaustive residual-budget certification.
//!
//! All decoders here are CSS-split: the Z-check part of the syndrome yields an
//! X correction and the X-check part yields a Z correction, independently.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{for_each_combination, CodeError, CssCode};
use crate::gf2::{BinaryMatrix, BitVector};
use crate::pauli::PauliOp;

/// Largest total syndrome length for which a lookup table is built.
pub const MAX_TABLE_SYNDROME_BITS: usize = 24;

/// Default cap on the number of cases visited by [`certify_budgets`].
pub const DEFAULT_CERTIFY_CAP: u64 = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecoderError {
    #[error("lookup table needs {bits} syndrome bits, at most {MAX_TABLE_SYNDROME_BITS} supported")]
    TableTooLarge { bits: usize },
    #[error("syndrome has {got} bits, decoder expects {expected}")]
    SyndromeLength { expected: usize, got: usize },
    #[error("certification would enumerate {cases} cases, cap is {cap}")]
    EnumerationTooLarge { cases: u128, cap: u64 },
    #[error("unknown decoder `{0}`; valid options: lookup, greedy, hybrid")]
    UnknownDecoder(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertifyError {
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Output of a decode call. `flagged` marks a heralded failure: the correction
/// does not reproduce the input syndrome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoding {
    pub correction: PauliOp,
    pub flagged: bool,
}

pub trait Decoder: Send + Sync {
    fn name(&self) -> &str;

    fn code_name(&self) -> &str;

    /// Whether successful outputs always reproduce the input syndrome with
    /// minimum weight.
    fn is_exact(&self) -> bool;

    fn syndrome_len(&self) -> usize;

    fn decode(&self, syndrome: &BitVector) -> Result<Decoding, DecoderError>;
}

fn check_len(expected: usize, s: &BitVector) -> Result<(), DecoderError> {
    if s.len() != expected {
        return Err(DecoderError::SyndromeLength { expected, got: s.len() });
    }
    Ok(())
}

/// Minimum-weight table for one check matrix, indexed by syndrome value.
#[derive(Clone, Debug)]
struct HalfTable {
    checks: BinaryMatrix,
    entries: Vec<Option<BitVector>>,
}

impl HalfTable {
    fn build(checks: &BinaryMatrix) -> Self {
        let n = checks.num_cols();
        let bits = checks.num_rows();
        let mut entries = vec![None; 1usize << bits];
        let achievable = 1usize << checks.rank();
        let mut filled = 0;
        for w in 0..=n {
            for_each_combination(n, w, |support| {
                let v = BitVector::from_indices(n, support);
                let s = checks.mul_vec(&v).to_u64() as usize;
                if entries[s].is_none() {
                    entries[s] = Some(v);
                    filled += 1;
                }
                filled < achievable
            });
            if filled >= achievable {
                break;
            }
        }
        Self {
            checks: checks.clone(),
            entries,
        }
    }

    fn lookup(&self, s: &BitVector) -> Option<&BitVector> {
        self.entries[s.to_u64() as usize].as_ref()
    }

    fn n(&self) -> usize {
        self.checks.num_cols()
    }
}

/// Exact minimum-weight decoder; weight ties go to the lexicographically
/// first support.
#[derive(Clone, Debug)]
pub struct LookupDecoder {
    code_name: String,
    z_checks: usize,
    x_table: HalfTable,
    z_table: HalfTable,
}

impl LookupDecoder {
    pub fn new(code: &CssCode) -> Result<Self, DecoderError> {
        let bits = code.num_checks();
        if bits > MAX_TABLE_SYNDROME_BITS {
            return Err(DecoderError::TableTooLarge { bits });
        }
        Ok(Self {
            code_name: code.name().to_string(),
            z_checks: code.num_z_checks(),
            x_table: HalfTable::build(code.hz()),
            z_table: HalfTable::build(code.hx()),
        })
    }
}

impl Decoder for LookupDecoder {
    fn name(&self) -> &str {
        "lookup"
    }

    fn code_name(&self) -> &str {
        &self.code_name
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn syndrome_len(&self) -> usize {
        self.x_table.checks.num_rows() + self.z_table.checks.num_rows()
    }

    fn decode(&self, syndrome: &BitVector) -> Result<Decoding, DecoderError> {
        check_len(self.syndrome_len(), syndrome)?;
        let n = self.x_table.n();
        let sz = syndrome.slice(0, self.z_checks);
        let sx = syndrome.slice(self.z_checks, syndrome.len() - self.z_checks);
        let mut flagged = false;
        let cx = match self.x_table.lookup(&sz) {
            Some(v) => v.clone(),
            None => {
                flagged = true;
                BitVector::zeros(n)
            }
        };
        let cz = match self.z_table.lookup(&sx) {
            Some(v) => v.clone(),
            None => {
                flagged = true;
                BitVector::zeros(n)
            }
        };
        Ok(Decoding {
            correction: PauliOp::from_parts(cx, cz),
            flagged,
        })
    }
}

/// One candidate flip: a set of qubits and the syndrome bits it toggles.
#[derive(Clone, Debug)]
struct FlipSet {
    qubits: Vec<usize>,
    effect: BitVector,
}

#[derive(Clone, Debug)]
struct GreedyHalf {
    n: usize,
    candidates: Vec<FlipSet>,
}

impl GreedyHalf {
    fn build(checks: &BinaryMatrix) -> Self {
        let n = checks.num_cols();
        let mut seen = std::collections::BTreeSet::new();
        let mut candidates = Vec::new();
        let mut push = |qubits: Vec<usize>| {
            if seen.insert(qubits.clone()) {
                let v = BitVector::from_indices(n, &qubits);
                candidates.push(FlipSet {
                    effect: checks.mul_vec(&v),
                    qubits,
                });
            }
        };
        for q in 0..n {
            push(vec![q]);
        }
        for row in checks.rows() {
            let support: Vec<usize> = row.ones().collect();
            for k in 2..=support.len() {
                for_each_combination(support.len(), k, |idx| {
                    push(idx.iter().map(|&i| support[i]).collect());
                    true
                });
            }
        }
        Self { n, candidates }
    }

    /// Returns the correction and whether the syndrome was fully cleared.
    fn decode(&self, syndrome: &BitVector, max_passes: usize) -> (BitVector, bool, usize) {
        let mut s = syndrome.clone();
        let mut correction = BitVector::zeros(self.n);
        let mut passes = 0;
        while !s.is_zero() && passes < max_passes {
            let weight = s.weight();
            let mut best: Option<(usize, usize, &FlipSet)> = None;
            for cand in &self.candidates {
                let after = s.xor(&cand.effect).weight();
                if after >= weight {
                    continue;
                }
                let gain = weight - after;
                let better = match best {
                    None => true,
                    Some((g, size, _)) => gain > g || (gain == g && cand.qubits.len() < size),
                };
                if better {
                    best = Some((gain, cand.qubits.len(), cand));
                }
            }
            let Some((_, _, cand)) = best else { break };
            s.xor_assign(&cand.effect);
            for &q in &cand.qubits {
                correction.flip(q);
            }
            passes += 1;
        }
        (correction, s.is_zero(), passes)
    }
}

/// Small-set-flip decoder: repeatedly applies the flip set (a singleton, or a
/// subset of one check's support) with the largest syndrome-weight
/// reduction, preferring smaller sets on ties. Stops at zero syndrome, at a
/// local minimum, or after `max_passes` flips; the latter two are flagged.
#[derive(Clone, Debug)]
pub struct GreedyFlipDecoder {
    code_name: String,
    z_checks: usize,
    x_checks: usize,
    max_passes: usize,
    x_half: GreedyHalf,
    z_half: GreedyHalf,
}

impl GreedyFlipDecoder {
    pub fn new(code: &CssCode, max_passes: usize) -> Self {
        Self {
            code_name: code.name().to_string(),
            z_checks: code.num_z_checks(),
            x_checks: code.num_x_checks(),
            max_passes,
            x_half: GreedyHalf::build(code.hz()),
            z_half: GreedyHalf::build(code.hx()),
        }
    }

    /// Decodes and also reports the number of flips used per half.
    pub fn decode_with_passes(&self, syndrome: &BitVector) -> Result<(Decoding, usize), DecoderError> {
        check_len(self.syndrome_len(), syndrome)?;
        let sz = syndrome.slice(0, self.z_checks);
        let sx = syndrome.slice(self.z_checks, self.x_checks);
        let (cx, okx, px) = self.x_half.decode(&sz, self.max_passes);
        let (cz, okz, pz) = self.z_half.decode(&sx, self.max_passes);
        Ok((
            Decoding {
                correction: PauliOp::from_parts(cx, cz),
                flagged: !(okx && okz),
            },
            px.max(pz),
        ))
    }
}

impl Decoder for GreedyFlipDecoder {
    fn name(&self) -> &str {
        "greedy"
    }

    fn code_name(&self) -> &str {
        &self.code_name
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn syndrome_len(&self) -> usize {
        self.z_checks + self.x_checks
    }

    fn decode(&self, syndrome: &BitVector) -> Result<Decoding, DecoderError> {
        self.decode_with_passes(syndrome).map(|(d, _)| d)
    }
}

/// Greedy flipping with a lookup-table fallback whenever greedy is flagged.
#[derive(Clone, Debug)]
pub struct HybridDecoder {
    greedy: GreedyFlipDecoder,
    lookup: LookupDecoder,
}

impl HybridDecoder {
    pub fn new(code: &CssCode, max_passes: usize) -> Result<Self, DecoderError> {
        Ok(Self {
            greedy: GreedyFlipDecoder::new(code, max_passes),
            lookup: LookupDecoder::new(code)?,
        })
    }
}

impl Decoder for HybridDecoder {
    fn name(&self) -> &str {
        "hybrid"
    }

    fn code_name(&self) -> &str {
        self.greedy.code_name()
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn syndrome_len(&self) -> usize {
        self.greedy.syndrome_len()
    }

    fn decode(&self, syndrome: &BitVector) -> Result<Decoding, DecoderError> {
        let d = self.greedy.decode(syndrome)?;
        if d.flagged {
            self.lookup.decode(syndrome)
        } else {
            Ok(d)
        }
    }
}

/// Decoder selection by name, as used in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Lookup,
    Greedy,
    Hybrid,
}

impl FromStr for DecoderKind {
    type Err = DecoderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lookup" => Ok(Self::Lookup),
            "greedy" => Ok(Self::Greedy),
            "hybrid" => Ok(Self::Hybrid),
            other => Err(DecoderError::UnknownDecoder(other.to_string())),
        }
    }
}

impl DecoderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lookup => "lookup",
            Self::Greedy => "greedy",
            Self::Hybrid => "hybrid",
        }
    }

    /// Builds the decoder; greedy variants get `2n` passes.
    pub fn build(self, code: &CssCode) -> Result<Box<dyn Decoder>, DecoderError> {
        let passes = 2 * code.n();
        Ok(match self {
            Self::Lookup => Box::new(LookupDecoder::new(code)?),
            Self::Greedy => Box::new(GreedyFlipDecoder::new(code, passes)),
            Self::Hybrid => Box::new(HybridDecoder::new(code, passes)?),
        })
    }
}

/// `e · decode(syndrome(e) ⊕ e_syn)`, phases dropped.
pub fn single_shot_step(
    code: &CssCode,
    decoder: &dyn Decoder,
    e: &PauliOp,
    e_syn: &BitVector,
) -> Result<PauliOp, DecoderError> {
    let mut observed = code.syndrome_unchecked(e);
    check_len(observed.len(), e_syn)?;
    observed.xor_assign(e_syn);
    let d = decoder.decode(&observed)?;
    Ok(e.mul_unsigned(&d.correction))
}

/// Exhaustive single-shot budget certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetCertificate {
    pub code: String,
    pub decoder: String,
    pub t_data: usize,
    pub t_syn: usize,
    /// Largest residual reduced weight over all enumerated cases.
    pub t_residual: usize,
    /// Some residual has trivial syndrome and nontrivial logical action.
    pub logical_found: bool,
    /// Largest reduced weight left after one further noiseless step.
    pub followup_max_weight: usize,
    /// Some residual becomes a nontrivial logical after a noiseless step.
    pub followup_logical_found: bool,
    /// Number of decode calls that were heralded failures.
    pub heralded: u64,
    pub cases_enumerated: u64,
    pub exhaustive: bool,
}

impl BudgetCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

fn count_up_to(n: usize, t: usize) -> u128 {
    let mut total = 0u128;
    let mut c = 1u128;
    for k in 0..=t.min(n) {
        total += c;
        c = c * (n - k) as u128 / (k + 1) as u128;
    }
    total
}

fn subsets_up_to(n: usize, t: usize) -> Vec<BitVector> {
    let mut out = Vec::new();
    for w in 0..=t.min(n) {
        for_each_combination(n, w, |s| {
            out.push(BitVector::from_indices(n, s));
            true
        });
    }
    out
}

/// Enumerates every input error with `|e_x|, |e_z| ≤ t_data` (which covers
/// every stabilizer coset of reduced weight ≤ `t_data`) and every flip
/// pattern of weight ≤ `t_syn`, recording residual reduced weights.
pub fn certify_budgets(
    code: &CssCode,
    decoder: &dyn Decoder,
    t_data: usize,
    t_syn: usize,
) -> Result<BudgetCertificate, CertifyError> {
    certify_budgets_with_cap(code, decoder, t_data, t_syn, DEFAULT_CERTIFY_CAP)
}

pub fn certify_budgets_with_cap(
    code: &CssCode,
    decoder: &dyn Decoder,
    t_data: usize,
    t_syn: usize,
    cap: u64,
) -> Result<BudgetCertificate, CertifyError> {
    let n = code.n();
    let l = code.num_checks();
    let per_half = count_up_to(n, t_data);
    let cases = per_half * per_half * count_up_to(l, t_syn);
    if cases > cap as u128 {
        return Err(DecoderError::EnumerationTooLarge { cases, cap }.into());
    }
    let halves = subsets_up_to(n, t_data);
    let flips = subsets_up_to(l, t_syn);
    let zero_flip = BitVector::zeros(l);

    let mut cert = BudgetCertificate {
        code: code.name().to_string(),
        decoder: decoder.name().to_string(),
        t_data,
        t_syn,
        t_residual: 0,
        logical_found: false,
        followup_max_weight: 0,
        followup_logical_found: false,
        heralded: 0,
        cases_enumerated: 0,
        exhaustive: true,
    };
    for ex in &halves {
        for ez in &halves {
            let e = PauliOp::from_parts(ex.clone(), ez.clone());
            let base = code.syndrome_unchecked(&e);
            for f in &flips {
                let d = decoder.decode(&base.xor(f))?;
                if d.flagged {
                    cert.heralded += 1;
                }
                let residual = e.mul_unsigned(&d.correction);
                let w = code.reduced_weight(&residual)?;
                cert.t_residual = cert.t_residual.max(w);
                if code.is_nontrivial_logical(&residual) {
                    cert.logical_found = true;
                }
                let after = single_shot_step(code, decoder, &residual, &zero_flip)?;
                cert.followup_max_weight = cert.followup_max_weight.max(code.reduced_weight(&after)?);
                if code.is_nontrivial_logical(&after) {
                    cert.followup_logical_found = true;
                }
                cert.cases_enumerated += 1;
            }
        }
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli1;

    fn x_on(n: usize, qs: &[usize]) -> PauliOp {
        PauliOp::x_type(BitVector::from_indices(n, qs))
    }

    #[test]
    fn lookup_zero_syndrome_is_identity() {
        let code = CssCode::steane();
        let dec = LookupDecoder::new(&code).unwrap();
        let d = dec.decode(&BitVector::zeros(6)).unwrap();
        assert!(d.correction.is_identity());
        assert!(!d.flagged);
    }

    #[test]
    fn lookup_corrects_single_qubit_errors() {
        let code = CssCode::steane();
        let dec = LookupDecoder::new(&code).unwrap();
        let e = x_on(7, &[2]);
        let d = dec.decode(&code.syndrome(&e).unwrap()).unwrap();
        assert_eq!(d.correction, e);
        for q in 0..7 {
            for p in Pauli1::NONTRIVIAL {
                let e = PauliOp::single(7, q, p);
                let r = single_shot_step(&code, &dec, &e, &BitVector::zeros(6)).unwrap();
                assert_eq!(code.reduced_weight(&r).unwrap(), 0);
            }
        }
    }

    #[test]
    fn lookup_reproduces_every_achievable_syndrome() {
        for code in [
            CssCode::steane(),
            CssCode::hgp_repetition(2),
            CssCode::hgp_repetition(3),
        ] {
            let dec = LookupDecoder::new(&code).unwrap();
            let l = code.num_checks();
            for s in 0u64..(1 << l) {
                let s = BitVector::from_u64(l, s);
                let d = dec.decode(&s).unwrap();
                if !d.flagged {
                    assert_eq!(code.syndrome(&d.correction).unwrap(), s);
                }
            }
        }
    }

    #[test]
    fn lookup_weight_two_x_error_leaves_stabilizer_or_logical() {
        let code = CssCode::steane();
        let dec = LookupDecoder::new(&code).unwrap();
        let e = x_on(7, &[0, 1]);
        let d = dec.decode(&code.syndrome(&e).unwrap()).unwrap();
        assert_eq!(d.correction.weight(), 1);
        let r = e.mul_unsigned(&d.correction);
        assert!(code.syndrome(&r).unwrap().is_zero());
        assert!(code.is_nontrivial_logical(&r));
    }

    #[test]
    fn lookup_is_exact_below_half_distance() {
        for code in [CssCode::steane(), CssCode::hgp_repetition(3)] {
            let dec = LookupDecoder::new(&code).unwrap();
            let zero = BitVector::zeros(code.num_checks());
            for q in 0..code.n() {
                for p in Pauli1::NONTRIVIAL {
                    let e = PauliOp::single(code.n(), q, p);
                    let r = single_shot_step(&code, &dec, &e, &zero).unwrap();
                    assert_eq!(code.reduced_weight(&r).unwrap(), 0);
                }
            }
        }
    }

    #[test]
    fn redundant_checks_herald_unachievable_syndromes() {
        // two identical Z-checks: syndrome (1,0) cannot occur without flips
        let hz = BinaryMatrix::from_rows(2, &[vec![1u8, 1], vec![1, 1]]).unwrap();
        let code = CssCode::new(BinaryMatrix::zeros(0, 2), hz).unwrap();
        let dec = LookupDecoder::new(&code).unwrap();
        let d = dec.decode(&BitVector::from_bits(&[1u8, 0])).unwrap();
        assert!(d.flagged);
        assert!(d.correction.is_identity());
    }

    #[test]
    fn lookup_rejects_wrong_length() {
        let dec = LookupDecoder::new(&CssCode::steane()).unwrap();
        assert_eq!(
            dec.decode(&BitVector::zeros(5)).unwrap_err(),
            DecoderError::SyndromeLength { expected: 6, got: 5 }
        );
    }

    #[test]
    fn single_shot_with_one_flip() {
        let code = CssCode::steane();
        let dec = LookupDecoder::new(&code).unwrap();
        let mut flip = BitVector::zeros(6);
        flip.set(0, true);
        let r = single_shot_step(&code, &dec, &PauliOp::identity(7), &flip).unwrap();
        assert_eq!(code.reduced_weight(&r).unwrap(), 1);
        for q in 0..7 {
            for f in 0..6 {
                let mut flip = BitVector::zeros(6);
                flip.set(f, true);
                let r = single_shot_step(&code, &dec, &x_on(7, &[q]), &flip).unwrap();
                assert!(code.reduced_weight(&r).unwrap() <= 2);
                assert!(!code.is_nontrivial_logical(&r));
            }
        }
    }

    #[test]
    fn certificates() {
        let code = CssCode::steane();
        let dec = LookupDecoder::new(&code).unwrap();
        let c = certify_budgets(&code, &dec, 1, 1).unwrap();
        assert_eq!(c.t_residual, 2);
        assert!(!c.logical_found);
        assert_eq!(c.cases_enumerated, 8 * 8 * 7);
        let c0 = certify_budgets(&code, &dec, 0, 0).unwrap();
        assert_eq!((c0.t_residual, c0.cases_enumerated), (0, 1));
        let c3 = certify_budgets(&code, &dec, 3, 0).unwrap();
        assert!(c3.logical_found);
        let json: BudgetCertificate = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(json, c);
        assert!(matches!(
            certify_budgets_with_cap(&code, &dec, 3, 3, 1000),
            Err(CertifyError::Decoder(DecoderError::EnumerationTooLarge { .. }))
        ));
    }

    #[test]
    fn greedy_zero_syndrome() {
        let code = CssCode::hgp_repetition(3);
        let dec = GreedyFlipDecoder::new(&code, 26);
        let (d, passes) = dec.decode_with_passes(&BitVector::zeros(12)).unwrap();
        assert!(d.correction.is_identity());
        assert_eq!(passes, 0);
    }

    #[test]
    fn greedy_matches_lookup_on_single_qubit_errors() {
        let code = CssCode::hgp_repetition(3);
        let greedy = GreedyFlipDecoder::new(&code, 26);
        let lookup = LookupDecoder::new(&code).unwrap();
        for q in 0..13 {
            for p in Pauli1::NONTRIVIAL {
                let e = PauliOp::single(13, q, p);
                let s = code.syndrome(&e).unwrap();
                let (d, passes) = greedy.decode_with_passes(&s).unwrap();
                assert!(!d.flagged);
                assert!(passes <= 1);
                let r = e.mul_unsigned(&d.correction);
                assert_eq!(code.reduced_weight(&r).unwrap(), 0);
                let rl = e.mul_unsigned(&lookup.decode(&s).unwrap().correction);
                assert_eq!(code.reduced_weight(&rl).unwrap(), 0);
            }
        }
    }

    #[test]
    fn greedy_never_increases_syndrome_weight() {
        let code = CssCode::hgp_repetition(3);
        let half = GreedyHalf::build(code.hz());
        for s in 0u64..(1 << 6) {
            let s = BitVector::from_u64(6, s);
            let mut prev = s.weight();
            for passes in 1..=13 {
                let (c, _, _) = half.decode(&s, passes);
                let now = s.xor(&code.hz().mul_vec(&c)).weight();
                assert!(now <= prev);
                prev = now;
            }
        }
    }

    #[test]
    fn greedy_flags_local_minima() {
        // two distant defects in the bulk of a larger surface code
        let code = CssCode::hgp_repetition(6);
        let dec = GreedyFlipDecoder::new(&code, 2 * code.n());
        let l = code.num_checks();
        let mut stuck = None;
        for_each_combination(code.num_z_checks(), 2, |idx| {
            let s = BitVector::from_indices(l, idx);
            let d = dec.decode(&s).unwrap();
            if d.flagged {
                stuck = Some((s, d));
                return false;
            }
            true
        });
        let (s, d) = stuck.expect("some defect pair is a local minimum");
        let left = s.xor(&code.syndrome(&d.correction).unwrap());
        assert!(!left.is_zero());
        // a local minimum: no candidate reduces the remaining weight
        let half = GreedyHalf::build(code.hz());
        let sz = left.slice(0, code.num_z_checks());
        assert!(half
            .candidates
            .iter()
            .all(|c| sz.xor(&c.effect).weight() >= sz.weight()));
    }

    #[test]
    fn hybrid_falls_back_to_lookup() {
        let code = CssCode::hgp_repetition(3);
        let hybrid = HybridDecoder::new(&code, 0).unwrap();
        let e = x_on(13, &[4]);
        let d = hybrid.decode(&code.syndrome(&e).unwrap()).unwrap();
        assert!(!d.flagged);
        assert_eq!(code.reduced_weight(&e.mul_unsigned(&d.correction)).unwrap(), 0);
    }

    #[test]
    fn decoder_names_parse() {
        assert_eq!("hybrid".parse::<DecoderKind>().unwrap(), DecoderKind::Hybrid);
        let err = "bp-osd".parse::<DecoderKind>().unwrap_err();
        assert!(err.to_string().contains("lookup, greedy, hybrid"));
    }

    #[test]
    fn table_size_is_capped() {
        let code = CssCode::hgp_repetition(5);
        assert!(code.num_checks() > MAX_TABLE_SYNDROME_BITS);
        assert!(matches!(
            LookupDecoder::new(&code),
            Err(DecoderError::TableTooLarge { .. })
        ));
    }
}
