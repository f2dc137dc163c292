//! CSS / QLDPC codes: construction, logical operators, syndromes and
//! stabilizer-reduced weights.
//!
//! Syndrome layout is fixed crate-wide: the Z-check bits (`hz · e_x`) come
//! first, followed by the X-check bits (`hx · e_z`). Generator lists, syndrome
//! circuits and decoders all follow this order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_sim::LinearOperatorExpr;
use crate::gf2::{BinaryMatrix, BitVector, RowBasis};
use crate::pauli::{Pauli1, PauliOp};

/// Default cap on the stabilizer-group size enumerated by reduced-weight
/// computations.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 20;

/// Largest code for which `d_min` is computed by exhaustive search.
pub const EXACT_DISTANCE_MAX_N: usize = 30;

/// Coefficients below this magnitude are treated as zero.
pub const COEFFICIENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("hx and hz disagree on the number of qubits ({hx} vs {hz})")]
    DimensionMismatch { hx: usize, hz: usize },
    #[error("hx·hzᵀ ≠ 0: X-check {x_check} overlaps Z-check {z_check} in odd weight")]
    CommutationViolation { x_check: usize, z_check: usize },
    #[error("Pauli acts on {got} qubits, code has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("stabilizer group of size 2^{log2_size} exceeds the enumeration cap {cap}")]
    EnumerationTooLarge { log2_size: usize, cap: u64 },
    #[error("operator has no coefficient above {COEFFICIENT_TOLERANCE}")]
    ZeroOperator,
    #[error("invalid code definition: {0}")]
    InvalidDefinition(String),
    #[error("unknown code `{0}` (bundled codes: steane, hgp-rep2, hgp-rep3)")]
    UnknownCode(String),
}

/// Maximum stabilizer weight `r` and qubit degree `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LdpcProfile {
    pub r: usize,
    pub s: usize,
}

/// A CSS code given by parity-check matrices `hx` (X-type checks) and `hz`
/// (Z-type checks) with `hx · hzᵀ = 0`.
#[derive(Clone, Debug)]
pub struct CssCode {
    name: String,
    n: usize,
    m: usize,
    hx: BinaryMatrix,
    hz: BinaryMatrix,
    x_stabilizers: Vec<PauliOp>,
    z_stabilizers: Vec<PauliOp>,
    x_logicals: Vec<PauliOp>,
    z_logicals: Vec<PauliOp>,
    d_min: Option<usize>,
    d_min_exact: bool,
    x_stab_basis: Vec<BitVector>,
    z_stab_basis: Vec<BitVector>,
}

impl CssCode {
    /// Builds a CSS code, validating orthogonality and computing logicals.
    pub fn new(hx: BinaryMatrix, hz: BinaryMatrix) -> Result<Self, CodeError> {
        Self::with_name("css", hx, hz, None)
    }

    /// Like [`CssCode::new`] with a name and an optional declared distance,
    /// used only when the code is too large for exhaustive search.
    pub fn with_name(
        name: &str,
        hx: BinaryMatrix,
        hz: BinaryMatrix,
        declared_d_min: Option<usize>,
    ) -> Result<Self, CodeError> {
        if hx.num_cols() != hz.num_cols() {
            return Err(CodeError::DimensionMismatch {
                hx: hx.num_cols(),
                hz: hz.num_cols(),
            });
        }
        let n = hx.num_cols();
        let overlap = hx.mul_transpose(&hz);
        for (i, row) in overlap.rows().iter().enumerate() {
            if let Some(j) = row.first_one() {
                return Err(CodeError::CommutationViolation { x_check: i, z_check: j });
            }
        }

        let x_span = RowBasis::from_rows(n, hx.rows());
        let z_span = RowBasis::from_rows(n, hz.rows());
        let m = n - x_span.rank() - z_span.rank();

        let mut x_logicals = logical_candidates(&hz, &x_span);
        let mut z_logicals = logical_candidates(&hx, &z_span);
        debug_assert_eq!(x_logicals.len(), m);
        debug_assert_eq!(z_logicals.len(), m);
        pair_logicals(&mut x_logicals, &mut z_logicals);

        let x_stab_basis = x_span.vectors().cloned().collect();
        let z_stab_basis = z_span.vectors().cloned().collect();

        let mut code = Self {
            name: name.to_string(),
            n,
            m,
            x_stabilizers: hx.rows().iter().cloned().map(PauliOp::x_type).collect(),
            z_stabilizers: hz.rows().iter().cloned().map(PauliOp::z_type).collect(),
            x_logicals: x_logicals.into_iter().map(PauliOp::x_type).collect(),
            z_logicals: z_logicals.into_iter().map(PauliOp::z_type).collect(),
            hx,
            hz,
            d_min: None,
            d_min_exact: false,
            x_stab_basis,
            z_stab_basis,
        };
        if m > 0 && n <= EXACT_DISTANCE_MAX_N {
            code.d_min = Some(code.exhaustive_distance());
            code.d_min_exact = true;
        } else if m > 0 {
            code.d_min = declared_d_min;
        }
        Ok(code)
    }

    /// The [[7,1,3]] Steane code (Hamming check matrix for both types).
    pub fn steane() -> Self {
        let h = hamming_7_4();
        Self::with_name("steane", h.clone(), h, None).expect("Steane code is valid")
    }

    /// Hypergraph product of two length-`k` repetition codes (`k−1` checks each):
    /// `k = 2` gives [[5,1,2]], `k = 3` the [[13,1,3]] surface code.
    pub fn hgp_repetition(k: usize) -> Self {
        let h = repetition_checks(k);
        let mut code = hypergraph_product(&h, &h).expect("repetition matrices are nonempty");
        code.name = format!("hgp-rep{k}");
        code
    }

    /// Looks up a bundled code by name.
    pub fn bundled(name: &str) -> Result<Self, CodeError> {
        match name {
            "steane" => Ok(Self::steane()),
            "hgp-rep2" | "hgp5" => Ok(Self::hgp_repetition(2)),
            "hgp-rep3" | "hgp13" | "surface13" => Ok(Self::hgp_repetition(3)),
            other => Err(CodeError::UnknownCode(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: &str) {
        self.name = name.to_string();
    }

    /// Number of physical qubits.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of logical qubits.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn hx(&self) -> &BinaryMatrix {
        &self.hx
    }

    pub fn hz(&self) -> &BinaryMatrix {
        &self.hz
    }

    pub fn x_stabilizers(&self) -> &[PauliOp] {
        &self.x_stabilizers
    }

    pub fn z_stabilizers(&self) -> &[PauliOp] {
        &self.z_stabilizers
    }

    pub fn x_logicals(&self) -> &[PauliOp] {
        &self.x_logicals
    }

    pub fn z_logicals(&self) -> &[PauliOp] {
        &self.z_logicals
    }

    pub fn d_min(&self) -> Option<usize> {
        self.d_min
    }

    pub fn d_min_is_exact(&self) -> bool {
        self.d_min_exact
    }

    /// Number of Z-type checks (the first syndrome bits).
    pub fn num_z_checks(&self) -> usize {
        self.hz.num_rows()
    }

    pub fn num_x_checks(&self) -> usize {
        self.hx.num_rows()
    }

    /// Total number of declared generators `l` (may exceed `n − m`).
    pub fn num_checks(&self) -> usize {
        self.hz.num_rows() + self.hx.num_rows()
    }

    /// Generators in syndrome order: Z-checks, then X-checks.
    pub fn generators(&self) -> Vec<PauliOp> {
        self.z_stabilizers.iter().chain(&self.x_stabilizers).cloned().collect()
    }

    pub fn stabilizer_group_log2(&self) -> usize {
        self.x_stab_basis.len() + self.z_stab_basis.len()
    }

    pub fn ldpc_profile(&self) -> LdpcProfile {
        ldpc_profile(self)
    }

    fn check_len(&self, p: &PauliOp) -> Result<(), CodeError> {
        if p.num_qubits() != self.n {
            return Err(CodeError::LengthMismatch {
                expected: self.n,
                got: p.num_qubits(),
            });
        }
        Ok(())
    }

    /// `(hz · e_x ; hx · e_z)`.
    pub fn syndrome(&self, p: &PauliOp) -> Result<BitVector, CodeError> {
        self.check_len(p)?;
        Ok(self.syndrome_unchecked(p))
    }

    pub(crate) fn syndrome_unchecked(&self, p: &PauliOp) -> BitVector {
        self.hz.mul_vec(p.x_bits()).concat(&self.hx.mul_vec(p.z_bits()))
    }

    /// Splits a full syndrome into its (Z-check, X-check) parts.
    pub fn split_syndrome(&self, s: &BitVector) -> (BitVector, BitVector) {
        let lz = self.num_z_checks();
        (s.slice(0, lz), s.slice(lz, self.num_x_checks()))
    }

    /// Whether `p` lies in the stabilizer group up to phase.
    pub fn is_stabilizer(&self, p: &PauliOp) -> bool {
        RowBasis::from_rows(self.n, &self.x_stab_basis).contains(p.x_bits())
            && RowBasis::from_rows(self.n, &self.z_stab_basis).contains(p.z_bits())
    }

    /// Whether `p` commutes with every stabilizer but is not itself one.
    pub fn is_nontrivial_logical(&self, p: &PauliOp) -> bool {
        self.syndrome_unchecked(p).is_zero() && !self.acts_trivially_on_logicals(p)
    }

    /// Whether `p` commutes with every logical representative.
    pub fn acts_trivially_on_logicals(&self, p: &PauliOp) -> bool {
        self.x_logicals
            .iter()
            .chain(&self.z_logicals)
            .all(|l| l.commutes_with(p))
    }

    /// Bits of the logical action of a zero-syndrome `p`: entry `i` is the
    /// anticommutation with `Z̄_i` (X-part) and entry `m + i` with `X̄_i`.
    pub fn logical_action(&self, p: &PauliOp) -> BitVector {
        let mut out = BitVector::zeros(2 * self.m);
        for i in 0..self.m {
            if !p.commutes_with(&self.z_logicals[i]) {
                out.set(i, true);
            }
            if !p.commutes_with(&self.x_logicals[i]) {
                out.set(self.m + i, true);
            }
        }
        out
    }

    /// Stabilizer-reduced weight `max(|e_x|_red, |e_z|_red)` with the default cap.
    pub fn reduced_weight(&self, p: &PauliOp) -> Result<usize, CodeError> {
        self.reduced_weight_with_cap(p, DEFAULT_ENUMERATION_CAP)
    }

    pub fn reduced_weight_with_cap(&self, p: &PauliOp, cap: u64) -> Result<usize, CodeError> {
        self.check_len(p)?;
        self.check_cap(cap)?;
        Ok(self.reduced_weight_x(p.x_bits()).max(self.reduced_weight_z(p.z_bits())))
    }

    fn check_cap(&self, cap: u64) -> Result<(), CodeError> {
        let log2_size = self.stabilizer_group_log2();
        if log2_size >= 64 || (1u64 << log2_size) > cap {
            return Err(CodeError::EnumerationTooLarge { log2_size, cap });
        }
        Ok(())
    }

    /// Minimum weight of `e_x` over its coset of the X-stabilizer space.
    pub fn reduced_weight_x(&self, e_x: &BitVector) -> usize {
        coset_min_weight(e_x, &self.x_stab_basis)
    }

    /// Minimum weight of `e_z` over its coset of the Z-stabilizer space.
    pub fn reduced_weight_z(&self, e_z: &BitVector) -> usize {
        coset_min_weight(e_z, &self.z_stab_basis)
    }

    /// Reduced weight of a linear operator on (auxiliary ⊗ block): the maximum
    /// reduced weight over block Paulis carrying a nonzero auxiliary factor.
    pub fn operator_reduced_weight(&self, e: &LinearOperatorExpr) -> Result<usize, CodeError> {
        let blocks = e.block_components(self.n).map_err(|_| CodeError::LengthMismatch {
            expected: self.n,
            got: e.block_qubits(),
        })?;
        if blocks.is_empty() {
            return Err(CodeError::ZeroOperator);
        }
        self.check_cap(DEFAULT_ENUMERATION_CAP)?;
        let mut worst = 0;
        for block in blocks.keys() {
            worst = worst.max(
                self.reduced_weight_x(block.x_bits())
                    .max(self.reduced_weight_z(block.z_bits())),
            );
        }
        Ok(worst)
    }

    fn exhaustive_distance(&self) -> usize {
        let dx = min_weight_logical(&self.hz, &self.z_logicals);
        let dz = min_weight_logical(&self.hx, &self.x_logicals);
        dx.min(dz)
    }

    pub fn to_definition(&self) -> CodeDefinition {
        CodeDefinition {
            name: self.name.clone(),
            n: self.n,
            hx: self.hx.rows().iter().map(BitVector::to_bits).collect(),
            hz: self.hz.rows().iter().map(BitVector::to_bits).collect(),
            d_min: self.d_min,
        }
    }
}

/// Kernel of `checks` reduced modulo the span of the opposite-type stabilizers.
fn logical_candidates(checks: &BinaryMatrix, stab_span: &RowBasis) -> Vec<BitVector> {
    let mut span = stab_span.clone();
    checks.kernel().into_iter().filter(|v| span.insert(v.clone())).collect()
}

/// Symplectic Gram–Schmidt so that `x̄_i · z̄_j = δ_ij`.
fn pair_logicals(xs: &mut [BitVector], zs: &mut [BitVector]) {
    let m = xs.len();
    for i in 0..m {
        let j = (i..m)
            .find(|&j| xs[i].dot(&zs[j]))
            .expect("logical operators come in anticommuting pairs");
        zs.swap(i, j);
        for k in i + 1..m {
            if xs[k].dot(&zs[i]) {
                let xi = xs[i].clone();
                xs[k].xor_assign(&xi);
            }
            if xs[i].dot(&zs[k]) {
                let zi = zs[i].clone();
                zs[k].xor_assign(&zi);
            }
        }
    }
}

/// Smallest weight of `v` with `checks · v = 0` anticommuting with some logical
/// in `partners` (i.e. outside the stabilizer span).
fn min_weight_logical(checks: &BinaryMatrix, partners: &[PauliOp]) -> usize {
    let n = checks.num_cols();
    let partner_bits: Vec<&BitVector> = partners.iter().map(|p| p.z_bits_or_x()).collect();
    for w in 1..=n {
        let mut found = false;
        for_each_combination(n, w, |support| {
            let v = BitVector::from_indices(n, support);
            if checks.mul_vec(&v).is_zero() && partner_bits.iter().any(|p| p.dot(&v)) {
                found = true;
                return false;
            }
            true
        });
        if found {
            return w;
        }
    }
    unreachable!("a code with m > 0 has a nontrivial logical")
}

impl PauliOp {
    /// The nonzero half of a pure X- or Z-type operator.
    fn z_bits_or_x(&self) -> &BitVector {
        if self.z_bits().is_zero() {
            self.x_bits()
        } else {
            self.z_bits()
        }
    }
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order until it
/// returns `false`. Returns whether enumeration ran to completion.
pub fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    if k > n {
        return true;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !f(&idx) {
            return false;
        }
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Gray-code walk over the span of `basis`, tracking the minimum weight of
/// `v + s`.
fn coset_min_weight(v: &BitVector, basis: &[BitVector]) -> usize {
    let mut cur = v.clone();
    let mut best = cur.weight();
    let total: u64 = 1u64 << basis.len();
    for i in 1..total {
        let bit = i.trailing_zeros() as usize;
        cur.xor_assign(&basis[bit]);
        best = best.min(cur.weight());
        if best == 0 {
            break;
        }
    }
    best
}

/// Standard hypergraph product: `hx = [h1 ⊗ I | I ⊗ h2ᵀ]`, `hz = [I ⊗ h2 | h1ᵀ ⊗ I]`.
pub fn hypergraph_product(h1: &BinaryMatrix, h2: &BinaryMatrix) -> Result<CssCode, CodeError> {
    if h1.num_rows() == 0 || h2.num_rows() == 0 || h1.num_cols() == 0 || h2.num_cols() == 0 {
        return Err(CodeError::InvalidDefinition(
            "hypergraph product needs nonempty check matrices".into(),
        ));
    }
    let (r1, n1) = (h1.num_rows(), h1.num_cols());
    let (r2, n2) = (h2.num_rows(), h2.num_cols());
    let hx = h1
        .kron(&BinaryMatrix::identity(n2))
        .hstack(&BinaryMatrix::identity(r1).kron(&h2.transpose()));
    let hz = BinaryMatrix::identity(n1)
        .kron(h2)
        .hstack(&h1.transpose().kron(&BinaryMatrix::identity(r2)));
    CssCode::with_name("hgp", hx, hz, None)
}

/// `r` = max check weight, `s` = max number of checks (of either type) per qubit.
pub fn ldpc_profile(code: &CssCode) -> LdpcProfile {
    let r = code
        .hx
        .row_weights()
        .into_iter()
        .chain(code.hz.row_weights())
        .max()
        .unwrap_or(0);
    let s = code
        .hx
        .column_weights()
        .iter()
        .zip(code.hz.column_weights())
        .map(|(a, b)| a + b)
        .max()
        .unwrap_or(0);
    LdpcProfile { r, s }
}

/// Rows `{0001111, 0110011, 1010101}`: column `j` is the binary expansion of `j + 1`.
pub fn hamming_7_4() -> BinaryMatrix {
    BinaryMatrix::from_rows(
        7,
        &[
            vec![0u8, 0, 0, 1, 1, 1, 1],
            vec![0, 1, 1, 0, 0, 1, 1],
            vec![1, 0, 1, 0, 1, 0, 1],
        ],
    )
    .expect("fixed shape")
}

/// `(k−1) × k` check matrix of the length-`k` repetition code.
pub fn repetition_checks(k: usize) -> BinaryMatrix {
    assert!(k >= 2, "repetition code needs k ≥ 2");
    let mut h = BinaryMatrix::zeros(k - 1, k);
    for i in 0..k - 1 {
        h.set(i, i, true);
        h.set(i, i + 1, true);
    }
    h
}

/// Largest `n` accepted from a code definition file.
pub const MAX_DEFINITION_QUBITS: usize = 4096;

/// On-disk code description: `{name, n, hx, hz, d_min?}` with 0/1 rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeDefinition {
    pub name: String,
    pub n: usize,
    pub hx: Vec<Vec<u8>>,
    pub hz: Vec<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_min: Option<usize>,
}

impl CodeDefinition {
    pub fn from_json(text: &str) -> Result<Self, CodeError> {
        let def: Self = serde_json::from_str(text).map_err(|e| CodeError::InvalidDefinition(e.to_string()))?;
        def.validate()?;
        Ok(def)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn validate(&self) -> Result<(), CodeError> {
        if self.n > MAX_DEFINITION_QUBITS {
            return Err(CodeError::InvalidDefinition(format!(
                "n = {} exceeds the supported maximum {MAX_DEFINITION_QUBITS}",
                self.n
            )));
        }
        for (label, rows) in [("hx", &self.hx), ("hz", &self.hz)] {
            if rows.len() > MAX_DEFINITION_QUBITS {
                return Err(CodeError::InvalidDefinition(format!("{label} has too many rows")));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != self.n {
                    return Err(CodeError::InvalidDefinition(format!(
                        "{label} row {i} has {} entries, expected n = {}",
                        row.len(),
                        self.n
                    )));
                }
                if let Some(bad) = row.iter().find(|&&b| b > 1) {
                    return Err(CodeError::InvalidDefinition(format!(
                        "{label} row {i} contains {bad}; entries must be 0 or 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<CssCode, CodeError> {
        self.validate()?;
        let hx = BinaryMatrix::from_rows(self.n, &self.hx).expect("validated");
        let hz = BinaryMatrix::from_rows(self.n, &self.hz).expect("validated");
        CssCode::with_name(&self.name, hx, hz, self.d_min)
    }
}

/// Summary printed by `code-info`.
#[derive(Clone, Debug, Serialize)]
pub struct CodeSummary {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub num_x_checks: usize,
    pub num_z_checks: usize,
    pub rank_hx: usize,
    pub rank_hz: usize,
    pub d_min: Option<usize>,
    pub d_min_exact: bool,
    pub r: usize,
    pub s: usize,
    pub x_logicals: Vec<String>,
    pub z_logicals: Vec<String>,
}

impl CodeSummary {
    pub fn of(code: &CssCode) -> Self {
        let profile = code.ldpc_profile();
        let fmt_logical = |p: &PauliOp| {
            let mut labels = Vec::with_capacity(code.n());
            for q in 0..code.n() {
                labels.push(match p.label(q) {
                    Pauli1::I => 'I',
                    Pauli1::X => 'X',
                    Pauli1::Y => 'Y',
                    Pauli1::Z => 'Z',
                });
            }
            labels.into_iter().collect::<String>()
        };
        Self {
            name: code.name().to_string(),
            n: code.n(),
            m: code.m(),
            num_x_checks: code.num_x_checks(),
            num_z_checks: code.num_z_checks(),
            rank_hx: code.hx().rank(),
            rank_hz: code.hz().rank(),
            d_min: code.d_min(),
            d_min_exact: code.d_min_is_exact(),
            r: profile.r,
            s: profile.s,
            x_logicals: code.x_logicals().iter().map(fmt_logical).collect(),
            z_logicals: code.z_logicals().iter().map(fmt_logical).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn x_on(n: usize, qs: &[usize]) -> PauliOp {
        PauliOp::x_type(BitVector::from_indices(n, qs))
    }

    /// Independent GF(2) rank by brute force over all row subsets.
    fn brute_rank(m: &BinaryMatrix) -> usize {
        let r = m.num_rows();
        let mut span = std::collections::HashSet::new();
        for mask in 0u32..(1 << r) {
            let mut v = BitVector::zeros(m.num_cols());
            for i in 0..r {
                if mask >> i & 1 == 1 {
                    v.xor_assign(m.row(i));
                }
            }
            span.insert(v);
        }
        span.len().trailing_zeros() as usize
    }

    #[test]
    fn steane_parameters() {
        let code = CssCode::steane();
        assert!(code.hx().mul_transpose(code.hz()).is_zero());
        let h = hamming_7_4();
        assert_eq!(7 - 2 * brute_rank(&h), 1);
        assert_eq!((code.n(), code.m(), code.d_min()), (7, 1, Some(3)));
        assert!(code.d_min_is_exact());
    }

    #[test]
    fn trivial_code_has_all_logicals() {
        let empty = BinaryMatrix::zeros(0, 3);
        let code = CssCode::new(empty.clone(), empty).unwrap();
        assert_eq!(code.m(), 3);
        assert!(code.generators().is_empty());
        assert_eq!(code.ldpc_profile(), LdpcProfile { r: 0, s: 0 });
        assert_eq!(code.d_min(), Some(1));
    }

    #[test]
    fn odd_overlap_is_rejected() {
        let hx = BinaryMatrix::from_rows(3, &[vec![1u8, 1, 0]]).unwrap();
        let hz = BinaryMatrix::from_rows(3, &[vec![0u8, 1, 1]]).unwrap();
        assert_eq!(
            CssCode::new(hx, hz).unwrap_err(),
            CodeError::CommutationViolation { x_check: 0, z_check: 0 }
        );
    }

    #[test]
    fn column_mismatch_is_rejected() {
        let err = CssCode::new(BinaryMatrix::zeros(1, 3), BinaryMatrix::zeros(1, 4)).unwrap_err();
        assert_eq!(err, CodeError::DimensionMismatch { hx: 3, hz: 4 });
    }

    #[test]
    fn hgp_of_length_two_repetition() {
        let code = CssCode::hgp_repetition(2);
        // n = n1·n2 + r1·r2 = 4 + 1
        assert_eq!((code.n(), code.m()), (5, 1));
        let hx_rank = brute_rank(code.hx());
        let hz_rank = brute_rank(code.hz());
        assert_eq!(code.n() - hx_rank - hz_rank, 1);
    }

    #[test]
    fn hgp_of_identity_has_no_logicals() {
        let code = hypergraph_product(&BinaryMatrix::identity(3), &BinaryMatrix::identity(3)).unwrap();
        assert_eq!(code.m(), 0);
        assert_eq!(code.d_min(), None);
    }

    #[test]
    fn surface_13_parameters() {
        let code = CssCode::hgp_repetition(3);
        assert_eq!((code.n(), code.m()), (13, 1));
        // brute-force minimum logical weight over all 2^13 X-type vectors
        let mut best = usize::MAX;
        for mask in 1u64..(1 << 13) {
            let v = BitVector::from_u64(13, mask);
            let p = PauliOp::x_type(v.clone());
            if code.syndrome(&p).unwrap().is_zero() && !code.acts_trivially_on_logicals(&p) {
                best = best.min(v.weight());
            }
        }
        assert_eq!(best, 3);
        assert_eq!(code.d_min(), Some(3));
        let profile = code.ldpc_profile();
        assert_eq!(profile.r, 4);
        assert!(profile.s <= 4);
    }

    #[test]
    fn steane_profile_counts_both_check_types() {
        // qubit 7 (column 0b111) sits in all three X-checks and all three Z-checks
        assert_eq!(CssCode::steane().ldpc_profile(), LdpcProfile { r: 4, s: 6 });
    }

    #[test]
    fn steane_syndromes() {
        let code = CssCode::steane();
        assert!(code.syndrome(&PauliOp::identity(7)).unwrap().is_zero());
        let s = code.syndrome(&x_on(7, &[6])).unwrap();
        assert_eq!(s.to_bits(), vec![1, 1, 1, 0, 0, 0]);
        for g in code.generators() {
            assert!(code.syndrome(&g).unwrap().is_zero());
        }
        assert_eq!(
            code.syndrome(&PauliOp::identity(5)).unwrap_err(),
            CodeError::LengthMismatch { expected: 7, got: 5 }
        );
    }

    #[test]
    fn steane_reduced_weights() {
        let code = CssCode::steane();
        assert_eq!(code.reduced_weight(&x_on(7, &[0])).unwrap(), 1);
        for g in code.generators() {
            assert_eq!(g.weight(), 4);
            assert_eq!(code.reduced_weight(&g).unwrap(), 0);
        }
        // a weight-3 logical: X on qubits 1,2,3 (columns 001, 010, 011 sum to 0)
        let logical = x_on(7, &[0, 1, 2]);
        assert!(code.is_nontrivial_logical(&logical));
        assert_eq!(code.reduced_weight(&logical).unwrap(), 3);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let code = CssCode::steane();
        let err = code.reduced_weight_with_cap(&PauliOp::identity(7), 32).unwrap_err();
        assert_eq!(err, CodeError::EnumerationTooLarge { log2_size: 6, cap: 32 });
    }

    #[test]
    fn logical_pairs_are_symplectic() {
        for code in [
            CssCode::steane(),
            CssCode::hgp_repetition(2),
            CssCode::hgp_repetition(3),
        ] {
            for (i, xl) in code.x_logicals().iter().enumerate() {
                for (j, zl) in code.z_logicals().iter().enumerate() {
                    assert_eq!(xl.commutes_with(zl), i != j);
                }
                for g in code.generators() {
                    assert!(xl.commutes_with(&g));
                }
            }
        }
    }

    #[test]
    fn operator_reduced_weight_examples() {
        let code = CssCode::steane();
        let theta: f64 = 0.4;
        let e = LinearOperatorExpr::new(
            0,
            7,
            vec![
                (Complex64::new(theta.cos(), 0.0), PauliOp::identity(7)),
                (Complex64::new(0.0, theta.sin()), x_on(7, &[0])),
            ],
        );
        assert_eq!(code.operator_reduced_weight(&e).unwrap(), 1);
        let id = LinearOperatorExpr::new(0, 7, vec![(Complex64::new(1.0, 0.0), PauliOp::identity(7))]);
        assert_eq!(code.operator_reduced_weight(&id).unwrap(), 0);
        let gens = code.generators();
        let stab_sum = LinearOperatorExpr::new(
            0,
            7,
            vec![
                (Complex64::new(1.0, 0.0), gens[0].clone()),
                (Complex64::new(1.0, 0.0), gens[1].clone()),
            ],
        );
        assert_eq!(code.operator_reduced_weight(&stab_sum).unwrap(), 0);
        let zero = LinearOperatorExpr::new(
            0,
            7,
            vec![
                (Complex64::new(1.0, 0.0), x_on(7, &[0])),
                (Complex64::new(-1.0, 0.0), x_on(7, &[0])),
            ],
        );
        assert_eq!(
            code.operator_reduced_weight(&zero).unwrap_err(),
            CodeError::ZeroOperator
        );
    }

    #[test]
    fn definition_round_trip_and_validation() {
        let def = CssCode::steane().to_definition();
        let parsed = CodeDefinition::from_json(&def.to_json()).unwrap();
        assert_eq!(parsed, def);
        assert_eq!(parsed.build().unwrap().m(), 1);

        let bad = r#"{"name":"x","n":3,"hx":[[1,0]],"hz":[]}"#;
        assert!(matches!(
            CodeDefinition::from_json(bad),
            Err(CodeError::InvalidDefinition(_))
        ));
        let bad_bit = r#"{"name":"x","n":2,"hx":[[1,2]],"hz":[]}"#;
        assert!(matches!(
            CodeDefinition::from_json(bad_bit),
            Err(CodeError::InvalidDefinition(_))
        ));
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, |c| {
            seen.push(c.to_vec());
            true
        });
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
    }
}
