//! n-qubit Pauli operators in symplectic form with exact phase tracking.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::gf2::BitVector;

/// Global phase `i^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Phase {
    #[default]
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl std::ops::Mul for Phase {
    type Output = Phase;

    // Powers of i add.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, other: Phase) -> Phase {
        Phase::from_power(self.power() + other.power())
    }
}

impl Phase {
    pub fn from_power(k: u8) -> Self {
        match k % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn power(self) -> u8 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn conj(self) -> Phase {
        Phase::from_power(4 - self.power())
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            Phase::PlusOne => Complex64::new(1.0, 0.0),
            Phase::PlusI => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }
}

/// Single-qubit Pauli label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli1 {
    I,
    X,
    Y,
    Z,
}

impl Pauli1 {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli1::I => (false, false),
            Pauli1::X => (true, false),
            Pauli1::Y => (true, true),
            Pauli1::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli1::I,
            (true, false) => Pauli1::X,
            (true, true) => Pauli1::Y,
            (false, true) => Pauli1::Z,
        }
    }

    pub const NONTRIVIAL: [Pauli1; 3] = [Pauli1::X, Pauli1::Y, Pauli1::Z];
}

/// The operator `i^phase · X^x Z^z` on `n` qubits.
///
/// The operator ordering is X-part first: the single-qubit factor with both
/// bits set is `XZ = -iY`, so a Hermitian `Y` on one qubit carries phase `+i`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliOp {
    x: BitVector,
    z: BitVector,
    phase: Phase,
}

impl PauliOp {
    pub fn identity(n: usize) -> Self {
        Self {
            x: BitVector::zeros(n),
            z: BitVector::zeros(n),
            phase: Phase::PlusOne,
        }
    }

    /// `X^x Z^z` with phase +1.
    pub fn from_parts(x: BitVector, z: BitVector) -> Self {
        assert_eq!(x.len(), z.len(), "x/z length mismatch");
        Self {
            x,
            z,
            phase: Phase::PlusOne,
        }
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn x_type(x: BitVector) -> Self {
        let n = x.len();
        Self::from_parts(x, BitVector::zeros(n))
    }

    pub fn z_type(z: BitVector) -> Self {
        let n = z.len();
        Self::from_parts(BitVector::zeros(n), z)
    }

    /// Hermitian single-qubit Pauli `p` on qubit `q`.
    pub fn single(n: usize, q: usize, p: Pauli1) -> Self {
        let mut op = Self::identity(n);
        op.set_qubit(q, p);
        op
    }

    /// Hermitian tensor product of the given labels (Y factors get phase +i each).
    pub fn from_labels(labels: &[Pauli1]) -> Self {
        let mut op = Self::identity(labels.len());
        for (q, &p) in labels.iter().enumerate() {
            op.set_qubit(q, p);
        }
        op
    }

    /// Parses strings like `"XIZY"` into a Hermitian Pauli.
    pub fn parse(s: &str) -> Option<Self> {
        let (phase, body) = [
            ("+i", Phase::PlusI),
            ("-i", Phase::MinusI),
            ("+", Phase::PlusOne),
            ("-", Phase::MinusOne),
        ]
        .into_iter()
        .find_map(|(prefix, ph)| s.strip_prefix(prefix).map(|rest| (ph, rest)))
        .unwrap_or((Phase::PlusOne, s));
        let mut x = Vec::with_capacity(body.len());
        let mut z = Vec::with_capacity(body.len());
        let mut ys = 0u8;
        for c in body.chars() {
            let (xb, zb) = match c {
                'I' | '_' => (false, false),
                'X' => (true, false),
                'Z' => (false, true),
                // Hermitian Y = i·XZ
                'Y' => {
                    ys = ys.wrapping_add(1);
                    (true, true)
                }
                'W' => (true, true),
                _ => return None,
            };
            x.push(xb);
            z.push(zb);
        }
        let extra = Phase::from_power(ys % 4);
        Some(Self::from_parts(BitVector::from_bits(&x), BitVector::from_bits(&z)).with_phase(phase * extra))
    }

    /// Overwrites qubit `q` with the Hermitian label `p`, keeping the operator
    /// Hermitian if it was.
    pub fn set_qubit(&mut self, q: usize, p: Pauli1) {
        let old_y = self.x.get(q) && self.z.get(q);
        let (x, z) = p.bits();
        self.x.set(q, x);
        self.z.set(q, z);
        let new_y = x && z;
        match (old_y, new_y) {
            (false, true) => self.phase = self.phase * Phase::PlusI,
            (true, false) => self.phase = self.phase * Phase::MinusI,
            _ => {}
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn x_bits(&self) -> &BitVector {
        &self.x
    }

    pub fn z_bits(&self) -> &BitVector {
        &self.z
    }

    pub fn x_bits_mut(&mut self) -> &mut BitVector {
        &mut self.x
    }

    pub fn z_bits_mut(&mut self) -> &mut BitVector {
        &mut self.z
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn label(&self, q: usize) -> Pauli1 {
        Pauli1::from_bits(self.x.get(q), self.z.get(q))
    }

    pub fn support(&self) -> BitVector {
        self.x.or(&self.z)
    }

    pub fn weight(&self) -> usize {
        self.support().weight()
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// Same Pauli string, phase ignored.
    pub fn same_string(&self, other: &Self) -> bool {
        self.x == other.x && self.z == other.z
    }

    /// Phase relative to the Hermitian operator with the same string, i.e. the
    /// `c` with `self = c · P` for Hermitian `P`.
    pub fn hermitian_phase(&self) -> Phase {
        let ys = (self.x.and(&self.z).weight() % 4) as u8;
        // X^x Z^z = (-i)^{#Y} · (Hermitian string)
        self.phase * Phase::from_power(3 * ys)
    }

    /// Whether the two operators commute (symplectic form vanishes).
    pub fn commutes_with(&self, other: &Self) -> bool {
        !(self.x.dot(&other.z) ^ self.z.dot(&other.x))
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.num_qubits(), other.num_qubits(), "qubit count mismatch");
        // X^a Z^b X^c Z^d = (-1)^{b·c} X^{a+c} Z^{b+d}
        let sign = if self.z.dot(&other.x) { 2 } else { 0 };
        Self {
            x: self.x.xor(&other.x),
            z: self.z.xor(&other.z),
            phase: Phase::from_power(self.phase.power() + other.phase.power() + sign),
        }
    }

    /// Product ignoring phases, the frame-level composition.
    pub fn mul_unsigned(&self, other: &Self) -> Self {
        Self::from_parts(self.x.xor(&other.x), self.z.xor(&other.z))
    }

    pub fn mul_assign_unsigned(&mut self, other: &Self) {
        self.x.xor_assign(&other.x);
        self.z.xor_assign(&other.z);
    }

    /// Hermitian conjugate.
    pub fn adjoint(&self) -> Self {
        // (X^x Z^z)† = Z^z X^x = (-1)^{x·z} X^x Z^z
        let sign = if self.x.dot(&self.z) { 2 } else { 0 };
        Self {
            x: self.x.clone(),
            z: self.z.clone(),
            phase: Phase::from_power(self.phase.conj().power() + sign),
        }
    }

    /// The operator restricted to `start..start + len`, phase dropped.
    pub fn restrict(&self, start: usize, len: usize) -> Self {
        Self::from_parts(self.x.slice(start, len), self.z.slice(start, len))
    }

    /// Tensor product `self ⊗ other` (self on the low qubit indices).
    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            x: self.x.concat(&other.x),
            z: self.z.concat(&other.z),
            phase: self.phase * other.phase,
        }
    }

    /// Places this operator on `wires` inside an `n`-qubit register.
    pub fn embed(&self, n: usize, wires: &[usize]) -> Self {
        assert_eq!(wires.len(), self.num_qubits(), "embedding arity mismatch");
        let mut out = Self::identity(n).with_phase(self.phase);
        for (i, &w) in wires.iter().enumerate() {
            out.x.set(w, self.x.get(i));
            out.z.set(w, self.z.get(i));
        }
        out
    }
}

impl fmt::Debug for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            Phase::PlusOne => "+",
            Phase::PlusI => "+i",
            Phase::MinusOne => "-",
            Phase::MinusI => "-i",
        };
        write!(f, "{prefix}")?;
        for q in 0..self.num_qubits() {
            let c = match (self.x.get(q), self.z.get(q)) {
                (false, false) => 'I',
                (true, false) => 'X',
                (true, true) => 'W', // X·Z product, distinct from Hermitian Y
                (false, true) => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}
