//! Dense GF(2) vectors and matrices packed into 64-bit words.
//!
//! Everything here is mod-2 arithmetic. Matrices are stored row-major, one
//! packed [`BitVector`] per row, which keeps row operations (the bulk of
//! Gaussian elimination and syndrome computation) to word-wise XORs.

use std::fmt;

use serde::{Deserialize, Serialize};

const WORD: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// Builds a vector from 0/1 entries; any nonzero entry counts as 1.
    pub fn from_bits<T: Copy + Into<u64>>(bits: &[T]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b.into() != 0 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_indices(len: usize, ones: &[usize]) -> Self {
        let mut v = Self::zeros(len);
        for &i in ones {
            v.flip(i);
        }
        v
    }

    /// Low `len` bits of `value`, bit `i` of the integer at index `i`.
    pub fn from_u64(len: usize, value: u64) -> Self {
        assert!(len <= WORD, "from_u64 supports at most 64 bits");
        let mut v = Self::zeros(len);
        if len > 0 {
            let mask = if len == WORD { u64::MAX } else { (1u64 << len) - 1 };
            v.words[0] = value & mask;
        }
        v
    }

    /// Packs the vector into an integer (index `i` becomes bit `i`).
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= WORD, "to_u64 supports at most 64 bits");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Inner product mod 2.
    pub fn dot(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in dot product");
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "length mismatch in xor");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn and(&self, other: &Self) -> Self {
        assert_eq!(self.len, other.len, "length mismatch in and");
        Self {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn or(&self, other: &Self) -> Self {
        assert_eq!(self.len, other.len, "length mismatch in or");
        Self {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
        }
    }

    /// Indices of the nonzero entries, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let tz = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * WORD + tz)
                }
            })
        })
    }

    pub fn first_one(&self) -> Option<usize> {
        self.ones().next()
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    /// Concatenation `self ‖ other`.
    pub fn concat(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.len + other.len);
        for i in self.ones() {
            out.set(i, true);
        }
        for i in other.ones() {
            out.set(self.len + i, true);
        }
        out
    }

    /// Entries `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.len, "slice out of range");
        let mut out = Self::zeros(len);
        for i in self.ones().filter(|&i| i >= start && i < start + len) {
            out.set(i - start, true);
        }
        out
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector(")?;
        for i in 0..self.len {
            write!(f, "{}", self.get(i) as u8)?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", self.get(i) as u8)?;
        }
        Ok(())
    }
}

impl PartialOrd for BitVector {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic order on the entry sequence (index 0 most significant).
impl Ord for BitVector {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len.cmp(&other.len).then_with(|| {
            for i in 0..self.len {
                match (self.get(i), other.get(i)) {
                    (true, false) => return std::cmp::Ordering::Less,
                    (false, true) => return std::cmp::Ordering::Greater,
                    _ => {}
                }
            }
            std::cmp::Ordering::Equal
        })
    }
}

impl Serialize for BitVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_bits().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let bits = Vec::<u8>::deserialize(d)?;
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(serde::de::Error::custom(format!("bit entry {bad} is not 0 or 1")));
        }
        Ok(BitVector::from_bits(&bits))
    }
}

/// A dense matrix over GF(2), rows packed.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    cols: usize,
    rows: Vec<BitVector>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            rows: vec![BitVector::zeros(cols); rows],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from nested 0/1 rows. All rows must have `cols` entries.
    pub fn from_rows<T: Copy + Into<u64>>(cols: usize, rows: &[Vec<T>]) -> Option<Self> {
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Self {
            cols,
            rows: rows.iter().map(|r| BitVector::from_bits(r)).collect(),
        })
    }

    pub fn from_bit_vectors(cols: usize, rows: Vec<BitVector>) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "row length mismatch");
        Self { cols, rows }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.rows[r].set(c, value);
    }

    pub fn row(&self, r: usize) -> &BitVector {
        &self.rows[r]
    }

    pub fn rows(&self) -> &[BitVector] {
        &self.rows
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(BitVector::is_zero)
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.rows.iter().map(BitVector::weight).collect()
    }

    pub fn column_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.cols];
        for row in &self.rows {
            for c in row.ones() {
                w[c] += 1;
            }
        }
        w
    }

    /// Support of column `c` as the list of rows touching it.
    pub fn column_support(&self, c: usize) -> Vec<usize> {
        (0..self.rows.len()).filter(|&r| self.rows[r].get(c)).collect()
    }

    /// `self · v` as a vector with one entry per row.
    pub fn mul_vec(&self, v: &BitVector) -> BitVector {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        let mut out = BitVector::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            if row.dot(v) {
                out.set(i, true);
            }
        }
        out
    }

    /// `selfᵀ · v`, i.e. the XOR of the rows selected by `v`.
    pub fn transpose_mul_vec(&self, v: &BitVector) -> BitVector {
        assert_eq!(v.len(), self.rows.len(), "matrix-vector dimension mismatch");
        let mut out = BitVector::zeros(self.cols);
        for r in v.ones() {
            out.xor_assign(&self.rows[r]);
        }
        out
    }

    /// `self · otherᵀ`.
    pub fn mul_transpose(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "column mismatch in A·Bᵀ");
        let rows = self
            .rows
            .iter()
            .map(|a| {
                let mut out = BitVector::zeros(other.rows.len());
                for (j, b) in other.rows.iter().enumerate() {
                    if a.dot(b) {
                        out.set(j, true);
                    }
                }
                out
            })
            .collect();
        Self {
            cols: other.rows.len(),
            rows,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            for c in row.ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (ra, ca) = (self.num_rows(), self.num_cols());
        let (rb, cb) = (other.num_rows(), other.num_cols());
        let mut out = Self::zeros(ra * rb, ca * cb);
        for i in 0..ra {
            for j in self.rows[i].ones() {
                for k in 0..rb {
                    for l in other.rows[k].ones() {
                        out.set(i * rb + k, j * cb + l, true);
                    }
                }
            }
        }
        out
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.num_rows(), other.num_rows(), "row mismatch in hstack");
        Self {
            cols: self.cols + other.cols,
            rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a.concat(b)).collect(),
        }
    }

    /// Vertical concatenation.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "column mismatch in vstack");
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Self { cols: self.cols, rows }
    }

    pub fn rank(&self) -> usize {
        let mut basis = RowBasis::new(self.cols);
        for row in &self.rows {
            basis.insert(row.clone());
        }
        basis.rank()
    }

    /// Basis of the right null space `{v : self · v = 0}`.
    pub fn kernel(&self) -> Vec<BitVector> {
        let mut rows: Vec<BitVector> = self.rows.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            let Some(p) = (r..rows.len()).find(|&i| rows[i].get(c)) else {
                continue;
            };
            rows.swap(r, p);
            let pivot_row = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && row.get(c) {
                    row.xor_assign(&pivot_row);
                }
            }
            pivots.push(c);
            r += 1;
            if r == rows.len() {
                break;
            }
        }
        let is_pivot: Vec<bool> = {
            let mut v = vec![false; self.cols];
            for &c in &pivots {
                v[c] = true;
            }
            v
        };
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = BitVector::zeros(self.cols);
                v.set(free, true);
                for (i, &pc) in pivots.iter().enumerate() {
                    if rows[i].get(free) {
                        v.set(pc, true);
                    }
                }
                v
            })
            .collect()
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMatrix {}x{} [", self.num_rows(), self.cols)?;
        for row in &self.rows {
            writeln!(f, "  {row}")?;
        }
        write!(f, "]")
    }
}

/// Incrementally built echelon basis of a row space.
///
/// Each stored row remembers which inserted vectors it is a sum of, so a
/// member of the span can be expressed back in terms of the inputs.
#[derive(Clone, Debug)]
pub struct RowBasis {
    len: usize,
    inserted: usize,
    rows: Vec<(usize, BitVector, Vec<usize>)>,
}

impl RowBasis {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            inserted: 0,
            rows: Vec::new(),
        }
    }

    pub fn from_rows<'a>(len: usize, rows: impl IntoIterator<Item = &'a BitVector>) -> Self {
        let mut b = Self::new(len);
        for r in rows {
            b.insert(r.clone());
        }
        b
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Basis vectors in insertion order of the independent ones.
    pub fn vectors(&self) -> impl Iterator<Item = &BitVector> {
        self.rows.iter().map(|(_, v, _)| v)
    }

    fn reduce_tracked(&self, mut v: BitVector) -> (BitVector, Vec<bool>) {
        let mut used = vec![false; self.inserted];
        for (pivot, row, combo) in &self.rows {
            if v.get(*pivot) {
                v.xor_assign(row);
                for &c in combo {
                    used[c] ^= true;
                }
            }
        }
        (v, used)
    }

    /// Remainder of `v` after elimination against the basis.
    pub fn reduce(&self, mut v: BitVector) -> BitVector {
        for (pivot, row, _) in &self.rows {
            if v.get(*pivot) {
                v.xor_assign(row);
            }
        }
        v
    }

    pub fn contains(&self, v: &BitVector) -> bool {
        self.reduce(v.clone()).is_zero()
    }

    /// Inserts `v`; returns whether it enlarged the span. Every call counts as
    /// an inserted vector for [`RowBasis::express`], dependent or not.
    pub fn insert(&mut self, v: BitVector) -> bool {
        assert_eq!(v.len(), self.len, "row length mismatch");
        let id = self.inserted;
        self.inserted += 1;
        let (mut reduced, used) = self.reduce_tracked(v);
        let Some(pivot) = reduced.first_one() else {
            return false;
        };
        let mut combo: Vec<usize> = used.iter().enumerate().filter(|(_, &u)| u).map(|(i, _)| i).collect();
        combo.push(id);
        // keep pivots unique across rows: clear this pivot from earlier rows
        for (_, row, c) in self.rows.iter_mut() {
            if row.get(pivot) {
                row.xor_assign(&reduced);
                let mut set: Vec<bool> = vec![false; self.inserted];
                for &i in c.iter().chain(combo.iter()) {
                    set[i] ^= true;
                }
                *c = set.iter().enumerate().filter(|(_, &u)| u).map(|(i, _)| i).collect();
            }
        }
        reduced.set(pivot, true);
        self.rows.push((pivot, reduced, combo));
        true
    }

    /// Indices of inserted vectors whose sum is `v`, if `v` is in the span.
    pub fn express(&self, v: &BitVector) -> Option<Vec<usize>> {
        let (rem, used) = self.reduce_tracked(v.clone());
        rem.is_zero()
            .then(|| used.iter().enumerate().filter(|(_, &u)| u).map(|(i, _)| i).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hamming() -> BinaryMatrix {
        BinaryMatrix::from_rows(
            7,
            &[
                vec![0u8, 0, 0, 1, 1, 1, 1],
                vec![0, 1, 1, 0, 0, 1, 1],
                vec![1, 0, 1, 0, 1, 0, 1],
            ],
        )
        .unwrap()
    }

    #[test]
    fn hamming_rank_and_kernel() {
        let h = hamming();
        assert_eq!(h.rank(), 3);
        let ker = h.kernel();
        assert_eq!(ker.len(), 4);
        for v in &ker {
            assert!(h.mul_vec(v).is_zero());
        }
        assert_eq!(BinaryMatrix::from_bit_vectors(7, ker).rank(), 4);
    }

    #[test]
    fn self_orthogonal_hamming() {
        let h = hamming();
        assert!(h.mul_transpose(&h).is_zero());
    }

    #[test]
    fn kron_shape() {
        let a = BinaryMatrix::from_rows(2, &[vec![1u8, 1]]).unwrap();
        let k = a.kron(&BinaryMatrix::identity(3));
        assert_eq!((k.num_rows(), k.num_cols()), (3, 6));
        assert!(k.get(2, 2) && k.get(2, 5) && !k.get(2, 1));
    }

    #[test]
    fn ones_iterates_across_words() {
        let v = BitVector::from_indices(130, &[0, 63, 64, 129]);
        assert_eq!(v.ones().collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        assert_eq!(v.weight(), 4);
    }

    #[test]
    fn basis_express_recovers_combination() {
        let h = hamming();
        let basis = RowBasis::from_rows(7, h.rows());
        let target = h.row(0).xor(h.row(2));
        assert_eq!(basis.express(&target), Some(vec![0, 2]));
        assert_eq!(basis.express(&BitVector::from_indices(7, &[0])), None);
    }

    fn arb_matrix() -> impl Strategy<Value = BinaryMatrix> {
        (1usize..8, 1usize..12).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(0u8..2, c), r)
                .prop_map(move |rows| BinaryMatrix::from_rows(c, &rows).unwrap())
        })
    }

    proptest! {
        #[test]
        fn rank_nullity(m in arb_matrix()) {
            let ker = m.kernel();
            prop_assert_eq!(m.rank() + ker.len(), m.num_cols());
            for v in &ker {
                prop_assert!(m.mul_vec(v).is_zero());
            }
            prop_assert_eq!(m.rank(), m.transpose().rank());
        }

        #[test]
        fn express_is_exact(m in arb_matrix(), pick in proptest::collection::vec(any::<bool>(), 8)) {
            let basis = RowBasis::from_rows(m.num_cols(), m.rows());
            let mut v = BitVector::zeros(m.num_cols());
            for (i, row) in m.rows().iter().enumerate() {
                if pick[i] { v.xor_assign(row); }
            }
            let combo = basis.express(&v).expect("member of the row space");
            let mut back = BitVector::zeros(m.num_cols());
            for i in combo { back.xor_assign(m.row(i)); }
            prop_assert_eq!(back, v);
        }
    }
}
