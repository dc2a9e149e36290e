//! Dense GF(2) vectors and matrices packed into `u64` words, plus index
//! permutations and Gaussian elimination to systematic form.

use std::fmt;

use crate::error::{invalid, Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// A fixed-length vector over GF(2).
///
/// Bits past `len` in the last storage word are always zero, so word-wise
/// equality and hashing agree with bit-wise equality.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitWord {
    len: usize,
    words: Vec<u64>,
}

impl BitWord {
    pub fn zeros(len: usize) -> Self {
        BitWord {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut w = Self::zeros(len);
        for i in 0..len {
            if f(i) {
                w.set(i, true);
            }
        }
        w
    }

    /// Builds a word from `0`/`1` values. Any other value is rejected.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(invalid(format!("bit {pos} has value {}", bits[pos])));
        }
        Ok(Self::from_fn(bits.len(), |i| bits[i] == 1))
    }

    /// Parses a string of `0` and `1` characters.
    pub fn parse(s: &str) -> Result<Self> {
        let bits: Vec<u8> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(invalid(format!("'{other}' is not a bit"))),
            })
            .collect::<Result<_>>()?;
        Self::from_bits(&bits)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    /// In-place addition over GF(2).
    pub fn xor_assign(&mut self, other: &BitWord) {
        assert_eq!(self.len, other.len, "xor of words with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitWord) -> BitWord {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of the set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD + tz)
            })
        })
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Packed storage. Callers must keep the bits past `len` zero.
    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    /// Copies `len` bits starting at `start` into a new word.
    pub fn slice(&self, start: usize, len: usize) -> BitWord {
        assert!(start + len <= self.len);
        BitWord::from_fn(len, |i| self.get(start + i))
    }

    /// Concatenation `[self, tail]`.
    pub fn concat(&self, tail: &BitWord) -> BitWord {
        BitWord::from_fn(self.len + tail.len, |i| {
            if i < self.len {
                self.get(i)
            } else {
                tail.get(i - self.len)
            }
        })
    }
}

impl fmt::Debug for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitWord({self})")
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A dense row-major matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        BitMatrix {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if f(r, c) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    pub fn from_rows(rows: &[BitWord]) -> Result<Self> {
        let cols = rows.first().map_or(0, BitWord::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(invalid(format!(
                "row {bad} has length {} but row 0 has {cols}",
                rows[bad].len()
            )));
        }
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            m.row_words_mut(i).copy_from_slice(r.words());
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols);
        let idx = r * self.stride + c / WORD;
        let mask = 1u64 << (c % WORD);
        if value {
            self.data[idx] |= mask;
        } else {
            self.data[idx] &= !mask;
        }
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row(&self, r: usize) -> BitWord {
        BitWord {
            len: self.cols,
            words: self.row_words(r).to_vec(),
        }
    }

    /// `row[dst] ^= row[src]`.
    pub fn xor_row_into(&mut self, src: usize, dst: usize) {
        assert_ne!(src, dst);
        let s = self.stride;
        let (a, b) = if src < dst {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&lo[src * s..(src + 1) * s], &mut hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&hi[..s] as &[u64], &mut lo[dst * s..(dst + 1) * s])
        };
        for (d, x) in b.iter_mut().zip(a) {
            *d ^= x;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.data.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    /// Column-permuted copy: `result[:, j] = self[:, perm[j]]`.
    pub fn permute_columns(&self, perm: &IndexPermutation) -> Result<BitMatrix> {
        if perm.len() != self.cols {
            return Err(invalid(format!(
                "permutation of length {} applied to {} columns",
                perm.len(),
                self.cols
            )));
        }
        let mut out = BitMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let src = self.row_words(r);
            let dst = &mut out.data[r * self.stride..(r + 1) * self.stride];
            for (j, &from) in perm.as_slice().iter().enumerate() {
                if (src[from / WORD] >> (from % WORD)) & 1 == 1 {
                    dst[j / WORD] |= 1u64 << (j % WORD);
                }
            }
        }
        Ok(out)
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, rhs: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != rhs.rows {
            return Err(invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = BitMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let prod = mat_vec_mul(&self.row(r), rhs)?;
            out.row_words_mut(r).copy_from_slice(prod.words());
        }
        Ok(out)
    }

    /// Copy of columns `start..start + len`.
    pub fn column_block(&self, start: usize, len: usize) -> BitMatrix {
        assert!(start + len <= self.cols);
        BitMatrix::from_fn(self.rows, len, |r, c| self.get(r, start + c))
    }

    /// Rows selected by `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(indices.len(), self.cols);
        for (i, &r) in indices.iter().enumerate() {
            out.row_words_mut(i).copy_from_slice(self.row_words(r));
        }
        out
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// `v · M` over GF(2): XOR of the rows of `M` selected by the set bits of `v`.
pub fn mat_vec_mul(v: &BitWord, m: &BitMatrix) -> Result<BitWord> {
    if v.len() != m.rows() {
        return Err(invalid(format!(
            "vector of length {} times {}x{} matrix",
            v.len(),
            m.rows(),
            m.cols()
        )));
    }
    let mut out = BitWord::zeros(m.cols());
    for r in v.ones() {
        for (o, w) in out.words.iter_mut().zip(m.row_words(r)) {
            *o ^= w;
        }
    }
    Ok(out)
}

/// A bijection on `0..len`. Applying it to a sequence gathers:
/// `apply(v)[i] = v[map[i]]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexPermutation {
    map: Vec<usize>,
}

impl IndexPermutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &p in &map {
            if p >= map.len() || seen[p] {
                return Err(invalid(format!("{map:?} is not a permutation")));
            }
            seen[p] = true;
        }
        Ok(IndexPermutation { map })
    }

    pub fn identity(len: usize) -> Self {
        IndexPermutation {
            map: (0..len).collect(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.map.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &p) in self.map.iter().enumerate() {
            inv[p] = i;
        }
        IndexPermutation { map: inv }
    }

    /// The permutation equivalent to applying `self` first and `then` second.
    pub fn then(&self, then: &IndexPermutation) -> Result<Self> {
        if self.len() != then.len() {
            return Err(invalid("composing permutations of different lengths"));
        }
        Ok(IndexPermutation {
            map: then.map.iter().map(|&j| self.map[j]).collect(),
        })
    }

    pub fn apply<T: Clone>(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.len() {
            return Err(invalid(format!(
                "permutation of length {} applied to sequence of length {}",
                self.len(),
                v.len()
            )));
        }
        Ok(self.map.iter().map(|&p| v[p].clone()).collect())
    }

    pub fn apply_bits(&self, v: &BitWord) -> Result<BitWord> {
        if v.len() != self.len() {
            return Err(invalid(format!(
                "permutation of length {} applied to word of length {}",
                self.len(),
                v.len()
            )));
        }
        Ok(BitWord::from_fn(v.len(), |i| v.get(self.map[i])))
    }
}

/// Result of reducing a generator matrix to `[I | P]`.
#[derive(Clone, Debug)]
pub struct SystematicForm {
    /// `[I_K | P]`, columns ordered by `col_order` followed by `column_perm`.
    pub matrix: BitMatrix,
    /// Moves the selected independent columns (in scan order) to the front.
    pub column_perm: IndexPermutation,
    /// `K x K` row transform with `matrix = transform · G'` where `G'` is the
    /// input with both column permutations applied.
    pub transform: BitMatrix,
    /// Nominal operation count `n · min(K, n - K)^2`.
    pub ge_ops: u64,
}

/// Nominal Gaussian elimination cost for a `K x n` generator.
pub fn ge_op_count(n: usize, k_total: usize) -> u64 {
    let m = k_total.min(n.saturating_sub(k_total)) as u64;
    n as u64 * m * m
}

/// Reduces `g` to systematic form, taking the first `K` linearly independent
/// columns in `col_order`. Pivot ties go to the first row with a one in the
/// current column.
pub fn systematic_form(g: &BitMatrix, col_order: &IndexPermutation) -> Result<SystematicForm> {
    let k = g.rows();
    let n = g.cols();
    if k == 0 || k > n {
        return Err(invalid(format!("generator of shape {k}x{n}")));
    }
    let mut work = g.permute_columns(col_order)?;
    let mut transform = BitMatrix::identity(k);
    let mut pivots = Vec::with_capacity(k);
    for c in 0..n {
        let rank = pivots.len();
        if rank == k {
            break;
        }
        let Some(p) = (rank..k).find(|&r| work.get(r, c)) else {
            continue;
        };
        work.swap_rows(p, rank);
        transform.swap_rows(p, rank);
        for r in 0..k {
            if r != rank && work.get(r, c) {
                work.xor_row_into(rank, r);
                transform.xor_row_into(rank, r);
            }
        }
        pivots.push(c);
    }
    if pivots.len() < k {
        return Err(Error::Structural(format!("generator has rank {} < {k}", pivots.len())));
    }
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut map = pivots;
    map.extend((0..n).filter(|&c| !is_pivot[c]));
    let column_perm = IndexPermutation { map };
    let matrix = work.permute_columns(&column_perm)?;
    Ok(SystematicForm {
        matrix,
        column_perm,
        transform,
        ge_ops: ge_op_count(n, k),
    })
}
