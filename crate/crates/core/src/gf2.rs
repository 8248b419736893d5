//! Dense bit-packed linear algebra over GF(2).
//!
//! Matrices are stored row-major with 64-bit words per row. Column work goes
//! through an explicit transpose since elimination is row-oriented.

use std::fmt;

use crate::{Error, Result};

const WORD: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// Default kernel-dimension cap for exhaustive minimum-weight searches.
pub const DEFAULT_SEARCH_CAP: usize = 24;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { len, words: vec![0; words_for(len)] }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b & 1 == 1 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_indices(len: usize, ones: &[usize]) -> Self {
        let mut v = BitVec::zeros(len);
        for &i in ones {
            v.flip(i);
        }
        v
    }

    /// Low `len` bits of `mask` (bit i of the mask is entry i).
    pub fn from_mask(len: usize, mask: u64) -> Self {
        assert!(len <= WORD);
        let mut v = BitVec::zeros(len);
        if len > 0 {
            let keep = if len == WORD { u64::MAX } else { (1u64 << len) - 1 };
            v.words[0] = mask & keep;
        }
        v
    }

    pub fn unit(len: usize, i: usize) -> Self {
        BitVec::from_indices(len, &[i])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let bit = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= bit;
        } else {
            self.words[i / WORD] &= !bit;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Inner product mod 2.
    pub fn dot(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        let mut acc = 0u32;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= (a & b).count_ones();
        }
        acc & 1 == 1
    }

    pub fn ones(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let t = w.trailing_zeros() as usize;
                out.push(wi * WORD + t);
                w &= w - 1;
            }
        }
        out
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    pub fn concat(parts: &[&BitVec]) -> BitVec {
        let len = parts.iter().map(|p| p.len).sum();
        let mut out = BitVec::zeros(len);
        let mut off = 0;
        for p in parts {
            for i in p.ones() {
                out.set(off + i, true);
            }
            off += p.len;
        }
        out
    }

    pub fn slice(&self, start: usize, len: usize) -> BitVec {
        let mut out = BitVec::zeros(len);
        for i in 0..len {
            if self.get(start + i) {
                out.set(i, true);
            }
        }
        out
    }

    /// Writes `part` into positions `start..start + part.len()` by XOR.
    pub fn xor_at(&mut self, start: usize, part: &BitVec) {
        for i in part.ones() {
            self.flip(start + i);
        }
    }

    pub fn as_row(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(1, self.len);
        m.data[..self.words.len()].copy_from_slice(&self.words);
        m
    }

    pub fn as_column(&self) -> BitMatrix {
        self.as_row().transpose()
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec(")?;
        for i in 0..self.len {
            write!(f, "{}", self.get(i) as u8)?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

/// Maximum row and column Hamming weights of a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WeightProfile {
    pub max_row_weight: usize,
    pub max_col_weight: usize,
}

impl WeightProfile {
    /// Largest of the two weights; the induced norm used in propagation bounds.
    pub fn max(&self) -> usize {
        self.max_row_weight.max(self.max_col_weight)
    }
}

/// Row-reduced echelon form with pivot bookkeeping.
#[derive(Debug, Clone)]
pub struct Echelon {
    pub reduced: BitMatrix,
    /// Pivot column of each nonzero row, strictly increasing.
    pub pivots: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Any,
    MinWeight,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        BitMatrix { rows, cols, stride, data: vec![0; rows * stride] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BitMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows of 0/1 entries. All rows must share a length.
    pub fn from_rows(rows: &[&[u8]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = BitMatrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged row {i}");
            for (j, &b) in r.iter().enumerate() {
                if b & 1 == 1 {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    /// Parses rows written as strings of '0'/'1' (whitespace ignored).
    pub fn from_strs(rows: &[&str]) -> Self {
        let bits: Vec<Vec<u8>> = rows
            .iter()
            .map(|r| r.chars().filter(|c| !c.is_whitespace()).map(|c| (c == '1') as u8).collect())
            .collect();
        let refs: Vec<&[u8]> = bits.iter().map(|r| r.as_slice()).collect();
        BitMatrix::from_rows(&refs)
    }

    pub fn from_row_vecs(cols: usize, rows: &[BitVec]) -> Self {
        let mut m = BitMatrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols);
            m.set_row(i, r);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let bit = 1u64 << (c % WORD);
        let w = &mut self.data[r * self.stride + c / WORD];
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.stride + c / WORD] ^= 1u64 << (c % WORD);
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row(&self, r: usize) -> BitVec {
        BitVec { len: self.cols, words: self.row_words(r).to_vec() }
    }

    pub fn row_list(&self) -> Vec<BitVec> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    pub fn column(&self, c: usize) -> BitVec {
        let mut v = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            if self.get(r, c) {
                v.set(r, true);
            }
        }
        v
    }

    pub fn set_row(&mut self, r: usize, v: &BitVec) {
        assert_eq!(v.len(), self.cols);
        self.data[r * self.stride..(r + 1) * self.stride].copy_from_slice(&v.words);
    }

    fn xor_rows(&mut self, dst: usize, src: usize) {
        if dst == src {
            return;
        }
        let s = self.stride;
        let (a, b) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&mut lo[dst * s..dst * s + s], &hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&mut hi[..s], &lo[src * s..src * s + s])
        };
        for (x, y) in a.iter_mut().zip(b) {
            *x ^= y;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.data.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_words(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn col_weight(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, c)).count()
    }

    pub fn weight_profile(&self) -> WeightProfile {
        let max_row_weight = (0..self.rows).map(|r| self.row_weight(r)).max().unwrap_or(0);
        let mut col_counts = vec![0usize; self.cols];
        for r in 0..self.rows {
            for c in self.row(r).ones() {
                col_counts[c] += 1;
            }
        }
        let max_col_weight = col_counts.into_iter().max().unwrap_or(0);
        WeightProfile { max_row_weight, max_col_weight }
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row(r).ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    pub fn add(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!("add {:?} + {:?}", self.shape(), other.shape())));
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a ^= b;
        }
        Ok(out)
    }

    /// Matrix product; panics on non-conformable shapes (use [`BitMatrix::try_mul`]).
    pub fn mul(&self, other: &BitMatrix) -> BitMatrix {
        self.try_mul(other).expect("non-conformable product")
    }

    pub fn try_mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!("mul {:?} x {:?}", self.shape(), other.shape())));
        }
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let dst = r * out.stride;
            for k in self.row(r).ones() {
                let src = other.row_words(k);
                for (w, s) in src.iter().enumerate() {
                    out.data[dst + w] ^= s;
                }
            }
        }
        Ok(out)
    }

    /// M·vᵀ as a vector of length `rows`.
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.cols, "mul_vec length");
        let mut out = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            let mut acc = 0u32;
            for (a, b) in self.row_words(r).iter().zip(&v.words) {
                acc ^= (a & b).count_ones();
            }
            if acc & 1 == 1 {
                out.set(r, true);
            }
        }
        out
    }

    /// v·M as a vector of length `cols`.
    pub fn vec_mul(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.rows, "vec_mul length");
        let mut out = BitVec::zeros(self.cols);
        for r in v.ones() {
            for (a, b) in out.words.iter_mut().zip(self.row_words(r)) {
                *a ^= b;
            }
        }
        out
    }

    pub fn hstack(parts: &[&BitMatrix]) -> Result<BitMatrix> {
        let rows = parts.first().map_or(0, |p| p.rows);
        if parts.iter().any(|p| p.rows != rows) {
            return Err(Error::Shape("hstack row counts differ".into()));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = BitMatrix::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            for r in 0..rows {
                for c in p.row(r).ones() {
                    out.set(r, off + c, true);
                }
            }
            off += p.cols;
        }
        Ok(out)
    }

    pub fn vstack(parts: &[&BitMatrix]) -> Result<BitMatrix> {
        let cols = parts.first().map_or(0, |p| p.cols);
        if parts.iter().any(|p| p.cols != cols) {
            return Err(Error::Shape("vstack column counts differ".into()));
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut out = BitMatrix::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            out.data[off * out.stride..(off + p.rows) * out.stride].copy_from_slice(&p.data);
            off += p.rows;
        }
        Ok(out)
    }

    /// Assembles a block matrix. `row_heights` and `col_widths` fix the grid;
    /// `None` entries are zero blocks.
    pub fn blocks(
        row_heights: &[usize],
        col_widths: &[usize],
        grid: &[Vec<Option<&BitMatrix>>],
    ) -> Result<BitMatrix> {
        let rows = row_heights.iter().sum();
        let cols = col_widths.iter().sum();
        let mut out = BitMatrix::zeros(rows, cols);
        let mut r0 = 0;
        for (bi, h) in row_heights.iter().enumerate() {
            let mut c0 = 0;
            for (bj, w) in col_widths.iter().enumerate() {
                if let Some(b) = grid[bi][bj] {
                    if b.shape() != (*h, *w) {
                        return Err(Error::Shape(format!(
                            "block ({bi},{bj}) is {:?}, expected ({h},{w})",
                            b.shape()
                        )));
                    }
                    for r in 0..*h {
                        for c in b.row(r).ones() {
                            out.set(r0 + r, c0 + c, true);
                        }
                    }
                }
                c0 += w;
            }
            r0 += h;
        }
        Ok(out)
    }

    pub fn select_columns(&self, cols: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                if self.get(r, c) {
                    out.set(r, j, true);
                }
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(rows.len(), self.cols);
        for (i, &r) in rows.iter().enumerate() {
            out.data[i * self.stride..(i + 1) * self.stride].copy_from_slice(self.row_words(r));
        }
        out
    }

    pub fn submatrix(&self, r0: usize, rows: usize, c0: usize, cols: usize) -> BitMatrix {
        let mut out = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if self.get(r0 + r, c0 + c) {
                    out.set(r, c, true);
                }
            }
        }
        out
    }

    /// Row-reduced echelon form with leftmost pivots.
    pub fn rref(&self) -> Echelon {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut next = 0;
        for c in 0..self.cols {
            if next == self.rows {
                break;
            }
            let Some(p) = (next..self.rows).find(|&r| m.get(r, c)) else { continue };
            m.swap_rows(next, p);
            for r in 0..self.rows {
                if r != next && m.get(r, c) {
                    m.xor_rows(r, next);
                }
            }
            pivots.push(c);
            next += 1;
        }
        Echelon { reduced: m, pivots }
    }

    pub fn rank(&self) -> usize {
        // Forward elimination only; cheaper than a full reduction.
        let mut m = self.clone();
        let mut next = 0;
        for c in 0..self.cols {
            if next == self.rows {
                break;
            }
            let Some(p) = (next..self.rows).find(|&r| m.get(r, c)) else { continue };
            m.swap_rows(next, p);
            for r in next + 1..self.rows {
                if m.get(r, c) {
                    m.xor_rows(r, next);
                }
            }
            next += 1;
        }
        next
    }

    pub fn is_full_row_rank(&self) -> bool {
        self.rank() == self.rows
    }

    /// Basis of {x : M·xᵀ = 0}, one vector per row, ordered by free column.
    pub fn kernel(&self) -> BitMatrix {
        let ech = self.rref();
        let pivot_set: Vec<Option<usize>> = {
            let mut s = vec![None; self.cols];
            for (i, &p) in ech.pivots.iter().enumerate() {
                s[p] = Some(i);
            }
            s
        };
        let free: Vec<usize> = (0..self.cols).filter(|&c| pivot_set[c].is_none()).collect();
        let mut out = BitMatrix::zeros(free.len(), self.cols);
        for (k, &f) in free.iter().enumerate() {
            out.set(k, f, true);
            for (i, &p) in ech.pivots.iter().enumerate() {
                if ech.reduced.get(i, f) {
                    out.set(k, p, true);
                }
            }
        }
        out
    }

    /// Nonzero rows of the reduced echelon form: a canonical row-space basis.
    pub fn row_basis(&self) -> BitMatrix {
        let ech = self.rref();
        ech.reduced.select_rows(&(0..ech.rank()).collect::<Vec<_>>())
    }

    /// Indices of a maximal linearly independent subset of rows, greedily from the top.
    pub fn independent_rows(&self) -> Vec<usize> {
        let mut basis = RowReducer::new(self.cols);
        (0..self.rows).filter(|&r| basis.insert(&self.row(r))).collect()
    }

    pub fn row_space_contains(&self, v: &BitVec) -> bool {
        let mut basis = RowReducer::new(self.cols);
        for r in 0..self.rows {
            basis.insert(&self.row(r));
        }
        basis.reduce(v).is_zero()
    }

    /// Right inverse chosen on the leftmost pivot columns: the pivot block is
    /// inverted and its rows placed at the pivot positions, all other rows zero.
    /// Absent when the rows are dependent.
    pub fn right_inverse(&self) -> Option<BitMatrix> {
        let ech = self.rref();
        if ech.rank() != self.rows {
            return None;
        }
        let square = self.select_columns(&ech.pivots);
        let inv = square.inverse()?;
        let mut out = BitMatrix::zeros(self.cols, self.rows);
        for (i, &p) in ech.pivots.iter().enumerate() {
            out.set_row(p, &inv.row(i));
        }
        Some(out)
    }

    /// A matrix N with M·N·s = s for every s in the column space of M, defined
    /// for any M. Built from an independent row subset: the right inverse of
    /// that subset, padded with zero columns for the dependent rows.
    pub fn generalized_right_inverse(&self) -> BitMatrix {
        let keep = self.independent_rows();
        let sub = self.select_rows(&keep);
        let inv = sub.right_inverse().expect("independent rows have a right inverse");
        let mut out = BitMatrix::zeros(self.cols, self.rows);
        for (j, &r) in keep.iter().enumerate() {
            for i in inv.column(j).ones() {
                out.set(i, r, true);
            }
        }
        out
    }

    pub fn inverse(&self) -> Option<BitMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let aug = BitMatrix::hstack(&[self, &BitMatrix::identity(n)]).ok()?;
        let ech = aug.rref();
        if ech.pivots.iter().take(n).enumerate().any(|(i, &p)| p != i) || ech.rank() < n {
            return None;
        }
        Some(ech.reduced.submatrix(0, n, n, n))
    }

    /// Kronecker product.
    pub fn kron(&self, other: &BitMatrix) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in self.row(i).ones() {
                for k in 0..other.rows {
                    for l in other.row(k).ones() {
                        out.set(i * other.rows + k, j * other.cols + l, true);
                    }
                }
            }
        }
        out
    }

    /// Column-stacking vectorization: entry (i, m) lands at index m·rows + i.
    ///
    /// This is the only ordering for which the block selector (e_mᵀ ⊗ E_rows)
    /// applied to vec(U) returns column m of U, which the propagation proofs
    /// rely on when they peel one logical column out of a stacked error.
    pub fn vec(&self) -> BitVec {
        let mut v = BitVec::zeros(self.rows * self.cols);
        for r in 0..self.rows {
            for c in self.row(r).ones() {
                v.set(c * self.rows + r, true);
            }
        }
        v
    }

    /// Inverse of [`BitMatrix::vec`].
    pub fn unvec(v: &BitVec, rows: usize, cols: usize) -> Result<BitMatrix> {
        if v.len() != rows * cols {
            return Err(Error::Shape(format!("unvec length {} into {rows}x{cols}", v.len())));
        }
        let mut m = BitMatrix::zeros(rows, cols);
        for idx in v.ones() {
            m.set(idx % rows.max(1), idx / rows.max(1), true);
        }
        Ok(m)
    }

    /// Text form: "<rows> <cols>" then one line of 0/1 characters per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                s.push(if self.get(r, c) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<BitMatrix> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty matrix text".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("header {header:?}: {e}"))))
            .collect::<Result<_>>()?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse(format!("header {header:?} must be '<rows> <cols>'")));
        };
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing row {r}")))?;
            if line.len() != cols {
                return Err(Error::Parse(format!("row {r} has {} entries, expected {cols}", line.len())));
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.set(r, c, true),
                    other => return Err(Error::Parse(format!("row {r}: unexpected {other:?}"))),
                }
            }
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing rows after declared count".into()));
        }
        Ok(m)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                write!(f, "{}", self.get(r, c) as u8)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Incremental echelon basis for membership tests and independent subsets.
#[derive(Debug, Clone)]
pub struct RowReducer {
    len: usize,
    rows: Vec<(usize, BitVec)>,
}

impl RowReducer {
    pub fn new(len: usize) -> Self {
        RowReducer { len, rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn reduce(&self, v: &BitVec) -> BitVec {
        let mut v = v.clone();
        for (p, row) in &self.rows {
            if v.get(*p) {
                v.xor_assign(row);
            }
        }
        v
    }

    /// Adds `v` to the span; returns false if it was already spanned.
    pub fn insert(&mut self, v: &BitVec) -> bool {
        assert_eq!(v.len(), self.len);
        let mut r = self.reduce(v);
        let Some(p) = r.ones().first().copied() else { return false };
        for (_, row) in self.rows.iter_mut() {
            if row.get(p) {
                row.xor_assign(&r);
            }
        }
        r.set(p, true);
        self.rows.push((p, r));
        true
    }
}

/// Solves A·xᵀ = bᵀ. `MinWeight` enumerates the whole solution coset, so the
/// kernel dimension must not exceed `cap`.
pub fn solve_linear(a: &BitMatrix, b: &BitVec, mode: SolveMode, cap: usize) -> Result<Option<BitVec>> {
    if b.len() != a.rows() {
        return Err(Error::Shape(format!("rhs length {} for {} rows", b.len(), a.rows())));
    }
    let aug = BitMatrix::hstack(&[a, &b.as_column()])?;
    let ech = aug.rref();
    if ech.pivots.last() == Some(&a.cols()) {
        return Ok(None);
    }
    let mut x = BitVec::zeros(a.cols());
    for (i, &p) in ech.pivots.iter().enumerate() {
        if ech.reduced.get(i, a.cols()) {
            x.set(p, true);
        }
    }
    if mode == SolveMode::Any {
        return Ok(Some(x));
    }
    let kernel = a.kernel();
    if kernel.rows() > cap {
        return Err(Error::SearchTooLarge {
            what: "solution coset".into(),
            size: kernel.rows(),
            cap,
        });
    }
    Ok(Some(min_weight_in_coset(&x, &kernel)))
}

/// Minimum-weight element of x + rowspace(basis), by Gray-code enumeration.
/// Ties resolve to the first vector met in enumeration order.
pub fn min_weight_in_coset(x: &BitVec, basis: &BitMatrix) -> BitVec {
    let rows = basis.row_list();
    let mut cur = x.clone();
    let mut best = cur.clone();
    let mut best_w = cur.weight();
    let total: u64 = 1u64 << rows.len();
    for step in 1..total {
        let bit = step.trailing_zeros() as usize;
        cur.xor_assign(&rows[bit]);
        let w = cur.weight();
        if w < best_w {
            best_w = w;
            best = cur.clone();
        }
    }
    best
}

/// Calls `f` on every index subset of `0..n` with size in `1..=max_weight`,
/// in increasing size then lexicographic order; stops early when `f` returns false.
pub fn for_each_subset(n: usize, max_weight: usize, mut f: impl FnMut(&[usize]) -> bool) {
    let mut idx = Vec::with_capacity(max_weight);
    for w in 1..=max_weight.min(n) {
        idx.clear();
        idx.extend(0..w);
        loop {
            if !f(&idx) {
                return;
            }
            let mut i = w;
            while i > 0 && idx[i - 1] == n - w + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..w {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
}

/// Number of subsets visited by [`for_each_subset`].
pub fn subset_count(n: usize, max_weight: usize) -> u128 {
    let mut total = 0u128;
    let mut binom = 1u128;
    for w in 1..=max_weight.min(n) {
        binom = binom * (n - w + 1) as u128 / w as u128;
        total += binom;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hamming() -> BitMatrix {
        BitMatrix::from_strs(&["1101100", "1011010", "0111001"])
    }

    #[test]
    fn rank_basics() {
        assert_eq!(BitMatrix::identity(3).rank(), 3);
        assert_eq!(BitMatrix::zeros(2, 5).rank(), 0);
        assert_eq!(hamming().rank(), 3);
    }

    #[test]
    fn standard_form_right_inverse() {
        let g = BitMatrix::from_strs(&["1000110", "0100101", "0010011", "0001111"]);
        let inv = g.right_inverse().unwrap();
        assert_eq!(g.mul(&inv), BitMatrix::identity(4));
        let expected = BitMatrix::hstack(&[&BitMatrix::identity(4), &BitMatrix::zeros(4, 3)]).unwrap();
        assert_eq!(inv.transpose(), expected);
        assert!(BitMatrix::from_strs(&["11", "11"]).right_inverse().is_none());
    }

    #[test]
    fn generalized_inverse_on_dependent_rows() {
        let h = BitMatrix::from_strs(&["110", "011", "101"]);
        let n = h.generalized_right_inverse();
        for mask in 0u64..8 {
            let s = h.mul_vec(&BitVec::from_mask(3, mask));
            assert_eq!(h.mul_vec(&n.mul_vec(&s)), s);
        }
    }

    #[test]
    fn kron_expansion() {
        let a = BitMatrix::from_strs(&["11"]);
        let b = BitMatrix::from_strs(&["101"]);
        assert_eq!(a.kron(&b), BitMatrix::from_strs(&["101101"]));
        assert_eq!(BitMatrix::identity(2).kron(&BitMatrix::identity(3)), BitMatrix::identity(6));
    }

    #[test]
    fn vec_of_identity() {
        assert_eq!(BitMatrix::identity(2).vec(), BitVec::from_bits(&[1, 0, 0, 1]));
    }

    #[test]
    fn solve_examples() {
        let x = solve_linear(&BitMatrix::identity(3), &BitVec::from_bits(&[1, 0, 1]), SolveMode::Any, 24)
            .unwrap()
            .unwrap();
        assert_eq!(x, BitVec::from_bits(&[1, 0, 1]));
        let a = BitMatrix::from_strs(&["10", "00"]);
        assert!(solve_linear(&a, &BitVec::from_bits(&[0, 1]), SolveMode::Any, 24).unwrap().is_none());
        let u = solve_linear(&hamming(), &BitVec::from_bits(&[1, 0, 0]), SolveMode::MinWeight, 24)
            .unwrap()
            .unwrap();
        assert_eq!(u.weight(), 1);
    }

    #[test]
    fn search_cap_is_enforced() {
        let a = BitMatrix::zeros(1, 10);
        let err = solve_linear(&a, &BitVec::zeros(1), SolveMode::MinWeight, 4).unwrap_err();
        assert!(matches!(err, Error::SearchTooLarge { .. }));
    }

    #[test]
    fn text_round_trip() {
        let h = hamming();
        assert_eq!(BitMatrix::parse_text(&h.to_text()).unwrap(), h);
        assert!(BitMatrix::parse_text("2 2\n10\n").is_err());
        assert!(BitMatrix::parse_text("1 2\n12\n").is_err());
    }

    #[test]
    fn subsets_enumerated_in_order() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| {
            seen.push(s.to_vec());
            true
        });
        assert_eq!(seen.len() as u128, subset_count(4, 2));
        assert_eq!(seen[0], vec![0]);
        assert_eq!(seen[4], vec![0, 1]);
        assert_eq!(seen.last().unwrap(), &vec![2, 3]);
    }
}
