//! Classical and CSS code objects, standard constructors, exact distance and
//! exact local-testability soundness.

use std::collections::HashMap;

use num_rational::Ratio;
use rayon::prelude::*;

use crate::gf2::{solve_linear, subset_count, BitMatrix, BitVec, RowReducer, SolveMode};
use crate::{Error, Result};

/// Exhaustive full-space sweeps are allowed up to this length.
pub const FULL_SWEEP_MAX_N: usize = 24;
/// Upper limit on the number of candidate supports a weight-bounded sweep may visit.
pub const SUBSET_BUDGET: u128 = 2_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalCode {
    pub h: BitMatrix,
    pub g: BitMatrix,
    pub n: usize,
    pub k: usize,
    pub d: Option<usize>,
    pub soundness: Option<Ratio<u64>>,
}

impl ClassicalCode {
    /// Code with check matrix `h`; the generator is the reduced kernel basis,
    /// which is in standard form whenever the free columns come first.
    pub fn from_check(h: BitMatrix) -> Self {
        let g = h.kernel().row_basis();
        let n = h.cols();
        let k = g.rows();
        ClassicalCode { h, g, n, k, d: None, soundness: None }
    }

    pub fn with_distance(mut self, d: usize) -> Self {
        self.d = Some(d);
        self
    }

    pub fn r(&self) -> usize {
        self.h.rows()
    }

    /// True when the generator reads (E_k | P).
    pub fn is_standard_form(&self) -> bool {
        self.g.rows() == self.k
            && self.k <= self.n
            && self.g.submatrix(0, self.k, 0, self.k) == BitMatrix::identity(self.k)
    }

    /// Violations of H·Gᵀ = 0 and rank(G) = k.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.h.cols() != self.n || self.g.cols() != self.n {
            out.push("matrix widths differ from n".to_string());
            return out;
        }
        if !self.h.mul(&self.g.transpose()).is_zero() {
            out.push("H·Gᵀ ≠ 0".to_string());
        }
        if self.g.rank() != self.k || self.g.rows() != self.k {
            out.push("rank(G) ≠ k".to_string());
        }
        if self.k + self.h.rank() != self.n {
            out.push("k + rank(H) ≠ n".to_string());
        }
        out
    }
}

/// [n,1,n] repetition code with chain checks x_i + x_{i+1}.
pub fn repetition(n: usize) -> ClassicalCode {
    assert!(n >= 1);
    let mut h = BitMatrix::zeros(n - 1, n);
    for i in 0..n - 1 {
        h.set(i, i, true);
        h.set(i, i + 1, true);
    }
    let mut g = BitMatrix::zeros(1, n);
    for i in 0..n {
        g.set(0, i, true);
    }
    ClassicalCode { h, g, n, k: 1, d: Some(n), soundness: None }
}

/// [7,4,3] Hamming code with H = (A | E_3), so that G = (E_4 | Aᵀ).
pub fn hamming_743() -> ClassicalCode {
    let h = BitMatrix::from_strs(&["1101100", "1011010", "0111001"]);
    ClassicalCode::from_check(h).with_distance(3)
}

/// The code {0} on n bits: H = E_n.
pub fn zero_code(n: usize) -> ClassicalCode {
    ClassicalCode {
        h: BitMatrix::identity(n),
        g: BitMatrix::zeros(0, n),
        n,
        k: 0,
        d: None,
        soundness: None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CssCode {
    pub h_x: BitMatrix,
    pub h_z: BitMatrix,
    pub j_x: BitMatrix,
    pub j_z: BitMatrix,
    pub n: usize,
    pub k: usize,
    pub d: Option<usize>,
}

impl CssCode {
    /// Completes logical generators for the given checks so that J_X·J_Zᵀ = E_k.
    pub fn from_checks(h_x: BitMatrix, h_z: BitMatrix) -> Result<Self> {
        if h_x.cols() != h_z.cols() {
            return Err(Error::Shape("H_X and H_Z widths differ".into()));
        }
        if !h_x.mul(&h_z.transpose()).is_zero() {
            return Err(Error::Precondition("H_X·H_Zᵀ ≠ 0".into()));
        }
        let n = h_x.cols();
        let lx = quotient_basis(&h_z.kernel(), &h_x);
        let lz = quotient_basis(&h_x.kernel(), &h_z);
        let k = lx.rows();
        if lz.rows() != k {
            return Err(Error::Internal("logical dimensions disagree".into()));
        }
        let pairing = lx.mul(&lz.transpose());
        let inv = pairing
            .inverse()
            .ok_or_else(|| Error::Internal("logical pairing matrix is singular".into()))?;
        let j_z = inv.transpose().mul(&lz);
        Ok(CssCode { h_x, h_z, j_x: lx, j_z, n, k, d: None })
    }

    pub fn with_distance(mut self, d: usize) -> Self {
        self.d = Some(d);
        self
    }

    pub fn r_x(&self) -> usize {
        self.h_x.rows()
    }

    pub fn r_z(&self) -> usize {
        self.h_z.rows()
    }

    /// For a single logical qubit, replaces J_X and J_Z by minimum-weight
    /// representatives (any nontrivial pair anticommutes when k = 1).
    pub fn with_min_weight_logicals(mut self) -> Result<Self> {
        if self.k != 1 {
            return Ok(self);
        }
        let (dx, wx) = min_logical(&self.h_z, &self.j_z, self.n)?;
        let (dz, wz) = min_logical(&self.h_x, &self.j_x, self.n)?;
        let (Some(x), Some(z)) = (wx, wz) else {
            return Err(Error::Internal("no logical representative found".into()));
        };
        self.j_x = x.as_row();
        self.j_z = z.as_row();
        if let (DistanceResult::Exact(a), DistanceResult::Exact(b)) = (dx, dz) {
            self.d = Some(a.min(b));
        }
        Ok(self)
    }

    /// Block-diagonal sum of two codes.
    pub fn direct_sum(&self, other: &CssCode) -> CssCode {
        let diag = |a: &BitMatrix, b: &BitMatrix| {
            BitMatrix::blocks(
                &[a.rows(), b.rows()],
                &[a.cols(), b.cols()],
                &[vec![Some(a), None], vec![None, Some(b)]],
            )
            .expect("block shapes are consistent")
        };
        CssCode {
            h_x: diag(&self.h_x, &other.h_x),
            h_z: diag(&self.h_z, &other.h_z),
            j_x: diag(&self.j_x, &other.j_x),
            j_z: diag(&self.j_z, &other.j_z),
            n: self.n + other.n,
            k: self.k + other.k,
            d: match (self.d, other.d) {
                (Some(a), Some(b)) => Some(a.min(b)),
                _ => None,
            },
        }
    }

    /// Swaps the roles of X and Z.
    pub fn dual(&self) -> CssCode {
        CssCode {
            h_x: self.h_z.clone(),
            h_z: self.h_x.clone(),
            j_x: self.j_z.clone(),
            j_z: self.j_x.clone(),
            n: self.n,
            k: self.k,
            d: self.d,
        }
    }
}

/// Rows of `span` that extend rowspace(`modulo`), as a basis of the quotient.
fn quotient_basis(span: &BitMatrix, modulo: &BitMatrix) -> BitMatrix {
    let mut reducer = RowReducer::new(span.cols());
    for r in 0..modulo.rows() {
        reducer.insert(&modulo.row(r));
    }
    let picked: Vec<BitVec> = (0..span.rows()).map(|r| span.row(r)).filter(|v| reducer.insert(v)).collect();
    BitMatrix::from_row_vecs(span.cols(), &picked)
}

/// Named identity failures of a CSS code; empty means valid.
pub fn validate_css(code: &CssCode) -> Vec<String> {
    let mut out = Vec::new();
    let n = code.n;
    for (name, m) in [("H_X", &code.h_x), ("H_Z", &code.h_z), ("J_X", &code.j_x), ("J_Z", &code.j_z)] {
        if m.cols() != n {
            out.push(format!("{name} has {} columns, expected n = {n}", m.cols()));
        }
    }
    if !out.is_empty() {
        return out;
    }
    if code.j_x.rows() != code.k || code.j_z.rows() != code.k {
        out.push(format!("logical generator counts differ from k = {}", code.k));
        return out;
    }
    if !code.h_x.mul(&code.h_z.transpose()).is_zero() {
        out.push("H_X·H_Zᵀ ≠ 0 (check commutation)".to_string());
    }
    if !code.h_x.mul(&code.j_z.transpose()).is_zero() {
        out.push("H_X·J_Zᵀ ≠ 0".to_string());
    }
    if !code.j_x.mul(&code.h_z.transpose()).is_zero() {
        out.push("J_X·H_Zᵀ ≠ 0".to_string());
    }
    if code.j_x.mul(&code.j_z.transpose()) != BitMatrix::identity(code.k) {
        out.push("J_X·J_Zᵀ ≠ E_k (symplectic pairing)".to_string());
    }
    let stacked_x = BitMatrix::vstack(&[&code.h_x, &code.j_x]).expect("same width");
    if stacked_x.rank() != code.h_x.rank() + code.k {
        out.push("J_X rows not independent of rowspace(H_X)".to_string());
    }
    let stacked_z = BitMatrix::vstack(&[&code.h_z, &code.j_z]).expect("same width");
    if stacked_z.rank() != code.h_z.rank() + code.k {
        out.push("J_Z rows not independent of rowspace(H_Z)".to_string());
    }
    let k_formula = n as isize - code.h_x.rank() as isize - code.h_z.rank() as isize;
    if k_formula != code.k as isize {
        out.push(format!("k = {} but n − rank H_X − rank H_Z = {k_formula}", code.k));
    }
    out
}

/// Stabilizer code [[7,1,3]] with both check matrices equal to the Hamming check.
pub fn steane() -> CssCode {
    let h = hamming_743().h;
    CssCode::from_checks(h.clone(), h)
        .and_then(CssCode::with_min_weight_logicals)
        .expect("Steane code is valid")
}

/// One physical qubit, no checks, one logical qubit.
pub fn single_qubit_code() -> CssCode {
    CssCode {
        h_x: BitMatrix::zeros(0, 1),
        h_z: BitMatrix::zeros(0, 1),
        j_x: BitMatrix::identity(1),
        j_z: BitMatrix::identity(1),
        n: 1,
        k: 1,
        d: Some(1),
    }
}

/// Hypergraph product with qubits ordered (n1·n2 sector, r1·r2 sector),
/// each sector row-major in its two factor indices.
pub fn hypergraph_product(c1: &ClassicalCode, c2: &ClassicalCode) -> Result<CssCode> {
    let (h1, h2) = (&c1.h, &c2.h);
    let (r1, n1, r2, n2) = (h1.rows(), h1.cols(), h2.rows(), h2.cols());
    let h_x = BitMatrix::hstack(&[
        &h1.kron(&BitMatrix::identity(n2)),
        &BitMatrix::identity(r1).kron(&h2.transpose()),
    ])?;
    let h_z = BitMatrix::hstack(&[
        &BitMatrix::identity(n1).kron(h2),
        &h1.transpose().kron(&BitMatrix::identity(r2)),
    ])?;
    debug_assert_eq!(h_x.cols(), n1 * n2 + r1 * r2);
    CssCode::from_checks(h_x, h_z)
}

/// Surface code [[d²+(d−1)², 1, d]] as the product of two repetition codes.
pub fn surface_code_via_hgp(d: usize) -> Result<CssCode> {
    if d.is_multiple_of(2) {
        return Err(Error::Precondition(format!("surface distance must be odd, got {d}")));
    }
    let rep = repetition(d);
    let code = hypergraph_product(&rep, &rep)?.with_min_weight_logicals()?;
    Ok(code)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceResult {
    Exact(usize),
    /// No logical of weight below this value exists; the sweep stopped there.
    AtLeast(usize),
}

impl DistanceResult {
    pub fn exact(&self) -> Option<usize> {
        match self {
            DistanceResult::Exact(d) => Some(*d),
            DistanceResult::AtLeast(_) => None,
        }
    }

    pub fn lower_bound(&self) -> usize {
        match self {
            DistanceResult::Exact(d) | DistanceResult::AtLeast(d) => *d,
        }
    }
}

/// Packed per-column syndromes for a "check must vanish, logical must not"
/// weight search.
struct ColumnSyndromes {
    check_words: usize,
    columns: Vec<Vec<u64>>,
}

impl ColumnSyndromes {
    fn new(check: &BitMatrix, logical: &BitMatrix) -> Self {
        let stacked = BitMatrix::vstack(&[check, logical]).expect("same width").transpose();
        let check_words = check.rows().div_ceil(64);
        let logical_words = logical.rows().div_ceil(64);
        let words = check_words + logical_words;
        let columns = (0..stacked.rows())
            .map(|c| {
                let mut out = vec![0u64; words];
                for i in stacked.row(c).ones() {
                    let slot = if i < check.rows() { i } else { check_words * 64 + (i - check.rows()) };
                    out[slot / 64] |= 1 << (slot % 64);
                }
                out
            })
            .collect();
        ColumnSyndromes { check_words, columns }
    }

    fn is_hit(&self, acc: &[u64]) -> bool {
        acc[..self.check_words].iter().all(|&w| w == 0) && acc[self.check_words..].iter().any(|&w| w != 0)
    }

    /// First support of exactly `weight` columns that is a hit, scanning
    /// branches rooted at each first index in parallel; the lowest root wins.
    fn find_at_weight(&self, weight: usize) -> Option<Vec<usize>> {
        let n = self.columns.len();
        if weight == 0 || weight > n {
            return None;
        }
        (0..=n - weight).into_par_iter().find_first(|&first| {
            let mut acc = self.columns[first].clone();
            let mut idx = vec![first];
            self.dfs(first + 1, weight - 1, &mut acc, &mut idx)
        })
        .map(|first| {
            let mut acc = self.columns[first].clone();
            let mut idx = vec![first];
            self.dfs(first + 1, weight - 1, &mut acc, &mut idx);
            idx
        })
    }

    fn dfs(&self, start: usize, remaining: usize, acc: &mut Vec<u64>, idx: &mut Vec<usize>) -> bool {
        if remaining == 0 {
            return self.is_hit(acc);
        }
        let n = self.columns.len();
        for c in start..=n - remaining {
            for (a, col) in acc.iter_mut().zip(&self.columns[c]) {
                *a ^= col;
            }
            idx.push(c);
            if self.dfs(c + 1, remaining - 1, acc, idx) {
                return true;
            }
            idx.pop();
            for (a, col) in acc.iter_mut().zip(&self.columns[c]) {
                *a ^= col;
            }
        }
        false
    }
}

/// Smallest-weight u with check·uᵀ = 0 and logical·uᵀ ≠ 0, searching weights
/// 1..=budget. Returns the result and a witness when one was found.
pub fn min_logical(check: &BitMatrix, logical: &BitMatrix, budget: usize) -> Result<(DistanceResult, Option<BitVec>)> {
    let n = check.cols();
    let budget = budget.min(n);
    if logical.rows() == 0 {
        return Ok((DistanceResult::AtLeast(n + 1), None));
    }
    let syndromes = ColumnSyndromes::new(check, logical);
    for w in 1..=budget {
        if n > FULL_SWEEP_MAX_N && subset_count(n, w) > SUBSET_BUDGET {
            return Err(Error::SearchTooLarge { what: "weight-bounded logical sweep".into(), size: n, cap: w });
        }
        if let Some(idx) = syndromes.find_at_weight(w) {
            return Ok((DistanceResult::Exact(w), Some(BitVec::from_indices(n, &idx))));
        }
    }
    Ok((DistanceResult::AtLeast(budget + 1), None))
}

/// CSS distance swept up to `budget` (use `usize::MAX` for an exact answer).
pub fn css_distance(code: &CssCode, budget: usize) -> Result<DistanceResult> {
    let (x, _) = min_logical(&code.h_z, &code.j_z, budget)?;
    let (z, _) = min_logical(&code.h_x, &code.j_x, budget)?;
    Ok(combine(x, z))
}

fn combine(a: DistanceResult, b: DistanceResult) -> DistanceResult {
    use DistanceResult::*;
    match (a, b) {
        (Exact(x), Exact(y)) => Exact(x.min(y)),
        (Exact(x), AtLeast(y)) | (AtLeast(y), Exact(x)) => {
            if x < y {
                Exact(x)
            } else {
                AtLeast(y)
            }
        }
        (AtLeast(x), AtLeast(y)) => AtLeast(x.min(y)),
    }
}

/// Minimum nonzero codeword weight, swept up to `budget`.
pub fn classical_distance(code: &ClassicalCode, budget: usize) -> Result<DistanceResult> {
    // A codeword is nonzero exactly when it pairs nontrivially with some
    // information position, i.e. with a row of the generator's right-inverse transpose.
    let pairing = match code.g.right_inverse() {
        Some(inv) => inv.transpose(),
        None => return Err(Error::Precondition("generator rows are dependent".into())),
    };
    Ok(min_logical(&code.h, &pairing, budget)?.0)
}

/// Exact soundness s = min over u ∉ C of n·|Hu| / (r·dist(u, C)), found by
/// grouping all 2^n words by syndrome: dist(u, C) is the coset-leader weight.
pub fn soundness(code: &ClassicalCode) -> Result<Ratio<u64>> {
    let n = code.n;
    if n > FULL_SWEEP_MAX_N {
        return Err(Error::SearchTooLarge { what: "soundness sweep".into(), size: n, cap: FULL_SWEEP_MAX_N });
    }
    let r = code.h.rows();
    if r == 0 || r > 64 {
        return Err(Error::Precondition(format!("soundness needs 1 ≤ r ≤ 64, got r = {r}")));
    }
    let leaders = coset_leader_weights(&code.h);
    let mut best: Option<Ratio<u64>> = None;
    for (&syn, &lw) in &leaders {
        if syn == 0 {
            continue;
        }
        let value = Ratio::new(n as u64 * syn.count_ones() as u64, r as u64 * lw as u64);
        best = Some(best.map_or(value, |b| b.min(value)));
    }
    best.ok_or_else(|| Error::Precondition("code has no non-codeword (C is the full space)".into()))
}

/// Minimum weight per reachable syndrome (syndrome packed into a u64).
pub fn coset_leader_weights(h: &BitMatrix) -> HashMap<u64, usize> {
    let n = h.cols();
    let col: Vec<u64> = (0..n)
        .map(|c| h.column(c).ones().into_iter().fold(0u64, |acc, i| acc | (1 << i)))
        .collect();
    let mut best: HashMap<u64, usize> = HashMap::new();
    let mut syn = 0u64;
    let mut word = 0u64;
    best.insert(0, 0);
    for step in 1u64..(1u64 << n) {
        let bit = step.trailing_zeros() as usize;
        syn ^= col[bit];
        word ^= 1 << bit;
        let w = word.count_ones() as usize;
        best.entry(syn).and_modify(|b| *b = (*b).min(w)).or_insert(w);
    }
    best
}

/// Checks the local-testability preimage bound: every syndrome v in the column
/// space of H has a preimage u with |u|·r·s ≤ n·|v|. Returns the violations.
pub fn ltc_preimage_violations(code: &ClassicalCode, s: Ratio<u64>) -> Result<Vec<(BitVec, BitVec)>> {
    let r = code.h.rows();
    let n = code.n;
    let basis = code.h.transpose().row_basis();
    if basis.rows() > 24 {
        return Err(Error::SearchTooLarge { what: "column space".into(), size: basis.rows(), cap: 24 });
    }
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << basis.rows()) {
        let coeffs = BitVec::from_mask(basis.rows(), mask);
        let v = basis.vec_mul(&coeffs);
        let u = solve_linear(&code.h, &v, SolveMode::MinWeight, 24)?
            .ok_or_else(|| Error::Internal("column-space vector without preimage".into()))?;
        let lhs = Ratio::from_integer((u.weight() * r) as u64) * s;
        let rhs = Ratio::from_integer((n * v.weight()) as u64);
        if lhs > rhs {
            out.push((v, u));
        }
    }
    Ok(out)
}

/// Factor max{1, n/(r·s)} appearing in the preparation bounds.
pub fn preimage_factor(code: &ClassicalCode, s: Ratio<u64>) -> Ratio<u64> {
    let f = Ratio::new(code.n as u64, code.h.rows() as u64) / s;
    f.max(Ratio::from_integer(1))
}

/// All codewords weight-indexed: used by test oracles and small decoders.
pub fn enumerate_codewords(g: &BitMatrix) -> Vec<BitVec> {
    let k = g.rows();
    assert!(k <= 24, "too many codewords");
    (0u64..(1u64 << k)).map(|m| g.vec_mul(&BitVec::from_mask(k, m))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repetition_parameters() {
        let c = repetition(5);
        assert!(c.validate().is_empty());
        assert_eq!(classical_distance(&c, 5).unwrap(), DistanceResult::Exact(5));
    }

    #[test]
    fn hamming_standard_form() {
        let c = hamming_743();
        assert!(c.is_standard_form());
        assert_eq!(c.k, 4);
        assert!(c.validate().is_empty());
    }

    #[test]
    fn steane_valid() {
        let c = steane();
        assert!(validate_css(&c).is_empty());
        assert_eq!(css_distance(&c, 7).unwrap(), DistanceResult::Exact(3));
    }

    #[test]
    fn forced_pairing_violation() {
        let mut c = steane();
        c.j_z = BitMatrix::zeros(1, 7);
        let report = validate_css(&c);
        assert!(report.iter().any(|v| v.contains("symplectic")));
    }

    #[test]
    fn zero_code_soundness_is_one() {
        assert_eq!(soundness(&zero_code(4)).unwrap(), Ratio::from_integer(1));
    }
}
