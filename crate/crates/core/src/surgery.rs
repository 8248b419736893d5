//! Parallelized code surgery: glue matrices, the deformed code measuring the
//! same Z logicals on k_R target blocks through one ancilla system, and its
//! verification.
//!
//! Column layout of the deformed code: k_R target copies of n qubits, then
//! r_R·n_G ancilla qubits, then n_R·r_G ancilla qubits.

use crate::codes::{min_logical, validate_css, ClassicalCode, CssCode, DistanceResult};
use crate::gf2::{solve_linear, BitMatrix, BitVec, SolveMode, WeightProfile, DEFAULT_SEARCH_CAP};
use crate::{Error, Result};

/// Matrices coupling an ancilla glue code to one target block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlueSet {
    /// r_G × n_G
    pub h_g: BitMatrix,
    /// n_G × n
    pub s: BitMatrix,
    /// r_X × r_G
    pub t: BitMatrix,
    /// n × n_G
    pub r: BitMatrix,
    /// (k−q) × r_G
    pub beta: BitMatrix,
    /// q × k
    pub alpha: BitMatrix,
    /// (k−q) × k
    pub alpha_perp: BitMatrix,
}

impl GlueSet {
    pub fn n_g(&self) -> usize {
        self.h_g.cols()
    }

    pub fn r_g(&self) -> usize {
        self.h_g.rows()
    }

    pub fn q(&self) -> usize {
        self.alpha.rows()
    }
}

/// Deterministic complement: a basis of {x : α·xᵀ = 0}.
pub fn orthogonal_complement(alpha: &BitMatrix) -> BitMatrix {
    alpha.kernel()
}

/// Builds glue matrices measuring Z(α·J_Z) on `target`.
///
/// S picks each qubit in the support of the measured logicals with a weight-one
/// row and R = Sᵀ. H_G is an independent subset of the restricted X checks
/// H_X·Sᵀ; when the unmeasured X logicals do not restrict into that span, the
/// span is enlarged by their restrictions. T and β are solved, never assumed.
pub fn build_glue(target: &CssCode, alpha: &BitMatrix) -> Result<GlueSet> {
    let k = target.k;
    if alpha.cols() != k {
        return Err(Error::Shape(format!("alpha has {} columns, code has k = {k}", alpha.cols())));
    }
    if alpha.rank() != alpha.rows() {
        return Err(Error::Precondition("alpha must have full row rank".into()));
    }
    let n = target.n;
    let alpha_perp = orthogonal_complement(alpha);
    if alpha.rows() == 0 {
        return Ok(GlueSet {
            h_g: BitMatrix::zeros(0, 0),
            s: BitMatrix::zeros(0, n),
            t: BitMatrix::zeros(target.r_x(), 0),
            r: BitMatrix::zeros(n, 0),
            beta: BitMatrix::zeros(alpha_perp.rows(), 0),
            alpha: alpha.clone(),
            alpha_perp,
        });
    }
    let measured = alpha.mul(&target.j_z);
    let mut support: Vec<usize> = (0..n).filter(|&c| (0..measured.rows()).any(|r| measured.get(r, c))).collect();
    support.sort_unstable();
    let n_g = support.len();
    let mut s = BitMatrix::zeros(n_g, n);
    for (i, &c) in support.iter().enumerate() {
        s.set(i, c, true);
    }
    let r = s.transpose();
    let restricted_checks = target.h_x.mul(&s.transpose());
    let restricted_logicals = alpha_perp.mul(&target.j_x).mul(&s.transpose());

    let direct = glue_from_span(&restricted_checks, None);
    let mut glue = complete_glue(direct, &restricted_checks, &restricted_logicals, &s, &r, alpha, &alpha_perp);
    if glue.is_none() {
        let widened = glue_from_span(&restricted_checks, Some(&restricted_logicals));
        glue = complete_glue(widened, &restricted_checks, &restricted_logicals, &s, &r, alpha, &alpha_perp);
    }
    let glue = glue.ok_or_else(|| Error::ConstructionFailed("condition iii): β unsolvable on every candidate glue code".into()))?;
    let report = verify_glue(target, &glue);
    if let Some(first) = report.first() {
        return Err(Error::ConstructionFailed(first.clone()));
    }
    Ok(glue)
}

/// Independent nonzero rows of `rows`, then of `extra`, in order.
fn glue_from_span(rows: &BitMatrix, extra: Option<&BitMatrix>) -> BitMatrix {
    let all = match extra {
        Some(e) => BitMatrix::vstack(&[rows, e]).expect("same width"),
        None => rows.clone(),
    };
    let keep = all.independent_rows();
    all.select_rows(&keep)
}

fn complete_glue(
    h_g: BitMatrix,
    restricted_checks: &BitMatrix,
    restricted_logicals: &BitMatrix,
    s: &BitMatrix,
    r: &BitMatrix,
    alpha: &BitMatrix,
    alpha_perp: &BitMatrix,
) -> Option<GlueSet> {
    let t = express_rows(restricted_checks, &h_g)?;
    let beta = express_rows(restricted_logicals, &h_g)?;
    Some(GlueSet {
        h_g,
        s: s.clone(),
        t,
        r: r.clone(),
        beta,
        alpha: alpha.clone(),
        alpha_perp: alpha_perp.clone(),
    })
}

/// Coefficients C with C·basis = rows, if every row lies in the row space.
fn express_rows(rows: &BitMatrix, basis: &BitMatrix) -> Option<BitMatrix> {
    let bt = basis.transpose();
    let mut out = BitMatrix::zeros(rows.rows(), basis.rows());
    for i in 0..rows.rows() {
        let x = solve_linear(&bt, &rows.row(i), SolveMode::Any, DEFAULT_SEARCH_CAP).ok()??;
        out.set_row(i, &x);
    }
    Some(out)
}

/// Checks conditions i)–iii), rank conditions and ‖S‖ = 1. Existence of a
/// valid R and β is re-derived by solving, independent of the stored ones.
pub fn verify_glue(target: &CssCode, glue: &GlueSet) -> Vec<String> {
    let mut out = Vec::new();
    let (n, k) = (target.n, target.k);
    let q = glue.alpha.rows();
    let (n_g, r_g) = (glue.h_g.cols(), glue.h_g.rows());
    let shapes = [
        ("S", glue.s.shape(), (n_g, n)),
        ("T", glue.t.shape(), (target.r_x(), r_g)),
        ("R", glue.r.shape(), (n, n_g)),
        ("beta", glue.beta.shape(), (k - q.min(k), r_g)),
        ("alpha", glue.alpha.shape(), (q, k)),
        ("alpha_perp", glue.alpha_perp.shape(), (k - q.min(k), k)),
    ];
    for (name, got, want) in shapes {
        if got != want {
            out.push(format!("shape: {name} is {got:?}, expected {want:?}"));
        }
    }
    if !out.is_empty() {
        return out;
    }
    if target.h_x.mul(&glue.s.transpose()) != glue.t.mul(&glue.h_g) {
        out.push("condition i): H_X·Sᵀ ≠ T·H_G".to_string());
    }
    let measured = glue.alpha.mul(&target.j_z);
    let through = measured.mul(&glue.r);
    if through.mul(&glue.s) != measured {
        out.push("condition ii): α·J_Z·R·S ≠ α·J_Z".to_string());
    } else if !glue.h_g.mul(&through.transpose()).is_zero() {
        out.push("condition ii): H_G·(α·J_Z·R)ᵀ ≠ 0".to_string());
    }
    if !condition_two_solvable(&measured, glue) {
        out.push("condition ii): no R satisfies both equations".to_string());
    }
    let unmeasured = glue.alpha_perp.mul(&target.j_x).mul(&glue.s.transpose());
    if unmeasured != glue.beta.mul(&glue.h_g) {
        out.push("condition iii): α_⊥·J_X·Sᵀ ≠ β·H_G".to_string());
    }
    if express_rows(&unmeasured, &glue.h_g).is_none() {
        out.push("condition iii): no β exists".to_string());
    }
    if glue.alpha.rank() != q {
        out.push("alpha is not full rank".to_string());
    }
    if glue.alpha_perp.rank() != glue.alpha_perp.rows() {
        out.push("alpha_perp is not full rank".to_string());
    }
    if !glue.alpha_perp.mul(&glue.alpha.transpose()).is_zero() {
        out.push("α_⊥·αᵀ ≠ 0".to_string());
    }
    if (0..n_g).any(|r| glue.s.row_weight(r) != 1) || glue.s.weight_profile().max_col_weight > 1 {
        out.push("‖S‖ ≠ 1: S rows must have weight one and columns weight at most one".to_string());
    }
    out
}

/// Solves x·S = ℓ, H_G·xᵀ = 0 for every measured row ℓ. A valid R then exists
/// because the measured rows are independent.
fn condition_two_solvable(measured: &BitMatrix, glue: &GlueSet) -> bool {
    let system = BitMatrix::vstack(&[&glue.s.transpose(), &glue.h_g]).expect("same width");
    (0..measured.rows()).all(|i| {
        let rhs = BitVec::concat(&[&measured.row(i), &BitVec::zeros(glue.h_g.rows())]);
        matches!(solve_linear(&system, &rhs, SolveMode::Any, DEFAULT_SEARCH_CAP), Ok(Some(_)))
    })
}

/// Tilde lifts of the single-block matrices to k_R blocks.
#[derive(Debug, Clone)]
pub struct Lifted {
    pub h_x: BitMatrix,
    pub h_z: BitMatrix,
    pub j_x: BitMatrix,
    pub j_z: BitMatrix,
    pub alpha: BitMatrix,
    pub alpha_perp: BitMatrix,
    /// Right inverse of α̃_⊥, transposed; selects the unmeasured Z logicals.
    pub alpha_perp_rt: BitMatrix,
    pub s: BitMatrix,
    pub t: BitMatrix,
    pub h_g: BitMatrix,
    pub h_m: BitMatrix,
    pub r: BitMatrix,
    pub beta: BitMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Target(usize),
    /// r_R·n_G qubits from the H_Rᵀ ⊗ E_{n_G} block.
    AncillaLeft,
    /// n_R·r_G qubits from the E_{n_R} ⊗ H_Gᵀ block.
    AncillaRight,
}

#[derive(Debug, Clone)]
pub struct DeformedCode {
    pub css: CssCode,
    pub glue: GlueSet,
    pub r_code: ClassicalCode,
    pub target: CssCode,
    pub lifted: Lifted,
    /// Sector boundaries: (start column, sector) in increasing order.
    pub block_index: Vec<(usize, Sector)>,
}

impl DeformedCode {
    pub fn k_r(&self) -> usize {
        self.r_code.k
    }

    pub fn target_columns(&self) -> usize {
        self.k_r() * self.target.n
    }

    pub fn ancilla_columns(&self) -> usize {
        self.css.n - self.target_columns()
    }

    pub fn sector_of(&self, column: usize) -> Sector {
        let mut found = self.block_index[0].1;
        for &(start, sector) in &self.block_index {
            if column >= start {
                found = sector;
            }
        }
        found
    }
}

/// Assembles the deformed code and its logical generators.
pub fn build_deformed(target: &CssCode, r_code: &ClassicalCode, glue: &GlueSet) -> Result<DeformedCode> {
    let report = verify_glue(target, glue);
    if let Some(first) = report.first() {
        return Err(Error::Precondition(format!("glue invalid: {first}")));
    }
    if !r_code.is_standard_form() {
        return Err(Error::Precondition("R-code generator must be in standard form (E | P)".into()));
    }
    if r_code.h.rank() != r_code.h.rows() {
        return Err(Error::Precondition("R-code check matrix must be full rank".into()));
    }
    let (h_r, g_r) = (&r_code.h, &r_code.g);
    let g_r_inv = g_r
        .right_inverse()
        .ok_or_else(|| Error::Precondition("R-code generator rows dependent".into()))?;
    let (k_r, r_r, n_r) = (g_r.rows(), h_r.rows(), h_r.cols());
    let (n, r_x, r_z) = (target.n, target.r_x(), target.r_z());
    let (n_g, r_g) = (glue.n_g(), glue.r_g());
    let e = BitMatrix::identity;

    let lifted_t_right = g_r_inv.transpose().kron(&glue.t);
    let row1_x = BitMatrix::hstack(&[
        &e(k_r).kron(&target.h_x),
        &BitMatrix::zeros(k_r * r_x, r_r * n_g),
        &lifted_t_right,
    ])?;
    let h_m = BitMatrix::hstack(&[&e(r_r).kron(&glue.h_g), &h_r.kron(&e(r_g))])?;
    let row2_x = BitMatrix::hstack(&[&BitMatrix::zeros(r_r * r_g, k_r * n), &h_m])?;
    let h_x_d = BitMatrix::vstack(&[&row1_x, &row2_x])?;

    let row1_z = BitMatrix::hstack(&[
        &e(k_r).kron(&target.h_z),
        &BitMatrix::zeros(k_r * r_z, r_r * n_g + n_r * r_g),
    ])?;
    let lifted_s = g_r_inv.kron(&glue.s);
    let h_g_tilde = BitMatrix::vstack(&[&h_r.kron(&e(n_g)), &e(n_r).kron(&glue.h_g)])?;
    let row2_z = BitMatrix::hstack(&[&lifted_s, &h_g_tilde.transpose()])?;
    let h_z_d = BitMatrix::vstack(&[&row1_z, &row2_z])?;

    let alpha_perp_inv = glue
        .alpha_perp
        .right_inverse()
        .ok_or_else(|| Error::Internal("α_⊥ lacks a right inverse".into()))?;
    let lifted = Lifted {
        h_x: e(k_r).kron(&target.h_x),
        h_z: e(k_r).kron(&target.h_z),
        j_x: e(k_r).kron(&target.j_x),
        j_z: e(k_r).kron(&target.j_z),
        alpha: e(k_r).kron(&glue.alpha),
        alpha_perp: e(k_r).kron(&glue.alpha_perp),
        alpha_perp_rt: e(k_r).kron(&alpha_perp_inv.transpose()),
        s: lifted_s,
        t: BitMatrix::hstack(&[&BitMatrix::zeros(k_r * r_x, r_r * n_g), &lifted_t_right])?,
        h_g: h_g_tilde,
        h_m,
        r: g_r.kron(&glue.r),
        beta: BitMatrix::hstack(&[
            &BitMatrix::zeros(k_r * glue.alpha_perp.rows(), r_r * n_g),
            &g_r_inv.transpose().kron(&glue.beta),
        ])?,
    };
    let ancilla = r_r * n_g + n_r * r_g;
    let j_x_d = BitMatrix::hstack(&[&lifted.alpha_perp.mul(&lifted.j_x), &lifted.beta])?;
    let j_z_d = BitMatrix::hstack(&[
        &lifted.alpha_perp_rt.mul(&lifted.j_z),
        &BitMatrix::zeros(k_r * glue.alpha_perp.rows(), ancilla),
    ])?;
    let n_d = k_r * n + ancilla;
    let k_d = k_r * glue.alpha_perp.rows();
    let css = CssCode { h_x: h_x_d, h_z: h_z_d, j_x: j_x_d, j_z: j_z_d, n: n_d, k: k_d, d: None };
    let encoded = n_d as isize - css.h_x.rank() as isize - css.h_z.rank() as isize;
    if encoded != k_d as isize {
        return Err(Error::Internal(format!(
            "deformed code encodes {encoded} qubits, expected k_R(k−q) = {k_d}"
        )));
    }
    let mut block_index: Vec<(usize, Sector)> = (0..k_r).map(|j| (j * n, Sector::Target(j))).collect();
    block_index.push((k_r * n, Sector::AncillaLeft));
    block_index.push((k_r * n + r_r * n_g, Sector::AncillaRight));
    Ok(DeformedCode {
        css,
        glue: glue.clone(),
        r_code: r_code.clone(),
        target: target.clone(),
        lifted,
        block_index,
    })
}

/// The five lifted surgery conditions; empty when all hold.
pub fn lifted_condition_report(dc: &DeformedCode) -> Vec<String> {
    let l = &dc.lifted;
    let mut out = Vec::new();
    if l.h_x.mul(&l.s.transpose()) != l.t.mul(&l.h_g) {
        out.push("lifted i): H̃_X·S̃ᵀ ≠ T̃·H̃_G".to_string());
    }
    let measured = l.alpha.mul(&l.j_z);
    let through = measured.mul(&l.r);
    if through.mul(&l.s) != measured {
        out.push("lifted ii): α̃·J̃_Z·R̃·S̃ ≠ α̃·J̃_Z".to_string());
    }
    if !l.h_g.mul(&through.transpose()).is_zero() {
        out.push("lifted ii): H̃_G·(α̃·J̃_Z·R̃)ᵀ ≠ 0".to_string());
    }
    if l.alpha_perp.mul(&l.j_x).mul(&l.s.transpose()) != l.beta.mul(&l.h_g) {
        out.push("lifted iii): α̃_⊥·J̃_X·S̃ᵀ ≠ β̃·H̃_G".to_string());
    }
    if !l.h_m.mul(&l.h_g).is_zero() {
        out.push("lifted iv): H̃_M·H̃_G ≠ 0".to_string());
    }
    out
}

/// Full verification report: glue, lifted conditions and CSS identities.
pub fn deformed_report(dc: &DeformedCode) -> Vec<String> {
    let mut out = verify_glue(&dc.target, &dc.glue);
    out.extend(lifted_condition_report(dc));
    out.extend(validate_css(&dc.css).into_iter().map(|v| format!("deformed code: {v}")));
    let bound = weight_bound(dc);
    let got = dc.css.h_x.weight_profile().max().max(dc.css.h_z.weight_profile().max());
    if got > bound {
        out.push(format!("check weight {got} exceeds bound {bound}"));
    }
    out
}

/// Upper bound on any row or column weight of the deformed checks, from the
/// input weights alone.
pub fn weight_bound(dc: &DeformedCode) -> usize {
    let w = |m: &BitMatrix| m.weight_profile().max();
    let target = w(&dc.target.h_x).max(w(&dc.target.h_z));
    target + w(&dc.glue.t) + w(&dc.glue.s) + w(&dc.glue.h_g) + w(&dc.r_code.h) + w(&dc.r_code.g)
}

/// Coefficient matrix (0 | G_R ⊗ (α·J_Z·R)) whose product with H^D_Z yields
/// the measured logicals on every target copy. Errors if that identity fails.
pub fn measured_extraction(dc: &DeformedCode) -> Result<BitMatrix> {
    let q = dc.glue.q();
    let k_r = dc.k_r();
    let measured = dc.glue.alpha.mul(&dc.target.j_z);
    let right = dc.r_code.g.kron(&measured.mul(&dc.glue.r));
    let coeff = BitMatrix::hstack(&[&BitMatrix::zeros(k_r * q, k_r * dc.target.r_z()), &right])?;
    let lhs = BitMatrix::hstack(&[
        &BitMatrix::identity(k_r).kron(&measured),
        &BitMatrix::zeros(k_r * q, dc.ancilla_columns()),
    ])?;
    if coeff.mul(&dc.css.h_z) != lhs {
        return Err(Error::Internal("measured-logical extraction identity fails".into()));
    }
    Ok(coeff)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DistanceCertificate {
    /// No X or Z logical of weight ≤ budget exists.
    Certified { budget: usize },
    /// A logical operator of weight ≤ budget, with its type.
    Counterexample { x_type: bool, vector: BitVec },
}

/// Largest budget the distance lemma licenses: min{d/‖S‖, d_R} − 1.
pub fn lemma_budget(dc: &DeformedCode) -> Option<usize> {
    let d = dc.target.d?;
    let d_r = dc.r_code.d?;
    let norm_s = dc.glue.s.weight_profile().max().max(1);
    Some((d / norm_s).min(d_r).saturating_sub(1))
}

/// Exhaustive weight-≤budget sweep for logicals of `css`.
pub fn certify_no_low_weight_logical(css: &CssCode, budget: usize) -> Result<DistanceCertificate> {
    let (x, wx) = min_logical(&css.h_z, &css.j_z, budget)?;
    if let (DistanceResult::Exact(_), Some(v)) = (x, wx) {
        return Ok(DistanceCertificate::Counterexample { x_type: true, vector: v });
    }
    let (z, wz) = min_logical(&css.h_x, &css.j_x, budget)?;
    if let (DistanceResult::Exact(_), Some(v)) = (z, wz) {
        return Ok(DistanceCertificate::Counterexample { x_type: false, vector: v });
    }
    Ok(DistanceCertificate::Certified { budget })
}

pub fn verify_distance_bound(dc: &DeformedCode, budget: usize) -> Result<DistanceCertificate> {
    if let Some(max) = lemma_budget(dc) {
        if budget > max {
            return Err(Error::Precondition(format!("budget {budget} exceeds lemma bound {max}")));
        }
    }
    certify_no_low_weight_logical(&dc.css, budget)
}

/// Negative control: zero one Z-check row at a time until the weakened code
/// (logicals recomputed) has a logical of weight ≤ budget. Returns the row and
/// the counterexample.
pub fn corrupted_z_counterexample(dc: &DeformedCode, budget: usize) -> Result<Option<(usize, DistanceCertificate)>> {
    for row in 0..dc.css.h_z.rows() {
        let mut h_z = dc.css.h_z.clone();
        h_z.set_row(row, &BitVec::zeros(h_z.cols()));
        let weakened = CssCode::from_checks(dc.css.h_x.clone(), h_z)?;
        let cert = certify_no_low_weight_logical(&weakened, budget)?;
        if matches!(cert, DistanceCertificate::Counterexample { .. }) {
            return Ok(Some((row, cert)));
        }
    }
    Ok(None)
}

/// Weight profiles of the two deformed check matrices.
pub fn weight_profiles(dc: &DeformedCode) -> (WeightProfile, WeightProfile) {
    (dc.css.h_x.weight_profile(), dc.css.h_z.weight_profile())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{hamming_743, repetition, steane, surface_code_via_hgp};

    #[test]
    fn surface_glue_and_deformed() {
        let target = surface_code_via_hgp(3).unwrap();
        let alpha = BitMatrix::identity(1);
        let glue = build_glue(&target, &alpha).unwrap();
        assert!(verify_glue(&target, &glue).is_empty());
        let dc = build_deformed(&target, &hamming_743(), &glue).unwrap();
        assert!(deformed_report(&dc).is_empty(), "{:?}", deformed_report(&dc));
        assert_eq!(dc.css.n, 4 * 13 + 3 * glue.n_g() + 7 * glue.r_g());
        measured_extraction(&dc).unwrap();
    }

    #[test]
    fn degenerate_r_code() {
        let target = steane();
        let glue = build_glue(&target, &BitMatrix::identity(1)).unwrap();
        let dc = build_deformed(&target, &repetition(1), &glue).unwrap();
        assert!(deformed_report(&dc).is_empty());
        assert_eq!(dc.css.h_x.rows(), target.r_x());
    }

    #[test]
    fn empty_measurement() {
        let target = steane();
        let glue = build_glue(&target, &BitMatrix::zeros(0, 1)).unwrap();
        assert_eq!(glue.n_g(), 0);
        assert!(verify_glue(&target, &glue).is_empty());
    }
}
