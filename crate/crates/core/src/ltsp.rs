//! Resource states for teleported Z-check measurement and their preparation
//! over blocks of a classical locally testable code (the F code).
//!
//! Register layout of the preparation circuit: B and C hold `n_F·n` qubits
//! each, D holds `n_F·r_Z`. Qubit `f·n + i` of B or C is position `f` of the
//! F-code block that carries source column `i`; D is laid out as `f·r_Z + b`.
//! After decoding, layer `j < k_F` of B and C holds copy `j` of the resource
//! state.

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::codes::{preimage_factor, soundness, validate_css, ClassicalCode, CssCode};
use crate::gf2::{solve_linear, BitMatrix, BitVec, SolveMode, DEFAULT_SEARCH_CAP};
use crate::sim::{Basis, Circuit, CircuitBuilder, FaultPath, Register};
use crate::state::CssState;
use crate::{Error, Result};

/// Stabilizer generators of the 2n-qubit resource state on blocks (B, C).
#[derive(Debug, Clone)]
pub struct ResourceStateSpec {
    /// Rows (H_X | H_X) and (J_X | J_X).
    pub h_rs_x: BitMatrix,
    /// Rows (E | E) and (0 | H_Z).
    pub h_rs_z: BitMatrix,
    pub source: CssCode,
}

pub fn resource_state(source: &CssCode) -> Result<ResourceStateSpec> {
    let issues = validate_css(source);
    if !issues.is_empty() {
        return Err(Error::Precondition(format!("invalid source code: {}", issues.join("; "))));
    }
    let n = source.n;
    let h_rs_x = BitMatrix::vstack(&[
        &BitMatrix::hstack(&[&source.h_x, &source.h_x])?,
        &BitMatrix::hstack(&[&source.j_x, &source.j_x])?,
    ])?;
    let h_rs_z = BitMatrix::vstack(&[
        &BitMatrix::hstack(&[&BitMatrix::identity(n), &BitMatrix::identity(n)])?,
        &BitMatrix::hstack(&[&BitMatrix::zeros(source.r_z(), n), &source.h_z])?,
    ])?;
    if !h_rs_x.mul(&h_rs_z.transpose()).is_zero() {
        return Err(Error::Internal("resource X and Z generators do not commute".into()));
    }
    let total = h_rs_x.rank() + h_rs_z.rank();
    if total != 2 * n {
        return Err(Error::Internal(format!("resource stabilizer rank {total} ≠ {}", 2 * n)));
    }
    let (bx, bz) = bell_rewrite(source)?;
    if bx.rank() != n || bz.rank() != n {
        return Err(Error::Internal("Bell-pair rewrite does not span the Bell stabilizer".into()));
    }
    Ok(ResourceStateSpec { h_rs_x, h_rs_z, source: source.clone() })
}

/// Alternative generators of the Bell stabilizer (E | E): the X side stacks
/// H_X, J_X and the transposed right inverse of H_Z, duplicated on both
/// blocks; the Z side is dual.
pub fn bell_rewrite(source: &CssCode) -> Result<(BitMatrix, BitMatrix)> {
    let dup = |m: &BitMatrix| BitMatrix::hstack(&[m, m]);
    let hz_rt = source.h_z.generalized_right_inverse().transpose();
    let hx_rt = source.h_x.generalized_right_inverse().transpose();
    let x = BitMatrix::vstack(&[&dup(&source.h_x)?, &dup(&source.j_x)?, &dup(&hz_rt)?])?;
    let z = BitMatrix::vstack(&[&dup(&hx_rt)?, &dup(&source.j_z)?, &dup(&source.h_z)?])?;
    Ok((x, z))
}

/// Check matrix of the column space of H_F: its rows span the left kernel.
pub fn colspace_check(h_f: &BitMatrix) -> BitMatrix {
    h_f.transpose().kernel()
}

/// The preparation circuit with handles on its registers and outcome blocks.
#[derive(Debug, Clone)]
pub struct LtspCircuit {
    pub circuit: Circuit,
    pub source: CssCode,
    pub f: ClassicalCode,
    pub b: Register,
    pub c: Register,
    pub d: Register,
    pub n_d: usize,
    pub r_z: usize,
    pub n_f: usize,
    pub k_f: usize,
    pub r_f: usize,
    pub spec: ResourceStateSpec,
}

/// Names of the Z-error location groups in lemma order.
pub const Z_LAYOUT: [&str; 15] =
    ["B1", "B2", "B3", "B4", "B5", "B6", "C1", "C2", "C3", "C4", "C5", "C6", "D1", "D2", "D3"];
/// X-error layout: the Z layout plus the parity-check outcome flips on B and C.
pub const X_LAYOUT: [&str; 17] = [
    "B1", "B2", "B3", "B4", "B5", "B6", "C1", "C2", "C3", "C4", "C5", "C6", "D1", "D2", "D3", "vB", "vC",
];

/// Parity part P of a standard-form generator (E | P).
fn parity_part(f: &ClassicalCode) -> BitMatrix {
    f.g.submatrix(0, f.k, f.k, f.n - f.k)
}

/// X feedback from the D readout: maps ν to a pattern on one of B or C.
fn nu_feedback(source: &CssCode, f: &ClassicalCode) -> BitMatrix {
    let gr = BitMatrix::identity(f.n).select_columns(&(0..f.k).collect::<Vec<_>>());
    let hz_rt = source.h_z.generalized_right_inverse().transpose();
    gr.kron(&BitMatrix::identity(source.r_z())).mul(&f.g.kron(&hz_rt)).transpose()
}

pub fn build_prep_circuit(source: &CssCode, f: &ClassicalCode) -> Result<LtspCircuit> {
    if !f.is_standard_form() {
        return Err(Error::Precondition("F-code generator is not in standard form (E | P)".into()));
    }
    if f.k == 0 {
        return Err(Error::Precondition("F code encodes no bits".into()));
    }
    let spec = resource_state(source)?;
    let (n_d, r_z) = (source.n, source.r_z());
    let (n_f, k_f, r_f) = (f.n, f.k, f.r());
    let mut bld = CircuitBuilder::new();
    let b = bld.register("B", n_f * n_d);
    let c = bld.register("C", n_f * n_d);
    let d = bld.register("D", n_f * r_z);
    bld.init(Basis::Z, b.qubits());
    bld.init(Basis::X, c.qubits());
    bld.init(Basis::Z, d.qubits());
    bld.tick("B1", &b.qubits(), 1.0);
    bld.tick("C1", &c.qubits(), 1.0);
    bld.tick("D1", &d.qubits(), 1.0);
    bld.transversal_cnot(c.qubits(), b.qubits());
    bld.tick("B2", &b.qubits(), 1.0);
    bld.tick("C2", &c.qubits(), 1.0);
    bld.tick("D2", &d.qubits(), 1.0);
    bld.cnot(c.qubits(), d.qubits(), BitMatrix::identity(n_f).kron(&source.h_z));
    bld.tick("B3", &b.qubits(), 1.0);
    bld.tick("C3", &c.qubits(), 1.0);
    bld.tick("D3", &d.qubits(), 1.0);
    let nu = bld.measure(Basis::Z, d.qubits(), "nu", None);
    let fb = nu_feedback(source, f);
    bld.feedback(Basis::X, b.qubits(), fb.clone(), nu.clone().collect());
    bld.feedback(Basis::X, c.qubits(), fb, nu.collect());
    bld.tick("B4", &b.qubits(), 1.0);
    bld.tick("C4", &c.qubits(), 1.0);
    let pcm = f.h.kron(&BitMatrix::identity(n_d));
    bld.measure_pauli(Basis::Z, b.qubits(), pcm.clone(), "eta_B", Some("vB"));
    bld.measure_pauli(Basis::Z, c.qubits(), pcm, "eta_C", Some("vC"));
    bld.tick("B5", &b.qubits(), 1.0);
    bld.tick("C5", &c.qubits(), 1.0);
    let decode = parity_part(f).kron(&BitMatrix::identity(n_d));
    for (reg, label) in [(&b, "mu_B"), (&c, "mu_C")] {
        let parity = reg.slice(k_f * n_d, (n_f - k_f) * n_d);
        let mu = bld.measure(Basis::X, parity, label, None);
        bld.feedback(Basis::Z, reg.slice(0, k_f * n_d), decode.clone(), mu.collect());
    }
    bld.tick("B6", &b.slice(0, k_f * n_d), 1.0);
    bld.tick("C6", &c.slice(0, k_f * n_d), 1.0);
    Ok(LtspCircuit {
        circuit: bld.build(),
        source: source.clone(),
        f: f.clone(),
        b,
        c,
        d,
        n_d,
        r_z,
        n_f,
        k_f,
        r_f,
        spec,
    })
}

impl LtspCircuit {
    pub fn z_layout(&self) -> Vec<usize> {
        self.circuit.layout(&Z_LAYOUT).expect("groups exist")
    }

    pub fn x_layout(&self) -> Vec<usize> {
        self.circuit.layout(&X_LAYOUT).expect("groups exist")
    }

    /// Qubits of copy `j` on B followed by those on C.
    pub fn copy_qubits(&self, j: usize) -> Vec<usize> {
        let mut q = self.b.slice(j * self.n_d, self.n_d);
        q.extend(self.c.slice(j * self.n_d, self.n_d));
        q
    }

    /// Detector matrix over the outcome record; rows follow H^sp_Z.
    pub fn detector_matrix(&self) -> BitMatrix {
        let c = &self.circuit;
        let eta_b = c.outcome_group("eta_B").unwrap();
        let eta_c = c.outcome_group("eta_C").unwrap();
        let nu = c.outcome_group("nu").unwrap();
        let h_m = colspace_check(&self.f.h);
        let e_nd = BitMatrix::identity(self.n_d);
        let m_blk = h_m.kron(&e_nd);
        let rows = [m_blk.rows(), m_blk.rows(), self.r_f * self.n_d, self.r_f * self.r_z];
        let mut det = BitMatrix::zeros(rows.iter().sum(), c.num_outcomes());
        let mut place = |r0: usize, c0: usize, m: &BitMatrix| {
            for r in 0..m.rows() {
                for col in m.row(r).ones() {
                    det.flip(r0 + r, c0 + col);
                }
            }
        };
        place(0, eta_b.start, &m_blk);
        place(rows[0], eta_c.start, &m_blk);
        let e_big = BitMatrix::identity(self.r_f * self.n_d);
        place(rows[0] + rows[1], eta_b.start, &e_big);
        place(rows[0] + rows[1], eta_c.start, &e_big);
        let r4 = rows[0] + rows[1] + rows[2];
        place(r4, eta_c.start, &BitMatrix::identity(self.r_f).kron(&self.source.h_z));
        place(r4, nu.start, &self.f.h.kron(&BitMatrix::identity(self.r_z)));
        det
    }

    /// Runs the circuit without faults on a stabilizer simulator and returns
    /// every deviation from the expected resource state and zero detectors.
    pub fn noiseless_report(&self, seed: u64) -> Result<Vec<String>> {
        let spec = &self.spec;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = CssState::zeros(self.circuit.num_qubits());
        let outcomes = state.run(&self.circuit, &mut rng);
        let mut out = Vec::new();
        let det = self.detector_matrix().mul_vec(&outcomes);
        if !det.is_zero() {
            out.push(format!("{} detectors fire on a noiseless run", det.weight()));
        }
        let n = state.num_qubits();
        for j in 0..self.k_f {
            let qubits = self.copy_qubits(j);
            for (basis, m) in [(Basis::X, &spec.h_rs_x), (Basis::Z, &spec.h_rs_z)] {
                for r in 0..m.rows() {
                    let mut pattern = BitVec::zeros(n);
                    for i in m.row(r).ones() {
                        pattern.set(qubits[i], true);
                    }
                    match state.sign_of(basis, &pattern) {
                        Some(false) => {}
                        Some(true) => out.push(format!("copy {j}: {basis:?} generator {r} has sign −1")),
                        None => out.push(format!("copy {j}: {basis:?} generator {r} not stabilized")),
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Spacetime propagation matrices for one output copy, with the shared
/// detection matrix.
#[derive(Debug, Clone)]
pub struct SpPropagation {
    pub copy: usize,
    /// Columns follow `Z_LAYOUT`.
    pub j_x: BitMatrix,
    /// Columns follow `X_LAYOUT`.
    pub j_z: BitMatrix,
    pub h_z: BitMatrix,
}

fn unit_row(len: usize, j: usize) -> BitMatrix {
    BitVec::unit(len, j).as_row()
}

pub fn sp_matrices(lt: &LtspCircuit, copy: usize) -> Result<SpPropagation> {
    if copy >= lt.k_f {
        return Err(Error::Precondition(format!("copy {copy} outside 0..{}", lt.k_f)));
    }
    let src = &lt.source;
    let (n_d, r_z, n_f, k_f, r_f) = (lt.n_d, lt.r_z, lt.n_f, lt.k_f, lt.r_f);
    let g_j = lt.f.g.select_rows(&[copy]);
    let gr_j = unit_row(n_f, copy);
    let e_j = unit_row(k_f, copy);
    let wide = n_f * n_d;
    let narrow = k_f * n_d;
    let z_widths: Vec<usize> = [vec![wide; 5], vec![narrow], vec![wide; 5], vec![narrow], vec![n_f * r_z; 3]].concat();

    let hj = BitMatrix::vstack(&[&src.h_x, &src.j_x])?;
    let gh = g_j.kron(&hj);
    let eh = e_j.kron(&hj);
    let mut row: Vec<Option<&BitMatrix>> = vec![None];
    row.extend([Some(&gh); 4]);
    row.push(Some(&eh));
    row.extend([Some(&gh); 5]);
    row.push(Some(&eh));
    row.extend([None; 3]);
    let j_x = BitMatrix::blocks(&[hj.rows()], &z_widths, &[row])?;

    let m_rows = colspace_check(&lt.f.h).rows();
    let mut x_widths = z_widths.clone();
    x_widths.extend([r_f * n_d, r_f * n_d]);
    let e_nd = BitMatrix::identity(n_d);
    let gre = gr_j.kron(&e_nd);
    let ee = e_j.kron(&e_nd);
    let grh = gr_j.kron(&src.h_z);
    let eh_z = e_j.kron(&src.h_z);
    let grd = gr_j.kron(&BitMatrix::identity(r_z));
    let mut top: Vec<Option<&BitMatrix>> = vec![Some(&gre); 5];
    top.push(Some(&ee));
    top.push(None);
    top.extend([Some(&gre); 4]);
    top.push(Some(&ee));
    top.extend([None; 5]);
    let mut bottom: Vec<Option<&BitMatrix>> = vec![None; 8];
    bottom.extend([Some(&grh); 3]);
    bottom.push(Some(&eh_z));
    bottom.extend([Some(&grd); 3]);
    bottom.extend([None; 2]);
    let j_z = BitMatrix::blocks(&[n_d, r_z], &x_widths, &[top, bottom])?;

    let h_m = colspace_check(&lt.f.h);
    let hme = h_m.kron(&e_nd);
    let hfe = lt.f.h.kron(&e_nd);
    let hfh = lt.f.h.kron(&src.h_z);
    let hfd = lt.f.h.kron(&BitMatrix::identity(r_z));
    let ebig = BitMatrix::identity(r_f * n_d);
    let eh_f = BitMatrix::identity(r_f).kron(&src.h_z);
    let mut r1: Vec<Option<&BitMatrix>> = vec![None; 15];
    r1.extend([Some(&hme), None]);
    let mut r2: Vec<Option<&BitMatrix>> = vec![None; 15];
    r2.extend([None, Some(&hme)]);
    let mut r3: Vec<Option<&BitMatrix>> = vec![Some(&hfe); 4];
    r3.extend([None, None, None]);
    r3.extend([Some(&hfe); 3]);
    r3.extend([None; 5]);
    r3.extend([Some(&ebig), Some(&ebig)]);
    let mut r4: Vec<Option<&BitMatrix>> = vec![None; 8];
    r4.extend([Some(&hfh); 2]);
    r4.extend([None, None]);
    r4.extend([Some(&hfd); 3]);
    r4.extend([None, Some(&eh_f)]);
    let h_z = BitMatrix::blocks(&[m_rows * n_d, m_rows * n_d, r_f * n_d, r_f * r_z], &x_widths, &[r1, r2, r3, r4])?;
    Ok(SpPropagation { copy, j_x, j_z, h_z })
}

/// [(G_F)_j ⊗ H_X][E ⊗ H_Zᵀ] = 0 and the same with J_X: X operators on C do
/// not spread into D through the generalized CNOT.
pub fn no_propagation_identity(source: &CssCode, f: &ClassicalCode, copy: usize) -> bool {
    let g_j = f.g.select_rows(&[copy]);
    let coupling_t = BitMatrix::identity(f.n).kron(&source.h_z.transpose());
    g_j.kron(&source.h_x).mul(&coupling_t).is_zero() && g_j.kron(&source.j_x).mul(&coupling_t).is_zero()
}

/// Compares the displayed matrices with single-fault frame propagation
/// through the circuit. Returns mismatch descriptions.
pub fn verify_against_circuit(lt: &LtspCircuit, spp: &SpPropagation) -> Result<Vec<String>> {
    let spec = &lt.spec;
    let c = &lt.circuit;
    let qubits = lt.copy_qubits(spp.copy);
    let det = lt.detector_matrix();
    let restrict = |v: &BitVec| BitVec::from_bools(&qubits.iter().map(|&q| v.get(q)).collect::<Vec<_>>());
    let z_layout = lt.z_layout();
    let x_layout = lt.x_layout();
    let mut out: Vec<String> = z_layout
        .par_iter()
        .enumerate()
        .filter_map(|(col, &loc)| {
            let fr = c.propagate(&FaultPath::single(c, Basis::Z, loc));
            let got = spec.h_rs_x.mul_vec(&restrict(&fr.z));
            (got != spp.j_x.column(col)).then(|| format!("J_X column {col} disagrees with propagation"))
        })
        .collect();
    out.extend(x_layout.par_iter().enumerate().filter_map(|(col, &loc)| {
        let fr = c.propagate(&FaultPath::single(c, Basis::X, loc));
        let mut msgs = Vec::new();
        if spec.h_rs_z.mul_vec(&restrict(&fr.x)) != spp.j_z.column(col) {
            msgs.push(format!("J_Z column {col} disagrees with propagation"));
        }
        if det.mul_vec(&fr.flips) != spp.h_z.column(col) {
            msgs.push(format!("H_Z column {col} disagrees with detectors"));
        }
        (!msgs.is_empty()).then(|| msgs.join("; "))
    }).collect::<Vec<_>>());
    Ok(out)
}

/// Residual Z error on one copy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZBound {
    pub e_rs: BitVec,
    pub ok: bool,
}

fn segment(e: &BitVec, widths: &[usize], idx: usize) -> BitVec {
    let start: usize = widths[..idx].iter().sum();
    e.slice(start, widths[idx])
}

fn z_widths(lt: &LtspCircuit) -> Vec<usize> {
    let wide = lt.n_f * lt.n_d;
    let narrow = lt.k_f * lt.n_d;
    [vec![wide; 5], vec![narrow], vec![wide; 5], vec![narrow], vec![lt.n_f * lt.r_z; 3]].concat()
}

fn x_widths(lt: &LtspCircuit) -> Vec<usize> {
    let mut w = z_widths(lt);
    w.extend([lt.r_f * lt.n_d; 2]);
    w
}

fn sum_segments(e: &BitVec, widths: &[usize], idx: &[usize]) -> BitVec {
    let mut acc = BitVec::zeros(widths[idx[0]]);
    for &i in idx {
        acc.xor_assign(&segment(e, widths, i));
    }
    acc
}

/// Column `j` of the n_D-row matrix whose column stacking is `v`.
fn column_of(v: &BitVec, rows: usize, j: usize) -> BitVec {
    v.slice(j * rows, rows)
}

/// Z faults over `Z_LAYOUT` to the equivalent error (0 | u_eff) on one copy.
pub fn check_z_bound(lt: &LtspCircuit, spp: &SpPropagation, e: &BitVec) -> Result<ZBound> {
    let w = z_widths(lt);
    if e.len() != w.iter().sum::<usize>() {
        return Err(Error::Shape(format!("Z fault vector length {}", e.len())));
    }
    // B2..B5 and C1..C5.
    let u = sum_segments(e, &w, &[1, 2, 3, 4, 6, 7, 8, 9, 10]);
    let u_last = sum_segments(e, &w, &[5, 11]);
    let g_j = lt.f.g.row(spp.copy);
    let mut u_eff = BitVec::zeros(lt.n_d);
    for f in g_j.ones() {
        u_eff.xor_assign(&column_of(&u, lt.n_d, f));
    }
    u_eff.xor_assign(&column_of(&u_last, lt.n_d, spp.copy));
    let e_rs = BitVec::concat(&[&BitVec::zeros(lt.n_d), &u_eff]);
    let spec = &lt.spec;
    if spec.h_rs_x.mul_vec(&e_rs) != spp.j_x.mul_vec(e) {
        return Err(Error::Internal("Z-error equivalence identity fails".into()));
    }
    Ok(ZBound { ok: e_rs.weight() <= e.weight(), e_rs })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XBound {
    Detected,
    Residual { e_rs: BitVec, ok: bool },
    /// The distance argument of the lemma does not apply: the undetectable
    /// fault is not equivalent to any error built from the minimum-weight
    /// preimages. Only possible at or above the weight threshold.
    Inequivalent,
}

/// Constants of the X-error bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpzFactors {
    pub omega_dz: usize,
    pub soundness: Option<Ratio<u64>>,
    /// max{1, n_F/(r_F s)}
    pub factor: Ratio<u64>,
    /// d_F / (ω · factor); faults must be strictly lighter.
    pub threshold: Ratio<u64>,
}

pub fn spz_factors(lt: &LtspCircuit) -> Result<SpzFactors> {
    let omega_dz = lt.source.h_z.weight_profile().max().max(1);
    let d_f = lt.f.d.ok_or_else(|| Error::Precondition("F-code distance unknown".into()))?;
    let (s, factor) = if lt.r_f == 0 {
        (None, Ratio::from_integer(1))
    } else {
        let s = match lt.f.soundness {
            Some(s) => s,
            None => soundness(&lt.f)?,
        };
        (Some(s), preimage_factor(&lt.f, s))
    };
    let threshold = Ratio::from_integer(d_f as u64) / (factor * Ratio::from_integer(omega_dz as u64));
    Ok(SpzFactors { omega_dz, soundness: s, factor, threshold })
}

/// X faults over `X_LAYOUT` (outcome flips included) to the equivalent
/// error (u_eff,B | u_eff,C) on one copy, following the lemma construction.
pub fn check_x_bound(lt: &LtspCircuit, spp: &SpPropagation, factors: &SpzFactors, e: &BitVec) -> Result<XBound> {
    let w = x_widths(lt);
    if e.len() != w.iter().sum::<usize>() {
        return Err(Error::Shape(format!("X fault vector length {}", e.len())));
    }
    if !spp.h_z.mul_vec(e).is_zero() {
        return Ok(XBound::Detected);
    }
    let n_d = lt.n_d;
    let preimage = |v: &BitVec| -> Result<BitVec> {
        // Row a of V sits at indices ρ·n_D + a; solve H_F wᵀ = V_aᵀ per row.
        let mut w_mat = BitVec::zeros(lt.n_f * n_d);
        for a in 0..n_d {
            let row = BitVec::from_bools(&(0..lt.r_f).map(|rho| v.get(rho * n_d + a)).collect::<Vec<_>>());
            if row.is_zero() {
                continue;
            }
            let sol = solve_linear(&lt.f.h, &row, SolveMode::MinWeight, DEFAULT_SEARCH_CAP)?
                .ok_or_else(|| Error::Internal("undetected outcome flips outside the column space".into()))?;
            let bound = factors.factor * Ratio::from_integer(row.weight() as u64);
            if Ratio::from_integer(sol.weight() as u64) > bound {
                return Err(Error::Internal("preimage heavier than the local-testability bound".into()));
            }
            for f in sol.ones() {
                w_mat.set(f * n_d + a, true);
            }
        }
        Ok(w_mat)
    };
    let w_b = preimage(&segment(e, &w, 15))?;
    let w_c = preimage(&segment(e, &w, 16))?;
    let j = spp.copy;
    let eff = |w_mat: &BitVec, prime: usize, second: usize| {
        let mut u = column_of(w_mat, n_d, j);
        u.xor_assign(&column_of(&segment(e, &w, prime), n_d, j));
        u.xor_assign(&column_of(&segment(e, &w, second), n_d, j));
        u
    };
    let u_b = eff(&w_b, 4, 5);
    let u_c = eff(&w_c, 10, 11);
    let e_rs = BitVec::concat(&[&u_b, &u_c]);
    let spec = &lt.spec;
    if spec.h_rs_z.mul_vec(&e_rs) != spp.j_z.mul_vec(e) {
        return Ok(XBound::Inequivalent);
    }
    let bound = factors.factor * Ratio::from_integer(e.weight() as u64);
    let ok = Ratio::from_integer(e_rs.weight() as u64) <= bound;
    Ok(XBound::Residual { e_rs, ok })
}

/// Outcome counts of a lemma sweep.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SweepTally {
    pub checked: u64,
    pub detected: u64,
    pub violations: u64,
    /// Undetectable faults the lemma construction does not reach (above threshold).
    pub inequivalent: u64,
}

impl SweepTally {
    fn merge(mut self, o: SweepTally) -> SweepTally {
        self.checked += o.checked;
        self.detected += o.detected;
        self.violations += o.violations;
        self.inequivalent += o.inequivalent;
        self
    }
}

fn pairs(n: usize, max_weight: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    if max_weight >= 2 {
        for i in 0..n {
            for j in i + 1..n {
                out.push(vec![i, j]);
            }
        }
    }
    out
}

/// Exhaustive Z-fault sweep at weight ≤ `max_weight` (at most 2) for every copy.
pub fn sweep_z(lt: &LtspCircuit, max_weight: usize) -> Result<SweepTally> {
    let len: usize = z_widths(lt).iter().sum();
    let supports = pairs(len, max_weight.min(2));
    let mut total = SweepTally::default();
    if max_weight == 0 {
        return Ok(total);
    }
    for j in 0..lt.k_f {
        let spp = sp_matrices(lt, j)?;
        let t = supports
            .par_iter()
            .map(|s| {
                let e = BitVec::from_indices(len, s);
                let r = check_z_bound(lt, &spp, &e)?;
                Ok(SweepTally { checked: 1, violations: (!r.ok) as u64, ..Default::default() })
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(SweepTally::default(), SweepTally::merge);
        total = total.merge(t);
    }
    Ok(total)
}

fn tally_x(lt: &LtspCircuit, spp: &SpPropagation, factors: &SpzFactors, e: &BitVec) -> Result<SweepTally> {
    let mut t = SweepTally { checked: 1, ..Default::default() };
    match check_x_bound(lt, spp, factors, e)? {
        XBound::Detected => t.detected = 1,
        XBound::Residual { ok, .. } => t.violations = (!ok) as u64,
        XBound::Inequivalent => t.inequivalent = 1,
    }
    Ok(t)
}

/// Exhaustive X-fault sweep (weight ≤ 2) for every copy.
pub fn sweep_x(lt: &LtspCircuit, max_weight: usize) -> Result<SweepTally> {
    let factors = spz_factors(lt)?;
    let len: usize = x_widths(lt).iter().sum();
    let mut total = SweepTally::default();
    if max_weight == 0 {
        return Ok(total);
    }
    let supports = pairs(len, max_weight.min(2));
    for j in 0..lt.k_f {
        let spp = sp_matrices(lt, j)?;
        let t = supports
            .par_iter()
            .map(|s| tally_x(lt, &spp, &factors, &BitVec::from_indices(len, s)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(SweepTally::default(), SweepTally::merge);
        total = total.merge(t);
    }
    Ok(total)
}

/// Random weight-`weight` X faults. Weight-2 draws are biased towards
/// undetectable faults by pairing locations with equal detector columns.
pub fn sample_x(lt: &LtspCircuit, weight: usize, samples: u64, seed: u64) -> Result<SweepTally> {
    use rand::seq::index::sample;
    let factors = spz_factors(lt)?;
    let len: usize = x_widths(lt).iter().sum();
    let spps: Vec<SpPropagation> = (0..lt.k_f).map(|j| sp_matrices(lt, j)).collect::<Result<_>>()?;
    // Undetectable weight-w faults are rare under uniform draws; build them
    // from pairs of locations with identical detector columns instead.
    let h = &spps[0].h_z;
    let mut by_syndrome: std::collections::HashMap<BitVec, Vec<usize>> = std::collections::HashMap::new();
    for col in 0..len {
        by_syndrome.entry(h.column(col)).or_default().push(col);
    }
    let classes: Vec<Vec<usize>> = by_syndrome.into_values().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = SweepTally::default();
    let mut drawn = 0u64;
    while drawn < samples {
        let e = match weight {
            2 => {
                // Pick a class with the zero column or two members, so the fault cancels.
                let class = &classes[rand::Rng::gen_range(&mut rng, 0..classes.len())];
                let zero_class = h.column(class[0]).is_zero();
                if zero_class && class.len() >= weight {
                    let idx = sample(&mut rng, class.len(), weight);
                    BitVec::from_indices(len, &idx.iter().map(|i| class[i]).collect::<Vec<_>>())
                } else if !zero_class && class.len() >= 2 && weight == 2 {
                    let idx = sample(&mut rng, class.len(), 2);
                    BitVec::from_indices(len, &[class[idx.index(0)], class[idx.index(1)]])
                } else {
                    continue;
                }
            }
            _ => BitVec::from_indices(len, &sample(&mut rng, len, weight.min(len)).into_vec()),
        };
        let j = rand::Rng::gen_range(&mut rng, 0..lt.k_f);
        total = total.merge(tally_x(lt, &spps[j], &factors, &e)?);
        drawn += 1;
    }
    Ok(total)
}
