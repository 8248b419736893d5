//! Teleported parity-check measurement and single-round code surgery.
//!
//! A teleported round measures the checks of one type by coupling the input
//! block into a prepared resource state and reading both blocks out
//! transversally; the data reappears on a fresh block after Pauli feedback.
//! Code surgery runs one such round for the Z checks of the deformed code,
//! reads the ancilla out in X, and runs a second round for the X checks of the
//! memory blocks.
//!
//! Every circuit exists twice where it matters: a reduced form with faults
//! only at the boundaries of the rounds, matching the block layouts used in
//! the effective-error lemmas, and an expanded form in which each round is
//! built from primitive operations with its own fault locations.

use std::collections::HashMap;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::codes::CssCode;
use crate::gf2::{BitMatrix, BitVec};
use crate::ltsp::{resource_state, ResourceStateSpec};
use crate::sim::{trial_rng, Basis, Circuit, CircuitBuilder, FaultPath, Frame, Register};
use crate::state::CssState;
use crate::surgery::{lemma_budget, measured_extraction, DeformedCode};
use crate::{Error, Result};

/// Location groups of a teleported measurement, in column order.
pub const TELE_LAYOUT: [&str; 7] = ["A1", "A2", "B1", "B2", "C1", "C2", "C3"];

/// Location groups of the reduced surgery circuit, in column order.
pub const SURGERY_LAYOUT: [&str; 6] = ["M1", "M2", "M3", "M4", "A1", "A2"];

fn checks_of(code: &CssCode, basis: Basis) -> &BitMatrix {
    match basis {
        Basis::X => &code.h_x,
        Basis::Z => &code.h_z,
    }
}

fn gather(v: &BitVec, qubits: &[usize]) -> BitVec {
    let mut out = BitVec::zeros(qubits.len());
    for (i, &q) in qubits.iter().enumerate() {
        out.set(i, v.get(q));
    }
    out
}

fn range_bits(v: &BitVec, r: &Range<usize>) -> BitVec {
    v.slice(r.start, r.end - r.start)
}

fn embed(n: usize, qubits: &[usize], local: &BitVec) -> BitVec {
    let mut out = BitVec::zeros(n);
    for i in local.ones() {
        out.set(qubits[i], true);
    }
    out
}

/// Registers and outcome ranges of one teleported round.
#[derive(Debug, Clone)]
pub struct TeleRound {
    pub measured: Basis,
    pub b: Register,
    pub c: Register,
    /// Input block read out in the dual basis.
    pub mu_a: Range<usize>,
    /// Resource block B read out in the measured basis.
    pub mu_b: Range<usize>,
}

/// Registers `{prefix}B`, `{prefix}C` and prepares them noiselessly in the
/// resource state: B is projected onto the check group with its signs fixed,
/// then copied onto C.
fn append_resource(b: &mut CircuitBuilder, code: &CssCode, measured: Basis, prefix: &str) -> (Register, Register) {
    let n = code.n;
    let rb = b.register(&format!("{prefix}B"), n);
    let rc = b.register(&format!("{prefix}C"), n);
    let checks = checks_of(code, measured).clone();
    b.init(measured.dual(), rb.qubits());
    let prep = b.measure_pauli(measured, rb.qubits(), checks.clone(), &format!("{prefix}prep"), None);
    b.feedback(measured.dual(), rb.qubits(), checks.generalized_right_inverse(), prep.collect());
    b.init(measured, rc.qubits());
    match measured {
        Basis::Z => b.transversal_cnot(rb.qubits(), rc.qubits()),
        Basis::X => b.transversal_cnot(rc.qubits(), rb.qubits()),
    }
    (rb, rc)
}

/// Appends a teleported measurement of the `measured`-type checks of `code`
/// acting on `input`. The caller opens the input locations before the round
/// and the output locations after it; the round opens `{prefix}A2`, `B1`,
/// `B2`, `C1` and `C2`.
fn append_round(b: &mut CircuitBuilder, code: &CssCode, measured: Basis, input: &[usize], prefix: &str) -> TeleRound {
    let n = code.n;
    let name = |s: &str| format!("{prefix}{s}");
    let (rb, rc) = append_resource(b, code, measured, prefix);
    b.tick(&name("B1"), &rb.qubits(), 1.0);
    b.tick(&name("C1"), &rc.qubits(), 1.0);
    match measured {
        Basis::Z => b.transversal_cnot(input.to_vec(), rb.qubits()),
        Basis::X => b.transversal_cnot(rb.qubits(), input.to_vec()),
    }
    b.tick(&name("A2"), input, 1.0);
    b.tick(&name("B2"), &rb.qubits(), 1.0);
    b.tick(&name("C2"), &rc.qubits(), 1.0);
    let mu_a = b.measure(measured.dual(), input.to_vec(), &name("mu_A"), None);
    let mu_b = b.measure(measured, rb.qubits(), &name("mu_B"), None);
    b.feedback(measured.dual(), rc.qubits(), BitMatrix::identity(n), mu_b.clone().collect());
    b.feedback(measured, rc.qubits(), BitMatrix::identity(n), mu_a.clone().collect());
    TeleRound { measured, b: rb, c: rc, mu_a, mu_b }
}

/// Propagation matrices of a teleported Z-check measurement over the seven
/// column blocks of [`TELE_LAYOUT`]. For an X-check measurement every matrix
/// is built from the dual code, so X and Z trade places throughout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeleMatrices {
    /// Transport of X(H_X), X(J_X); flipped by Z errors.
    pub j_x: BitMatrix,
    /// Transport of the unmeasured Z operators; flipped by X errors.
    pub j_z: BitMatrix,
    /// Transport of the measured Z(H_Z).
    pub j_mz: BitMatrix,
    /// Flips of the measurement outcome.
    pub j_oc: BitMatrix,
}

impl TeleMatrices {
    fn new(view: &CssCode) -> Result<Self> {
        let n = view.n;
        let top_x = BitMatrix::vstack(&[&view.h_x, &view.j_x])?;
        let hx_rt = view.h_x.generalized_right_inverse().transpose();
        let top_z = BitMatrix::vstack(&[&hx_rt, &view.j_z])?;
        let zx = BitMatrix::zeros(top_x.rows(), n);
        let zz = BitMatrix::zeros(top_z.rows(), n);
        let zh = BitMatrix::zeros(view.h_z.rows(), n);
        let h = &view.h_z;
        Ok(TeleMatrices {
            j_x: BitMatrix::hstack(&[&top_x, &top_x, &top_x, &zx, &top_x, &top_x, &top_x])?,
            j_z: BitMatrix::hstack(&[&top_z, &zz, &top_z, &top_z, &top_z, &top_z, &top_z])?,
            j_mz: BitMatrix::hstack(&[h, &zh, h, h, h, h, h])?,
            j_oc: BitMatrix::hstack(&[h, &zh, h, h, &zh, &zh, &zh])?,
        })
    }
}

/// A standalone teleported measurement: input block A, resource blocks B
/// and C, output on C.
#[derive(Debug, Clone)]
pub struct TeleMeasurement {
    pub source: CssCode,
    pub measured: Basis,
    /// Resource state of the code whose Z checks are measured (the dual code
    /// for an X-check measurement).
    pub spec: ResourceStateSpec,
    pub circuit: Circuit,
    pub input: Register,
    pub round: TeleRound,
    pub matrices: TeleMatrices,
    layout: Vec<usize>,
}

/// What a fault does to the round: the output frames on C and the flip of
/// the measured syndrome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeleReadout {
    pub x: BitVec,
    pub z: BitVec,
    pub syndrome: BitVec,
}

/// Builds the teleported measurement of the `measured`-type checks of `source`.
pub fn build_tele_measurement(source: &CssCode, measured: Basis) -> Result<TeleMeasurement> {
    let view = match measured {
        Basis::Z => source.clone(),
        Basis::X => source.dual(),
    };
    let spec = resource_state(&view)?;
    let matrices = TeleMatrices::new(&view)?;
    let n = source.n;
    let mut b = CircuitBuilder::new();
    let a = b.register("A", n);
    b.tick("A1", &a.qubits(), 1.0);
    let round = append_round(&mut b, source, measured, &a.qubits(), "");
    b.tick("C3", &round.c.qubits(), 1.0);
    let circuit = b.build();
    let layout = circuit.layout(&TELE_LAYOUT)?;
    Ok(TeleMeasurement { source: source.clone(), measured, spec, circuit, input: a, round, matrices, layout })
}

impl TeleMeasurement {
    pub fn n(&self) -> usize {
        self.source.n
    }

    /// Column count of the seven-block layout.
    pub fn columns(&self) -> usize {
        7 * self.n()
    }

    /// Measured checks in the orientation of the source code.
    pub fn checks(&self) -> &BitMatrix {
        checks_of(&self.source, self.measured)
    }

    pub fn fault(&self, basis: Basis, e: &BitVec) -> FaultPath {
        self.circuit.fault_from_layout(basis, &self.layout, e)
    }

    pub fn readout_of_frame(&self, fr: &Frame) -> TeleReadout {
        let c = self.round.c.qubits();
        TeleReadout {
            x: gather(&fr.x, &c),
            z: gather(&fr.z, &c),
            syndrome: self.checks().mul_vec(&range_bits(&fr.flips, &self.round.mu_b)),
        }
    }

    /// Circuit-level effect of a fault of type `basis` over the layout.
    pub fn readout(&self, basis: Basis, e: &BitVec) -> TeleReadout {
        self.readout_of_frame(&self.circuit.propagate(&self.fault(basis, e)))
    }

    /// Effective error equivalent to `e`: faults of the measured type collapse
    /// onto the end of C; the others split into the start of A and the end of C.
    pub fn effective(&self, basis: Basis, e: &BitVec) -> BitVec {
        let n = self.n();
        let part = |i: usize| e.slice(i * n, n);
        let sum = |idx: &[usize]| {
            let mut u = BitVec::zeros(n);
            for &i in idx {
                u.xor_assign(&part(i));
            }
            u
        };
        let mut out = BitVec::zeros(7 * n);
        if basis == self.measured {
            out.xor_at(6 * n, &sum(&[0, 1, 2, 4, 5, 6]));
        } else {
            out.xor_at(0, &sum(&[0, 2, 3]));
            out.xor_at(6 * n, &sum(&[4, 5, 6]));
        }
        out
    }

    fn matrix_image(&self, basis: Basis, e: &BitVec) -> Vec<BitVec> {
        let m = &self.matrices;
        if basis == self.measured {
            vec![m.j_x.mul_vec(e)]
        } else {
            vec![m.j_z.mul_vec(e), m.j_mz.mul_vec(e), m.j_oc.mul_vec(e)]
        }
    }

    /// Checks the effective-error lemma for one fault: equal images under the
    /// propagation matrices, equal circuit readouts, and no weight increase.
    pub fn check_effective(&self, basis: Basis, e: &BitVec) -> std::result::Result<BitVec, String> {
        let eff = self.effective(basis, e);
        if eff.weight() > e.weight() {
            return Err(format!("effective weight {} exceeds {}", eff.weight(), e.weight()));
        }
        if self.matrix_image(basis, e) != self.matrix_image(basis, &eff) {
            return Err(format!("{basis:?} fault {:?}: propagation images differ", e.ones()));
        }
        if self.readout(basis, e) != self.readout(basis, &eff) {
            return Err(format!("{basis:?} fault {:?}: circuit readouts differ", e.ones()));
        }
        Ok(eff)
    }

    /// Compares every column of the propagation matrices with circuit
    /// propagation of the corresponding single fault.
    pub fn verify_matrices(&self) -> Vec<String> {
        let view = match self.measured {
            Basis::Z => self.source.clone(),
            Basis::X => self.source.dual(),
        };
        let top_x = BitMatrix::vstack(&[&view.h_x, &view.j_x]).expect("same width");
        let hx_rt = view.h_x.generalized_right_inverse().transpose();
        let top_z = BitMatrix::vstack(&[&hx_rt, &view.j_z]).expect("same width");
        let (same, other) = (self.measured, self.measured.dual());
        let mut out = Vec::new();
        for col in 0..self.columns() {
            let e = BitVec::unit(self.columns(), col);
            let r = self.readout(same, &e);
            let (tr_same, tr_other) = match same {
                Basis::Z => (&r.z, &r.x),
                Basis::X => (&r.x, &r.z),
            };
            if self.matrices.j_x.column(col) != top_x.mul_vec(tr_same) {
                out.push(format!("transport of commuting operators, column {col}"));
            }
            if !r.syndrome.is_zero() || !tr_other.is_zero() {
                out.push(format!("commuting fault at column {col} leaks into the outcome"));
            }
            let r = self.readout(other, &e);
            let tr = match other {
                Basis::Z => &r.z,
                Basis::X => &r.x,
            };
            if self.matrices.j_z.column(col) != top_z.mul_vec(tr) {
                out.push(format!("transport of unmeasured operators, column {col}"));
            }
            if self.matrices.j_mz.column(col) != view.h_z.mul_vec(tr) {
                out.push(format!("transport of measured operators, column {col}"));
            }
            if self.matrices.j_oc.column(col) != r.syndrome {
                out.push(format!("outcome flip, column {col}"));
            }
        }
        out
    }

    /// Random input frames placed before the round: the teleported outcome
    /// must flip exactly as a direct measurement would, and the frame must
    /// reappear on C. Returns the mismatch count.
    pub fn frame_oracle(&self, samples: u64, seed: u64) -> u64 {
        let n = self.n();
        let a1 = self.circuit.group("A1").expect("A1 group");
        (0..samples)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, t);
                let x = BitVec::from_bools(&(0..n).map(|_| rng.gen()).collect::<Vec<bool>>());
                let z = BitVec::from_bools(&(0..n).map(|_| rng.gen()).collect::<Vec<bool>>());
                let mut f = FaultPath::empty(&self.circuit);
                for i in x.ones() {
                    f.x.set(a1.start + i, true);
                }
                for i in z.ones() {
                    f.z.set(a1.start + i, true);
                }
                let r = self.readout_of_frame(&self.circuit.propagate(&f));
                let direct = self.checks().mul_vec(match self.measured {
                    Basis::Z => &x,
                    Basis::X => &z,
                });
                u64::from(r.syndrome != direct || r.x != x || r.z != z)
            })
            .sum()
    }

    /// Stabilizer-state oracle: a random code state with a random Pauli frame
    /// is measured directly on a copy and by teleportation on the original.
    /// Outcomes and all check and logical signs of the output must agree.
    pub fn state_oracle(&self, trials: u64, seed: u64) -> Vec<String> {
        let n = self.n();
        let code = &self.source;
        let a = self.input.qubits();
        let c = self.round.c.qubits();
        let total = self.circuit.num_qubits();
        let mut out = Vec::new();
        for t in 0..trials {
            let mut rng = trial_rng(seed, t);
            let mut state = CssState::zeros(total);
            let logical = BitVec::from_bools(&(0..code.k).map(|_| rng.gen()).collect::<Vec<bool>>());
            state.prepare_code_state(&a, &code.h_x, &code.j_x, &logical, &mut rng);
            for basis in [Basis::X, Basis::Z] {
                let p = BitVec::from_bools(&(0..n).map(|_| rng.gen_bool(0.2)).collect::<Vec<bool>>());
                state.apply_pauli(basis, &embed(total, &a, &p));
            }
            let mut direct = state.clone();
            let checks = self.checks();
            let expect: Vec<bool> = (0..checks.rows())
                .map(|r| direct.measure(self.measured, &embed(total, &a, &checks.row(r)), &mut rng))
                .collect();
            let bits = state.run(&self.circuit, &mut rng);
            let got = checks.mul_vec(&range_bits(&bits, &self.round.mu_b));
            if got != BitVec::from_bools(&expect) {
                out.push(format!("trial {t}: teleported outcome differs from direct measurement"));
                continue;
            }
            for (basis, m) in [
                (Basis::X, &code.h_x),
                (Basis::Z, &code.h_z),
                (Basis::X, &code.j_x),
                (Basis::Z, &code.j_z),
            ] {
                for r in 0..m.rows() {
                    let row = m.row(r);
                    let before = direct.sign_of(basis, &embed(total, &a, &row));
                    let after = state.sign_of(basis, &embed(total, &c, &row));
                    if before != after {
                        out.push(format!("trial {t}: {basis:?} sign of row {r} not transferred"));
                    }
                }
            }
        }
        out
    }

    /// Checks that the preparation part of the circuit yields a state
    /// stabilized by the resource-state generators (in the measured orientation).
    pub fn resource_report(&self, seed: u64) -> Vec<String> {
        let mut rng = trial_rng(seed, 0);
        let mut b = CircuitBuilder::new();
        let (rb, rc) = append_resource(&mut b, &self.source, self.measured, "");
        let prep = b.build();
        let mut state = CssState::zeros(prep.num_qubits());
        state.run(&prep, &mut rng);
        let pair: Vec<usize> = rb.qubits().into_iter().chain(rc.qubits()).collect();
        let total = prep.num_qubits();
        let (xb, zb) = match self.measured {
            Basis::Z => (Basis::X, Basis::Z),
            Basis::X => (Basis::Z, Basis::X),
        };
        let mut out = Vec::new();
        for (basis, m) in [(xb, &self.spec.h_rs_x), (zb, &self.spec.h_rs_z)] {
            for r in 0..m.rows() {
                if state.sign_of(basis, &embed(total, &pair, &m.row(r))) != Some(false) {
                    out.push(format!("resource generator {basis:?} row {r} not stabilizing"));
                }
            }
        }
        out
    }
}

/// Effective Z error of a teleported measurement.
pub fn effective_z_error(tm: &TeleMeasurement, e: &BitVec) -> BitVec {
    tm.effective(Basis::Z, e)
}

/// Effective X error of a teleported measurement.
pub fn effective_x_error(tm: &TeleMeasurement, e: &BitVec) -> BitVec {
    tm.effective(Basis::X, e)
}

/// Exhaustive weight-one check plus `samples` random faults of weight at
/// most `max_weight`, for both error types. Returns the failures.
pub fn audit_effective(tm: &TeleMeasurement, max_weight: usize, samples: u64, seed: u64) -> Vec<String> {
    let cols = tm.columns();
    let mut out = Vec::new();
    for basis in [Basis::X, Basis::Z] {
        for col in 0..cols {
            if let Err(msg) = tm.check_effective(basis, &BitVec::unit(cols, col)) {
                out.push(msg);
            }
        }
        let idx: Vec<usize> = (0..cols).collect();
        let fails: Vec<String> = (0..samples)
            .into_par_iter()
            .filter_map(|t| {
                let mut rng = trial_rng(seed ^ basis_tag(basis), t);
                let w = rng.gen_range(1..=max_weight.max(1));
                let pick: Vec<usize> = idx.choose_multiple(&mut rng, w).copied().collect();
                tm.check_effective(basis, &BitVec::from_indices(cols, &pick)).err()
            })
            .collect();
        out.extend(fails);
    }
    out
}

fn basis_tag(basis: Basis) -> u64 {
    match basis {
        Basis::X => 0x5854,
        Basis::Z => 0x5a54,
    }
}

/// Block matrices of the reduced surgery circuit. Columns run over
/// [`SURGERY_LAYOUT`] followed by the outcome bits of the round whose
/// measurement errors the matrix sees (ν̃ for the X side, ν for the Z side).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurgeryMatrices {
    pub h_x: BitMatrix,
    pub j_x: BitMatrix,
    pub h_z: BitMatrix,
    pub j_z: BitMatrix,
    pub j_mz: BitMatrix,
    pub j_oc: BitMatrix,
    pub gamma1: BitMatrix,
    pub gamma2: BitMatrix,
}

/// Raw fault signature of a surgery circuit: flips of the deformed Z-check
/// outcomes ν, of the ancilla X readout μ and of the memory X-check outcomes
/// ν̃, and the residual frames on the output memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurgeryFrame {
    pub nu: BitVec,
    pub mu: BitVec,
    pub nu_tilde: BitVec,
    pub out_x: BitVec,
    pub out_z: BitVec,
}

impl SurgeryFrame {
    fn xor_assign(&mut self, o: &SurgeryFrame) {
        self.nu.xor_assign(&o.nu);
        self.mu.xor_assign(&o.mu);
        self.nu_tilde.xor_assign(&o.nu_tilde);
        self.out_x.xor_assign(&o.out_x);
        self.out_z.xor_assign(&o.out_z);
    }
}

/// Derived quantities of a [`SurgeryFrame`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurgeryReadout {
    /// (ν̃ + μT̃ᵀ | μH̃_Mᵀ).
    pub x_detector: BitVec,
    /// ν·γ_1ᵀ.
    pub z_detector: BitVec,
    /// Flip of the measured logical outcomes.
    pub outcome: BitVec,
    /// Flips of the unmeasured X logicals by the output Z frame.
    pub x_logicals: BitVec,
    /// Flips of the unmeasured Z logicals by the output X frame.
    pub z_logicals: BitVec,
    /// Flips of the measured Z logicals by the output X frame.
    pub measured_logicals: BitVec,
}

#[derive(Debug, Clone)]
struct Taps {
    nu: Range<usize>,
    mu: Range<usize>,
    nu_tilde: Range<usize>,
    /// Present in the expanded circuit, where ν and ν̃ are syndromes of
    /// transversal readouts.
    nu_checks: Option<(BitMatrix, BitMatrix)>,
    out: Vec<usize>,
}

/// One single-round code surgery on a deformed code.
#[derive(Debug, Clone)]
pub struct SurgeryRun {
    pub deformed: DeformedCode,
    /// The k_R memory blocks as one code.
    pub memory: CssCode,
    pub reduced: Circuit,
    pub expanded: Circuit,
    pub matrices: SurgeryMatrices,
    /// α̃·J̃_Z·R̃·γ_2: the measured logicals as a function of ν.
    pub extraction: BitMatrix,
    /// Z feedback onto the memory from the ancilla X readout.
    pub feedback: BitMatrix,
    /// Distance bound used for the Z-side lemma precondition.
    pub d_deformed: usize,
    /// Distance of the memory code, for the X-side precondition.
    pub d_memory: usize,
    reduced_taps: Taps,
    expanded_taps: Taps,
    layout: Vec<usize>,
    effects: [Vec<SurgeryFrame>; 2],
}

fn basis_index(b: Basis) -> usize {
    match b {
        Basis::X => 0,
        Basis::Z => 1,
    }
}

/// Builds the reduced and expanded surgery circuits and the block matrices.
pub fn build_surgery_circuit(dc: &DeformedCode) -> Result<SurgeryRun> {
    let l = &dc.lifted;
    let target = &dc.target;
    let d_memory = target
        .d
        .ok_or_else(|| Error::Precondition("target distance unknown".into()))?;
    let d_deformed = lemma_budget(dc)
        .ok_or_else(|| Error::Precondition("target or R-code distance unknown".into()))?
        + 1;
    let k_r = dc.k_r();
    let memory = CssCode {
        h_x: l.h_x.clone(),
        h_z: l.h_z.clone(),
        j_x: l.j_x.clone(),
        j_z: l.j_z.clone(),
        n: k_r * target.n,
        k: k_r * target.k,
        d: target.d,
    };
    let n_m = dc.target_columns();
    let n_a = dc.ancilla_columns();
    let r_zd = dc.css.h_z.rows();
    let k_rz = l.h_z.rows();
    let gamma1 = BitMatrix::hstack(&[&BitMatrix::identity(k_rz), &BitMatrix::zeros(k_rz, r_zd - k_rz)])?;
    let gamma2 = BitMatrix::hstack(&[&BitMatrix::zeros(r_zd - k_rz, k_rz), &BitMatrix::identity(r_zd - k_rz)])?;
    let measured_z = l.alpha.mul(&l.j_z);
    let extraction = measured_z.mul(&l.r).mul(&gamma2);
    if extraction != measured_extraction(dc)? {
        return Err(Error::Internal("outcome extraction disagrees with the deformed checks".into()));
    }
    let unmeasured_z = l.alpha_perp_rt.mul(&l.j_z);
    let feedback = unmeasured_z.transpose().mul(&l.beta);
    let matrices = surgery_matrices(dc, &gamma1, &gamma2, &extraction)?;

    // Reduced form.
    let mut b = CircuitBuilder::new();
    let m = b.register("M", n_m);
    let g = b.register("G", n_a);
    b.init(Basis::X, g.qubits());
    b.tick("M1", &m.qubits(), 1.0);
    b.tick("A1", &g.qubits(), 1.0);
    let both: Vec<usize> = m.qubits().into_iter().chain(g.qubits()).collect();
    let nu = b.measure_pauli(Basis::Z, both, dc.css.h_z.clone(), "nu", Some("nu.flip"));
    b.tick("M2", &m.qubits(), 1.0);
    b.tick("A2", &g.qubits(), 1.0);
    let mu = b.measure(Basis::X, g.qubits(), "mu", None);
    b.tick("M3", &m.qubits(), 1.0);
    let nu_tilde = b.measure_pauli(Basis::X, m.qubits(), l.h_x.clone(), "nu_tilde", Some("nu_tilde.flip"));
    b.feedback(Basis::Z, m.qubits(), feedback.clone(), mu.clone().collect());
    b.tick("M4", &m.qubits(), 1.0);
    let reduced = b.build();
    let reduced_taps = Taps { nu, mu, nu_tilde, nu_checks: None, out: m.qubits() };

    // Expanded form: both rounds built from primitive operations.
    let mut b = CircuitBuilder::new();
    let m = b.register("M", n_m);
    let g = b.register("G", n_a);
    b.init(Basis::X, g.qubits());
    b.tick("M1", &m.qubits(), 1.0);
    b.tick("A1", &g.qubits(), 1.0);
    let both: Vec<usize> = m.qubits().into_iter().chain(g.qubits()).collect();
    let zr = append_round(&mut b, &dc.css, Basis::Z, &both, "zr.");
    let mem = zr.c.slice(0, n_m);
    let anc = zr.c.slice(n_m, n_a);
    b.tick("M2", &mem, 1.0);
    b.tick("A2", &anc, 1.0);
    let mu = b.measure(Basis::X, anc, "mu", None);
    b.tick("M3", &mem, 1.0);
    let xr = append_round(&mut b, &memory, Basis::X, &mem, "xr.");
    b.feedback(Basis::Z, xr.c.qubits(), feedback.clone(), mu.clone().collect());
    b.tick("M4", &xr.c.qubits(), 1.0);
    let expanded = b.build();
    let expanded_taps = Taps {
        nu: zr.mu_b.clone(),
        mu,
        nu_tilde: xr.mu_b.clone(),
        nu_checks: Some((dc.css.h_z.clone(), l.h_x.clone())),
        out: xr.c.qubits(),
    };

    let layout = reduced.layout(&SURGERY_LAYOUT)?;
    let mut run = SurgeryRun {
        deformed: dc.clone(),
        memory,
        reduced,
        expanded,
        matrices,
        extraction,
        feedback,
        d_deformed,
        d_memory,
        reduced_taps,
        expanded_taps,
        layout,
        effects: [Vec::new(), Vec::new()],
    };
    for basis in [Basis::X, Basis::Z] {
        let effects: Vec<SurgeryFrame> = run
            .layout
            .par_iter()
            .map(|&loc| run.frame(false, &run.reduced.propagate(&FaultPath::single(&run.reduced, basis, loc))))
            .collect();
        run.effects[basis_index(basis)] = effects;
    }
    Ok(run)
}

fn surgery_matrices(
    dc: &DeformedCode,
    gamma1: &BitMatrix,
    gamma2: &BitMatrix,
    extraction: &BitMatrix,
) -> Result<SurgeryMatrices> {
    let l = &dc.lifted;
    let n_m = dc.target_columns();
    let n_a = dc.ancilla_columns();
    let r_x = l.h_x.rows();
    let r_m = l.h_m.rows();
    let r_zd = dc.css.h_z.rows();
    let z = BitMatrix::zeros;
    let hx = &l.h_x;
    let h_x = BitMatrix::vstack(&[
        &BitMatrix::hstack(&[hx, hx, hx, &z(r_x, n_m), &l.t, &l.t, &BitMatrix::identity(r_x)])?,
        &BitMatrix::hstack(&[&z(r_m, 4 * n_m), &l.h_m, &l.h_m, &z(r_m, r_x)])?,
    ])?;
    let ux = l.alpha_perp.mul(&l.j_x);
    let j_x = BitMatrix::hstack(&[&ux, &ux, &ux, &ux, &l.beta, &l.beta, &z(ux.rows(), r_x)])?;
    let k_rz = l.h_z.rows();
    let h_z = BitMatrix::hstack(&[&l.h_z, &z(k_rz, 3 * n_m + 2 * n_a), gamma1])?;
    let uz = l.alpha_perp_rt.mul(&l.j_z);
    let j_z = BitMatrix::hstack(&[&uz, &uz, &uz, &uz, &z(uz.rows(), 2 * n_a + r_zd)])?;
    let mz = l.alpha.mul(&l.j_z);
    let j_mz = BitMatrix::hstack(&[&mz, &mz, &mz, &mz, &z(mz.rows(), 2 * n_a + r_zd)])?;
    let j_oc = BitMatrix::hstack(&[&mz, &z(mz.rows(), 3 * n_m + 2 * n_a), extraction])?;
    Ok(SurgeryMatrices { h_x, j_x, h_z, j_z, j_mz, j_oc, gamma1: gamma1.clone(), gamma2: gamma2.clone() })
}

/// Outcome of the Z-side residual lemma for one fault.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResidualZ {
    Detected,
    /// The lemma applies and holds; the residual is the after-measurement part.
    Holds { residual: BitVec, after_weight: usize },
    /// Before-errors reach the deformed distance; `logical_flip` is the
    /// witness on the deformed logicals (nonzero means a logical failure).
    BeyondBound { before_weight: usize, logical_flip: BitVec },
    Violation(String),
}

/// Outcome of the X-side outcome lemma for one fault.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutcomeX {
    Detected,
    Holds { residual: BitVec, after_weight: usize },
    BeyondBound { before_weight: usize, outcome_flip: BitVec },
    Violation(String),
}

impl SurgeryRun {
    pub fn n_memory(&self) -> usize {
        self.deformed.target_columns()
    }

    pub fn n_ancilla(&self) -> usize {
        self.deformed.ancilla_columns()
    }

    /// Column count of [`SURGERY_LAYOUT`].
    pub fn columns(&self) -> usize {
        self.layout.len()
    }

    fn frame(&self, expanded: bool, fr: &Frame) -> SurgeryFrame {
        let taps = if expanded { &self.expanded_taps } else { &self.reduced_taps };
        self.collect(taps, &fr.flips, &fr.x, &fr.z)
    }

    fn collect(&self, taps: &Taps, bits: &BitVec, x: &BitVec, z: &BitVec) -> SurgeryFrame {
        let mut nu = range_bits(bits, &taps.nu);
        let mut nu_tilde = range_bits(bits, &taps.nu_tilde);
        if let Some((hz, hx)) = &taps.nu_checks {
            nu = hz.mul_vec(&nu);
            nu_tilde = hx.mul_vec(&nu_tilde);
        }
        SurgeryFrame {
            nu,
            mu: range_bits(bits, &taps.mu),
            nu_tilde,
            out_x: gather(x, &taps.out),
            out_z: gather(z, &taps.out),
        }
    }

    /// Signature of a fault path on the reduced (`false`) or expanded circuit.
    pub fn signature(&self, expanded: bool, f: &FaultPath) -> SurgeryFrame {
        let c = if expanded { &self.expanded } else { &self.reduced };
        self.frame(expanded, &c.propagate(f))
    }

    pub fn readout(&self, s: &SurgeryFrame) -> SurgeryReadout {
        let l = &self.deformed.lifted;
        let mut upper = s.nu_tilde.clone();
        upper.xor_assign(&l.t.mul_vec(&s.mu));
        let x_detector = BitVec::concat(&[&upper, &l.h_m.mul_vec(&s.mu)]);
        SurgeryReadout {
            x_detector,
            z_detector: self.matrices.gamma1.mul_vec(&s.nu),
            outcome: self.extraction.mul_vec(&s.nu),
            x_logicals: l.alpha_perp.mul(&l.j_x).mul_vec(&s.out_z),
            z_logicals: l.alpha_perp_rt.mul(&l.j_z).mul_vec(&s.out_x),
            measured_logicals: l.alpha.mul(&l.j_z).mul_vec(&s.out_x),
        }
    }

    /// Reduced-circuit signature of a fault over [`SURGERY_LAYOUT`], summed
    /// from single-location effects.
    pub fn layout_signature(&self, basis: Basis, e: &BitVec) -> SurgeryFrame {
        let eff = &self.effects[basis_index(basis)];
        let l = &self.deformed.lifted;
        let mut acc = SurgeryFrame {
            nu: BitVec::zeros(self.deformed.css.h_z.rows()),
            mu: BitVec::zeros(self.n_ancilla()),
            nu_tilde: BitVec::zeros(l.h_x.rows()),
            out_x: BitVec::zeros(self.n_memory()),
            out_z: BitVec::zeros(self.n_memory()),
        };
        for i in e.ones() {
            acc.xor_assign(&eff[i]);
        }
        acc
    }

    /// Compares every column of the block matrices, including the
    /// measurement-error columns, with circuit propagation.
    pub fn verify_matrices(&self) -> Result<Vec<String>> {
        let m = &self.matrices;
        let mut out = Vec::new();
        let mut names: Vec<&str> = SURGERY_LAYOUT.to_vec();
        names.push("nu_tilde.flip");
        let lz = self.reduced.layout(&names)?;
        names.pop();
        names.push("nu.flip");
        let lx = self.reduced.layout(&names)?;
        for (col, &loc) in lz.iter().enumerate() {
            let r = self.readout(&self.signature(false, &FaultPath::single(&self.reduced, Basis::Z, loc)));
            if r.x_detector != m.h_x.column(col) {
                out.push(format!("X-side check column {col}"));
            }
            if r.x_logicals != m.j_x.column(col) {
                out.push(format!("X-logical transport column {col}"));
            }
        }
        for (col, &loc) in lx.iter().enumerate() {
            let r = self.readout(&self.signature(false, &FaultPath::single(&self.reduced, Basis::X, loc)));
            if r.z_detector != m.h_z.column(col) {
                out.push(format!("Z-side check column {col}"));
            }
            if r.z_logicals != m.j_z.column(col) {
                out.push(format!("Z-logical transport column {col}"));
            }
            if r.measured_logicals != m.j_mz.column(col) {
                out.push(format!("measured-logical transport column {col}"));
            }
            if r.outcome != m.j_oc.column(col) {
                out.push(format!("outcome column {col}"));
            }
        }
        Ok(out)
    }

    /// Every single fault of the expanded circuit, inside the teleported
    /// rounds included, must have the same signature as its reduction to
    /// the round boundaries in the reduced circuit.
    pub fn verify_reduction(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        let n_m = self.n_memory();
        let shared = SURGERY_LAYOUT;
        let output_zr = |i: usize| if i < n_m { ("M2", i) } else { ("A2", i - n_m) };
        let input_zr = |i: usize| if i < n_m { ("M1", i) } else { ("A1", i - n_m) };
        for basis in [Basis::X, Basis::Z] {
            for (name, range) in self.expanded.groups() {
                for (i, loc) in range.clone().enumerate() {
                    if !self.expanded.locations()[loc].admits(basis) {
                        continue;
                    }
                    let target: Option<(&str, usize)> = if shared.contains(&name.as_str()) {
                        Some((name.as_str(), i))
                    } else if let Some(inner) = name.strip_prefix("zr.") {
                        reduce_inner(Basis::Z, basis, inner).map(|to_output| {
                            if to_output {
                                output_zr(i)
                            } else {
                                input_zr(i)
                            }
                        })
                    } else if let Some(inner) = name.strip_prefix("xr.") {
                        reduce_inner(Basis::X, basis, inner).map(|to_output| if to_output { ("M4", i) } else { ("M3", i) })
                    } else {
                        return Err(Error::Internal(format!("unmapped location group {name}")));
                    };
                    let mut g = FaultPath::empty(&self.reduced);
                    if let Some((group, j)) = target {
                        let r = self.reduced.group(group).expect("reduced group");
                        g.of_mut(basis).set(r.start + j, true);
                    }
                    let lhs = self.signature(true, &FaultPath::single(&self.expanded, basis, loc));
                    let rhs = self.signature(false, &g);
                    if lhs != rhs {
                        out.push(format!("{basis:?} fault at {name}[{i}] does not reduce to {target:?}"));
                    }
                }
            }
        }
        Ok(out)
    }

    fn split(&self, e: &BitVec) -> [BitVec; 6] {
        let (n_m, n_a) = (self.n_memory(), self.n_ancilla());
        [
            e.slice(0, n_m),
            e.slice(n_m, n_m),
            e.slice(2 * n_m, n_m),
            e.slice(3 * n_m, n_m),
            e.slice(4 * n_m, n_a),
            e.slice(4 * n_m + n_a, n_a),
        ]
    }

    /// Z-side lemma for a Z fault over [`SURGERY_LAYOUT`]: an undetectable
    /// fault whose before-part is lighter than the deformed distance leaves
    /// exactly its after-part as residual.
    pub fn residual_z(&self, e: &BitVec) -> ResidualZ {
        let m = &self.matrices;
        let l = &self.deformed.lifted;
        let r_x = l.h_x.rows();
        let full = BitVec::concat(&[e, &BitVec::zeros(r_x)]);
        let sig = self.readout(&self.layout_signature(Basis::Z, e));
        let det = m.h_x.mul_vec(&full);
        if det != sig.x_detector {
            return ResidualZ::Violation("check matrix disagrees with the circuit".into());
        }
        if !det.is_zero() {
            return ResidualZ::Detected;
        }
        let [m1, m2, m3, m4, a1, a2] = self.split(e);
        let u_mem = m1.xor(&m2).xor(&m3);
        let u_eff = BitVec::concat(&[&u_mem, &a1.xor(&a2)]);
        let ux = l.alpha_perp.mul(&l.j_x);
        let mut expect = self.deformed.css.j_x.mul_vec(&u_eff);
        expect.xor_assign(&ux.mul_vec(&m4));
        let image = m.j_x.mul_vec(&full);
        if image != expect || image != sig.x_logicals {
            return ResidualZ::Violation("logical transport does not split into effective and residual parts".into());
        }
        if !self.deformed.css.h_x.mul_vec(&u_eff).is_zero() {
            return ResidualZ::Violation("undetectable fault has an effective error with nonzero syndrome".into());
        }
        let before = m1.weight() + m2.weight() + m3.weight() + a1.weight() + a2.weight();
        let flip = self.deformed.css.j_x.mul_vec(&u_eff);
        if before >= self.d_deformed {
            return ResidualZ::BeyondBound { before_weight: before, logical_flip: flip };
        }
        if !flip.is_zero() {
            return ResidualZ::Violation(format!("before-error of weight {before} acts as a deformed logical"));
        }
        ResidualZ::Holds { after_weight: m4.weight(), residual: m4 }
    }

    /// X-side lemma for an X fault over [`SURGERY_LAYOUT`]: an undetectable
    /// fault whose before-part is lighter than the memory distance leaves the
    /// outcome correct, with residual no heavier than the after-part.
    pub fn outcome_x(&self, e: &BitVec) -> OutcomeX {
        let m = &self.matrices;
        let l = &self.deformed.lifted;
        let r_zd = self.deformed.css.h_z.rows();
        let full = BitVec::concat(&[e, &BitVec::zeros(r_zd)]);
        let sig = self.readout(&self.layout_signature(Basis::X, e));
        let det = m.h_z.mul_vec(&full);
        if det != sig.z_detector {
            return OutcomeX::Violation("check matrix disagrees with the circuit".into());
        }
        if !det.is_zero() {
            return OutcomeX::Detected;
        }
        let [m1, m2, m3, m4, a1, a2] = self.split(e);
        let u_res = m2.xor(&m3).xor(&m4);
        let uz = l.alpha_perp_rt.mul(&l.j_z);
        let mz = l.alpha.mul(&l.j_z);
        let total = m1.xor(&u_res);
        let oc = m.j_oc.mul_vec(&full);
        if m.j_z.mul_vec(&full) != uz.mul_vec(&total)
            || m.j_mz.mul_vec(&full) != mz.mul_vec(&total)
            || oc != mz.mul_vec(&m1)
            || oc != sig.outcome
            || m.j_z.mul_vec(&full) != sig.z_logicals
        {
            return OutcomeX::Violation("transport does not split into effective and residual parts".into());
        }
        if !l.h_z.mul_vec(&m1).is_zero() {
            return OutcomeX::Violation("undetectable fault has an effective error with nonzero syndrome".into());
        }
        let before = m1.weight() + a1.weight();
        let after = m2.weight() + m3.weight() + m4.weight() + a2.weight();
        if before >= self.d_memory {
            return OutcomeX::BeyondBound { before_weight: before, outcome_flip: oc };
        }
        if !oc.is_zero() || !l.j_z.mul_vec(&m1).is_zero() {
            return OutcomeX::Violation(format!("before-error of weight {before} flips the measured outcome"));
        }
        if u_res.weight() > after {
            return OutcomeX::Violation("residual heavier than the after-error".into());
        }
        OutcomeX::Holds { after_weight: after, residual: u_res }
    }
}

/// Where a fault inside a teleported round lands in the reduced model:
/// `Some(true)` at the output, `Some(false)` at the input, `None` nowhere.
fn reduce_inner(measured: Basis, fault: Basis, group: &str) -> Option<bool> {
    if fault == measured {
        match group {
            "A2" | "B1" | "C1" | "C2" => Some(true),
            "B2" => None,
            _ => panic!("unknown round group {group}"),
        }
    } else {
        match group {
            "B1" | "B2" => Some(false),
            "A2" => None,
            "C1" | "C2" => Some(true),
            _ => panic!("unknown round group {group}"),
        }
    }
}

/// Z-side residual lemma (free-function form).
pub fn surgery_residual_z(run: &SurgeryRun, e: &BitVec) -> ResidualZ {
    run.residual_z(e)
}

/// X-side outcome lemma (free-function form).
pub fn surgery_outcome_x(run: &SurgeryRun, e: &BitVec) -> OutcomeX {
    run.outcome_x(e)
}

/// Tally of a surgery lemma sweep.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaTally {
    pub checked: u64,
    pub detected: u64,
    pub held: u64,
    pub beyond_bound: u64,
    pub violations: u64,
    /// Faults satisfying the preconditions whose outcome was checked.
    pub outcome_checked: u64,
    pub outcome_correct: u64,
    pub first_violation: Option<String>,
}

impl LemmaTally {
    fn merge(mut self, o: LemmaTally) -> LemmaTally {
        self.checked += o.checked;
        self.detected += o.detected;
        self.held += o.held;
        self.beyond_bound += o.beyond_bound;
        self.violations += o.violations;
        self.outcome_checked += o.outcome_checked;
        self.outcome_correct += o.outcome_correct;
        self.first_violation = self.first_violation.or(o.first_violation);
        self
    }

    pub fn outcome_rate(&self) -> f64 {
        if self.outcome_checked == 0 {
            1.0
        } else {
            self.outcome_correct as f64 / self.outcome_checked as f64
        }
    }

    fn record(&mut self, run: &SurgeryRun, basis: Basis, e: &BitVec) {
        self.checked += 1;
        let violation = match basis {
            Basis::Z => match run.residual_z(e) {
                ResidualZ::Detected => {
                    self.detected += 1;
                    None
                }
                ResidualZ::Holds { .. } => {
                    self.held += 1;
                    None
                }
                ResidualZ::BeyondBound { .. } => {
                    self.beyond_bound += 1;
                    None
                }
                ResidualZ::Violation(v) => Some(v),
            },
            Basis::X => match run.outcome_x(e) {
                OutcomeX::Detected => {
                    self.detected += 1;
                    None
                }
                OutcomeX::Holds { .. } => {
                    self.held += 1;
                    self.outcome_checked += 1;
                    self.outcome_correct += 1;
                    None
                }
                OutcomeX::BeyondBound { .. } => {
                    self.beyond_bound += 1;
                    None
                }
                OutcomeX::Violation(v) => {
                    self.outcome_checked += 1;
                    Some(v)
                }
            },
        };
        if let Some(v) = violation {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(format!("{v} at {:?}", e.ones()));
            }
        }
    }
}

/// Exhaustive sweep of all faults of weight 1..=max_weight (at most 2).
pub fn sweep_surgery(run: &SurgeryRun, basis: Basis, max_weight: usize) -> LemmaTally {
    let n = run.columns();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut t = LemmaTally::default();
            if max_weight >= 1 {
                t.record(run, basis, &BitVec::unit(n, i));
            }
            if max_weight >= 2 {
                for j in i + 1..n {
                    t.record(run, basis, &BitVec::from_indices(n, &[i, j]));
                }
            }
            t
        })
        .reduce(LemmaTally::default, LemmaTally::merge)
}

/// Random faults of a fixed weight. Half of the weight-2 draws pair
/// locations with equal detector columns, so undetectable faults are common.
pub fn sample_surgery(run: &SurgeryRun, basis: Basis, weight: usize, samples: u64, seed: u64) -> LemmaTally {
    let n = run.columns();
    let det = match basis {
        Basis::Z => &run.matrices.h_x,
        Basis::X => &run.matrices.h_z,
    };
    let mut classes: HashMap<BitVec, Vec<usize>> = HashMap::new();
    for i in 0..n {
        classes.entry(det.column(i)).or_default().push(i);
    }
    let class_of: Vec<&Vec<usize>> = (0..n).map(|i| &classes[&det.column(i)]).collect();
    let idx: Vec<usize> = (0..n).collect();
    (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = trial_rng(seed ^ basis_tag(basis), s);
            let mut pick: Vec<usize> = idx.choose_multiple(&mut rng, weight.min(n)).copied().collect();
            if weight == 2 && rng.gen_bool(0.5) {
                let peers = class_of[pick[0]];
                if peers.len() > 1 {
                    let mut other = pick[0];
                    while other == pick[0] {
                        other = *peers.choose(&mut rng).expect("non-empty class");
                    }
                    pick[1] = other;
                }
            }
            let mut t = LemmaTally::default();
            t.record(run, basis, &BitVec::from_indices(n, &pick));
            t
        })
        .reduce(LemmaTally::default, LemmaTally::merge)
}

/// Result of a noiseless surgery run on the expanded circuit.
#[derive(Debug, Clone)]
pub struct NoiselessSurgery {
    /// Measured logical outcomes (true for −1), one per measured logical.
    pub outcomes: BitVec,
    pub issues: Vec<String>,
}

/// Runs the expanded circuit on memory blocks prepared with the given Z
/// logical values. With `unmeasured_in_x` the unmeasured logicals are first
/// projected onto X eigenstates and their X signs must survive instead.
pub fn run_noiseless(run: &SurgeryRun, logical_ones: &BitVec, unmeasured_in_x: bool, seed: u64) -> Result<NoiselessSurgery> {
    let target = &run.deformed.target;
    let l = &run.deformed.lifted;
    let k_r = run.deformed.k_r();
    if logical_ones.len() != k_r * target.k {
        return Err(Error::Shape(format!("expected {} logical bits", k_r * target.k)));
    }
    let total = run.expanded.num_qubits();
    let mut rng = trial_rng(seed, 0);
    let mut state = CssState::zeros(total);
    let m = run.expanded.register("M").expect("memory register").clone();
    for j in 0..k_r {
        let q = m.slice(j * target.n, target.n);
        let bits = logical_ones.slice(j * target.k, target.k);
        state.prepare_code_state(&q, &target.h_x, &target.j_x, &bits, &mut rng);
    }
    let ux = l.alpha_perp.mul(&l.j_x);
    let uz = l.alpha_perp_rt.mul(&l.j_z);
    let mz = l.alpha.mul(&l.j_z);
    let mem = m.qubits();
    let x_signs: Vec<bool> = if unmeasured_in_x {
        (0..ux.rows()).map(|r| state.measure(Basis::X, &embed(total, &mem, &ux.row(r)), &mut rng)).collect()
    } else {
        Vec::new()
    };
    let bits = state.run(&run.expanded, &mut rng);
    let zero = BitVec::zeros(total);
    let s = run.collect(&run.expanded_taps, &bits, &zero, &zero);
    let r = run.readout(&s);
    let mut issues = Vec::new();
    let expect = l.alpha.mul_vec(logical_ones);
    if r.outcome != expect {
        issues.push(format!("outcomes {:?}, expected {:?}", r.outcome.to_bits(), expect.to_bits()));
    }
    if !r.x_detector.is_zero() {
        issues.push("X-side detector fired on a noiseless run".into());
    }
    if !r.z_detector.is_zero() {
        issues.push("Z-side detector fired on a noiseless run".into());
    }
    let out = &run.expanded_taps.out;
    let sign = |basis: Basis, row: &BitVec| state.sign_of(basis, &embed(total, out, row));
    for i in 0..l.h_z.rows() {
        if sign(Basis::Z, &l.h_z.row(i)) != Some(false) {
            issues.push(format!("output Z check {i} not +1"));
        }
    }
    for i in 0..l.h_x.rows() {
        if sign(Basis::X, &l.h_x.row(i)) != Some(s.nu_tilde.get(i)) {
            issues.push(format!("output X check {i} differs from its recorded outcome"));
        }
    }
    for i in 0..mz.rows() {
        if sign(Basis::Z, &mz.row(i)) != Some(r.outcome.get(i)) {
            issues.push(format!("output not in the measured eigenstate {i}"));
        }
    }
    if unmeasured_in_x {
        for (i, &v) in x_signs.iter().enumerate() {
            if sign(Basis::X, &ux.row(i)) != Some(v) {
                issues.push(format!("unmeasured X logical {i} not preserved"));
            }
        }
    } else {
        let expect = l.alpha_perp_rt.mul_vec(logical_ones);
        for i in 0..uz.rows() {
            if sign(Basis::Z, &uz.row(i)) != Some(expect.get(i)) {
                issues.push(format!("unmeasured Z logical {i} not preserved"));
            }
        }
    }
    Ok(NoiselessSurgery { outcomes: r.outcome, issues })
}
