//! Stabilizer states generated by X-type and Z-type Paulis only.
//!
//! Every circuit in this crate uses |0⟩/|+⟩ preparation, CNOTs, Pauli
//! feedback and X/Z-type measurements, so the stabilizer group always splits
//! into an X part and a Z part. Signs are single bits since all generators are
//! Hermitian products of one Pauli type.

use rand::Rng;

use crate::gf2::{BitMatrix, BitVec, RowReducer};
use crate::sim::{Basis, Circuit, Op};

#[derive(Debug, Clone)]
pub struct Generator {
    pub support: BitVec,
    /// true means eigenvalue −1.
    pub sign: bool,
}

#[derive(Debug, Clone)]
pub struct CssState {
    n: usize,
    xs: Vec<Generator>,
    zs: Vec<Generator>,
}

impl CssState {
    /// All qubits in |0⟩.
    pub fn zeros(n: usize) -> Self {
        let zs = (0..n).map(|q| Generator { support: BitVec::unit(n, q), sign: false }).collect();
        CssState { n, xs: Vec::new(), zs }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_generators(&self) -> &[Generator] {
        &self.xs
    }

    pub fn z_generators(&self) -> &[Generator] {
        &self.zs
    }

    pub fn apply_x(&mut self, pattern: &BitVec) {
        for g in &mut self.zs {
            if g.support.dot(pattern) {
                g.sign = !g.sign;
            }
        }
    }

    pub fn apply_z(&mut self, pattern: &BitVec) {
        for g in &mut self.xs {
            if g.support.dot(pattern) {
                g.sign = !g.sign;
            }
        }
    }

    pub fn apply_pauli(&mut self, basis: Basis, pattern: &BitVec) {
        match basis {
            Basis::X => self.apply_x(pattern),
            Basis::Z => self.apply_z(pattern),
        }
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        for g in &mut self.xs {
            if g.support.get(control) {
                g.support.flip(target);
            }
        }
        for g in &mut self.zs {
            if g.support.get(target) {
                g.support.flip(control);
            }
        }
    }

    /// Measures the Pauli of type `basis` on `pattern`, returning the outcome
    /// bit (true for −1). Random outcomes draw from `rng`.
    pub fn measure<R: Rng>(&mut self, basis: Basis, pattern: &BitVec, rng: &mut R) -> bool {
        let (same, other) = match basis {
            Basis::Z => (&mut self.zs, &mut self.xs),
            Basis::X => (&mut self.xs, &mut self.zs),
        };
        let anti: Vec<usize> = (0..other.len()).filter(|&i| other[i].support.dot(pattern)).collect();
        if let Some((&first, rest)) = anti.split_first() {
            let pivot = other[first].clone();
            for &i in rest {
                other[i].support.xor_assign(&pivot.support);
                other[i].sign ^= pivot.sign;
            }
            other.swap_remove(first);
            let outcome: bool = rng.gen();
            same.push(Generator { support: pattern.clone(), sign: outcome });
            return outcome;
        }
        sign_in_span(same, pattern).expect("commuting Pauli of a pure state lies in its stabilizer")
    }

    /// Sign of a Pauli in the stabilizer group, or None if it is not an element.
    pub fn sign_of(&self, basis: Basis, pattern: &BitVec) -> Option<bool> {
        let (same, other) = match basis {
            Basis::Z => (&self.zs, &self.xs),
            Basis::X => (&self.xs, &self.zs),
        };
        if other.iter().any(|g| g.support.dot(pattern)) {
            return None;
        }
        sign_in_span(same, pattern)
    }

    /// Resets to |0⟩ (Z) or |+⟩ (X) by measuring and correcting.
    pub fn reset<R: Rng>(&mut self, basis: Basis, qubit: usize, rng: &mut R) {
        let unit = BitVec::unit(self.n, qubit);
        if self.measure(basis, &unit, rng) {
            self.apply_pauli(basis.dual(), &unit);
        }
    }

    /// Prepares the code state of a CSS code with the given logical Z values
    /// on fresh |0⟩ qubits `qubits` (in code column order).
    pub fn prepare_code_state<R: Rng>(
        &mut self,
        qubits: &[usize],
        h_x: &BitMatrix,
        j_x: &BitMatrix,
        logical_ones: &BitVec,
        rng: &mut R,
    ) {
        let n = self.n;
        let embed = |v: &BitVec| {
            let mut out = BitVec::zeros(n);
            for i in v.ones() {
                out.set(qubits[i], true);
            }
            out
        };
        for &q in qubits {
            self.reset(Basis::Z, q, rng);
        }
        let fix = h_x.generalized_right_inverse();
        let mut syndrome = BitVec::zeros(h_x.rows());
        for r in 0..h_x.rows() {
            if self.measure(Basis::X, &embed(&h_x.row(r)), rng) {
                syndrome.set(r, true);
            }
        }
        let correction = fix.mul_vec(&syndrome);
        self.apply_z(&embed(&correction));
        let flip = j_x.vec_mul(logical_ones);
        self.apply_x(&embed(&flip));
    }

    /// Executes a circuit noiselessly; returns the outcome record.
    pub fn run<R: Rng>(&mut self, circuit: &Circuit, rng: &mut R) -> BitVec {
        let mut outcomes = BitVec::zeros(circuit.num_outcomes());
        for op in circuit.ops() {
            match op {
                Op::Init { basis, qubits } => {
                    for &q in qubits {
                        self.reset(*basis, q, rng);
                    }
                }
                Op::Cnot { controls, targets, coupling } => {
                    for (ti, &t) in targets.iter().enumerate() {
                        for ci in coupling.row(ti).ones() {
                            self.cnot(controls[ci], t);
                        }
                    }
                }
                Op::Measure { basis, qubits, outcomes: range, .. } => {
                    for (i, &q) in qubits.iter().enumerate() {
                        let bit = self.measure(*basis, &BitVec::unit(self.n, q), rng);
                        outcomes.set(range.start + i, bit);
                    }
                }
                Op::MeasurePauli { basis, qubits, checks, outcomes: range, .. } => {
                    for r in 0..checks.rows() {
                        let mut pattern = BitVec::zeros(self.n);
                        for i in checks.row(r).ones() {
                            pattern.set(qubits[i], true);
                        }
                        let bit = self.measure(*basis, &pattern, rng);
                        outcomes.set(range.start + r, bit);
                    }
                }
                Op::Feedback { pauli, targets, matrix, outcomes: refs } => {
                    let mut source = BitVec::zeros(refs.len());
                    for (i, &o) in refs.iter().enumerate() {
                        source.set(i, outcomes.get(o));
                    }
                    let local = matrix.mul_vec(&source);
                    let mut pattern = BitVec::zeros(self.n);
                    for i in local.ones() {
                        pattern.set(targets[i], true);
                    }
                    self.apply_pauli(*pauli, &pattern);
                }
                Op::Tick { .. } => {}
            }
        }
        outcomes
    }
}

fn sign_in_span(gens: &[Generator], pattern: &BitVec) -> Option<bool> {
    // Eliminate on (support | sign) augmented rows.
    let n = pattern.len();
    let mut reducer = RowReducer::new(n + 1);
    for g in gens {
        let mut row = BitVec::zeros(n + 1);
        row.xor_at(0, &g.support);
        row.set(n, g.sign);
        reducer.insert(&row);
    }
    let mut target = BitVec::zeros(n + 1);
    target.xor_at(0, pattern);
    let rest = reducer.reduce(&target);
    if rest.ones().iter().any(|&i| i < n) {
        return None;
    }
    Some(rest.get(n))
}
