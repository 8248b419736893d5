//! Circuit IR over named qubit registers, Pauli-frame propagation,
//! local-stochastic fault sampling, lookup decoding and Monte Carlo.
//!
//! All circuits here are CSS Clifford circuits with Pauli noise, so X and Z
//! frames propagate independently and a noiseless reference run only shifts
//! outcomes by a known offset. Frames are tracked instead of full states.

use std::collections::HashMap;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::codes::CssCode;
use crate::gf2::{for_each_subset, subset_count, BitMatrix, BitVec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub fn dual(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

impl Register {
    pub fn qubits(&self) -> Vec<usize> {
        (self.start..self.start + self.len).collect()
    }

    pub fn qubit(&self, i: usize) -> usize {
        assert!(i < self.len, "index {i} outside register {}", self.name);
        self.start + i
    }

    pub fn slice(&self, offset: usize, len: usize) -> Vec<usize> {
        assert!(offset + len <= self.len);
        (self.start + offset..self.start + offset + len).collect()
    }
}

/// Where a fault can sit: on a qubit between two operations, or on a
/// measurement outcome bit. Outcome bits of Z-type measurements are flipped by
/// X-type faults and vice versa.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocationKind {
    Qubit(usize),
    Flip { outcome: usize, by: Basis },
}

#[derive(Debug, Clone)]
pub struct Location {
    pub group: usize,
    pub kind: LocationKind,
    /// Multiplier applied to the physical error rate.
    pub rate: f64,
}

impl Location {
    pub fn admits(&self, basis: Basis) -> bool {
        match self.kind {
            LocationKind::Qubit(_) => true,
            LocationKind::Flip { by, .. } => by == basis,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Op {
    Init { basis: Basis, qubits: Vec<usize> },
    /// Generalized CNOT; `coupling` is targets × controls.
    Cnot { controls: Vec<usize>, targets: Vec<usize>, coupling: BitMatrix },
    Measure { basis: Basis, qubits: Vec<usize>, outcomes: Range<usize>, flips: Option<Range<usize>> },
    /// Projective measurement of the rows of `checks` (columns index `qubits`).
    MeasurePauli {
        basis: Basis,
        qubits: Vec<usize>,
        checks: BitMatrix,
        outcomes: Range<usize>,
        flips: Option<Range<usize>>,
    },
    /// Applies `pauli` on `targets` with pattern `matrix · outcomes[refs]`.
    Feedback { pauli: Basis, targets: Vec<usize>, matrix: BitMatrix, outcomes: Vec<usize> },
    Tick { locations: Range<usize> },
}

#[derive(Debug, Clone)]
pub struct Circuit {
    num_qubits: usize,
    num_outcomes: usize,
    ops: Vec<Op>,
    registers: Vec<Register>,
    locations: Vec<Location>,
    groups: Vec<(String, Range<usize>)>,
    outcome_groups: Vec<(String, Range<usize>)>,
}

#[derive(Debug, Clone, Default)]
pub struct CircuitBuilder {
    num_qubits: usize,
    num_outcomes: usize,
    ops: Vec<Op>,
    registers: Vec<Register>,
    locations: Vec<Location>,
    groups: Vec<(String, Range<usize>)>,
    outcome_groups: Vec<(String, Range<usize>)>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &str, len: usize) -> Register {
        assert!(self.registers.iter().all(|r| r.name != name), "duplicate register {name}");
        let reg = Register { name: name.to_string(), start: self.num_qubits, len };
        self.num_qubits += len;
        self.registers.push(reg.clone());
        reg
    }

    pub fn init(&mut self, basis: Basis, qubits: Vec<usize>) {
        self.ops.push(Op::Init { basis, qubits });
    }

    pub fn cnot(&mut self, controls: Vec<usize>, targets: Vec<usize>, coupling: BitMatrix) {
        assert_eq!(coupling.shape(), (targets.len(), controls.len()), "coupling shape");
        assert!(controls.iter().all(|c| !targets.contains(c)), "control and target overlap");
        self.ops.push(Op::Cnot { controls, targets, coupling });
    }

    pub fn transversal_cnot(&mut self, controls: Vec<usize>, targets: Vec<usize>) {
        let n = controls.len();
        self.cnot(controls, targets, BitMatrix::identity(n));
    }

    fn new_outcomes(&mut self, label: &str, count: usize) -> Range<usize> {
        let range = self.num_outcomes..self.num_outcomes + count;
        self.num_outcomes += count;
        self.outcome_groups.push((label.to_string(), range.clone()));
        range
    }

    fn flip_locations(&mut self, group: &str, outcomes: &Range<usize>, by: Basis) -> Range<usize> {
        let g = self.new_group(group);
        let start = self.locations.len();
        for o in outcomes.clone() {
            self.locations.push(Location { group: g, kind: LocationKind::Flip { outcome: o, by }, rate: 1.0 });
        }
        let range = start..self.locations.len();
        self.groups[g].1 = range.clone();
        range
    }

    fn new_group(&mut self, name: &str) -> usize {
        assert!(self.groups.iter().all(|(n, _)| n != name), "duplicate location group {name}");
        self.groups.push((name.to_string(), 0..0));
        self.groups.len() - 1
    }

    /// Single-qubit measurements. `flips` names a location group holding
    /// one outcome-flip location per bit.
    pub fn measure(&mut self, basis: Basis, qubits: Vec<usize>, label: &str, flips: Option<&str>) -> Range<usize> {
        let outcomes = self.new_outcomes(label, qubits.len());
        let flips = flips.map(|g| self.flip_locations(g, &outcomes, basis.dual()));
        self.ops.push(Op::Measure { basis, qubits, outcomes: outcomes.clone(), flips });
        outcomes
    }

    pub fn measure_pauli(
        &mut self,
        basis: Basis,
        qubits: Vec<usize>,
        checks: BitMatrix,
        label: &str,
        flips: Option<&str>,
    ) -> Range<usize> {
        assert_eq!(checks.cols(), qubits.len(), "check width");
        let outcomes = self.new_outcomes(label, checks.rows());
        let flips = flips.map(|g| self.flip_locations(g, &outcomes, basis.dual()));
        self.ops.push(Op::MeasurePauli { basis, qubits, checks, outcomes: outcomes.clone(), flips });
        outcomes
    }

    pub fn feedback(&mut self, pauli: Basis, targets: Vec<usize>, matrix: BitMatrix, outcomes: Vec<usize>) {
        assert_eq!(matrix.shape(), (targets.len(), outcomes.len()), "feedback shape");
        self.ops.push(Op::Feedback { pauli, targets, matrix, outcomes });
    }

    /// Opens one fault location per qubit, named `group`.
    pub fn tick(&mut self, group: &str, qubits: &[usize], rate: f64) -> Range<usize> {
        let g = self.new_group(group);
        let start = self.locations.len();
        for &q in qubits {
            self.locations.push(Location { group: g, kind: LocationKind::Qubit(q), rate });
        }
        let range = start..self.locations.len();
        self.groups[g].1 = range.clone();
        self.ops.push(Op::Tick { locations: range.clone() });
        range
    }

    pub fn build(self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            num_outcomes: self.num_outcomes,
            ops: self.ops,
            registers: self.registers,
            locations: self.locations,
            groups: self.groups,
            outcome_groups: self.outcome_groups,
        }
    }
}

/// Deviation from the noiseless reference run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub x: BitVec,
    pub z: BitVec,
    pub flips: BitVec,
}

impl Frame {
    pub fn zeros(c: &Circuit) -> Self {
        Frame { x: BitVec::zeros(c.num_qubits), z: BitVec::zeros(c.num_qubits), flips: BitVec::zeros(c.num_outcomes) }
    }

    pub fn xor_assign(&mut self, other: &Frame) {
        self.x.xor_assign(&other.x);
        self.z.xor_assign(&other.z);
        self.flips.xor_assign(&other.flips);
    }
}

/// X and Z fault indicators over the location list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultPath {
    pub x: BitVec,
    pub z: BitVec,
}

impl FaultPath {
    pub fn empty(c: &Circuit) -> Self {
        FaultPath { x: BitVec::zeros(c.locations.len()), z: BitVec::zeros(c.locations.len()) }
    }

    pub fn single(c: &Circuit, basis: Basis, location: usize) -> Self {
        let mut f = Self::empty(c);
        f.of_mut(basis).set(location, true);
        f
    }

    pub fn of(&self, basis: Basis) -> &BitVec {
        match basis {
            Basis::X => &self.x,
            Basis::Z => &self.z,
        }
    }

    pub fn of_mut(&mut self, basis: Basis) -> &mut BitVec {
        match basis {
            Basis::X => &mut self.x,
            Basis::Z => &mut self.z,
        }
    }

    pub fn weight(&self) -> usize {
        self.x.weight() + self.z.weight()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }
}

impl Circuit {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_outcomes(&self) -> usize {
        self.num_outcomes
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn register(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn group(&self, name: &str) -> Option<Range<usize>> {
        self.groups.iter().find(|(n, _)| n == name).map(|(_, r)| r.clone())
    }

    pub fn groups(&self) -> &[(String, Range<usize>)] {
        &self.groups
    }

    pub fn outcome_group(&self, name: &str) -> Option<Range<usize>> {
        self.outcome_groups.iter().find(|(n, _)| n == name).map(|(_, r)| r.clone())
    }

    pub fn outcome_groups(&self) -> &[(String, Range<usize>)] {
        &self.outcome_groups
    }

    /// Location indices that can carry a fault of type `basis`, in order.
    pub fn locations_of(&self, basis: Basis) -> Vec<usize> {
        (0..self.locations.len()).filter(|&i| self.locations[i].admits(basis)).collect()
    }

    /// Concatenated location ranges of the named groups.
    pub fn layout(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for name in names {
            let r = self.group(name).ok_or_else(|| Error::Internal(format!("no location group {name}")))?;
            out.extend(r);
        }
        Ok(out)
    }

    /// Builds a fault path from a bit vector over `layout`.
    pub fn fault_from_layout(&self, basis: Basis, layout: &[usize], bits: &BitVec) -> FaultPath {
        assert_eq!(layout.len(), bits.len(), "layout length");
        let mut f = FaultPath::empty(self);
        for i in bits.ones() {
            f.of_mut(basis).flip(layout[i]);
        }
        f
    }

    /// Linear forward map from faults to outcome flips and final frames.
    pub fn propagate(&self, fault: &FaultPath) -> Frame {
        let mut fr = Frame::zeros(self);
        for op in &self.ops {
            match op {
                Op::Init { qubits, .. } => {
                    for &q in qubits {
                        fr.x.set(q, false);
                        fr.z.set(q, false);
                    }
                }
                Op::Cnot { controls, targets, coupling } => {
                    let cx: Vec<bool> = controls.iter().map(|&c| fr.x.get(c)).collect();
                    let tz: Vec<bool> = targets.iter().map(|&t| fr.z.get(t)).collect();
                    for (ti, &t) in targets.iter().enumerate() {
                        for ci in coupling.row(ti).ones() {
                            if cx[ci] {
                                fr.x.flip(t);
                            }
                            if tz[ti] {
                                fr.z.flip(controls[ci]);
                            }
                        }
                    }
                }
                Op::Measure { basis, qubits, outcomes, flips } => {
                    let frame = if *basis == Basis::Z { &fr.x } else { &fr.z };
                    let bits: Vec<bool> = qubits.iter().map(|&q| frame.get(q)).collect();
                    for (i, b) in bits.into_iter().enumerate() {
                        if b {
                            fr.flips.flip(outcomes.start + i);
                        }
                    }
                    apply_flip_faults(self, fault, flips, &mut fr.flips);
                }
                Op::MeasurePauli { basis, qubits, checks, outcomes, flips } => {
                    let frame = if *basis == Basis::Z { &fr.x } else { &fr.z };
                    let mut local = BitVec::zeros(qubits.len());
                    for (i, &q) in qubits.iter().enumerate() {
                        local.set(i, frame.get(q));
                    }
                    let s = checks.mul_vec(&local);
                    for r in s.ones() {
                        fr.flips.flip(outcomes.start + r);
                    }
                    apply_flip_faults(self, fault, flips, &mut fr.flips);
                }
                Op::Feedback { pauli, targets, matrix, outcomes } => {
                    let mut src = BitVec::zeros(outcomes.len());
                    for (i, &o) in outcomes.iter().enumerate() {
                        src.set(i, fr.flips.get(o));
                    }
                    let pattern = matrix.mul_vec(&src);
                    let frame = if *pauli == Basis::X { &mut fr.x } else { &mut fr.z };
                    for i in pattern.ones() {
                        frame.flip(targets[i]);
                    }
                }
                Op::Tick { locations } => {
                    for l in locations.clone() {
                        if let LocationKind::Qubit(q) = self.locations[l].kind {
                            if fault.x.get(l) {
                                fr.x.flip(q);
                            }
                            if fault.z.get(l) {
                                fr.z.flip(q);
                            }
                        }
                    }
                }
            }
        }
        fr
    }

    /// Per-location single-fault effects for `basis`, indexed like `locations_of(basis)`.
    pub fn effects(&self, basis: Basis) -> Vec<Frame> {
        self.locations_of(basis)
            .into_par_iter()
            .map(|l| self.propagate(&FaultPath::single(self, basis, l)))
            .collect()
    }

    /// Largest row/column weight over all CNOT couplings and measured checks.
    pub fn omega_max(&self) -> usize {
        self.ops
            .iter()
            .map(|op| match op {
                Op::Cnot { coupling, .. } => coupling.weight_profile().max(),
                Op::MeasurePauli { checks, .. } => checks.weight_profile().max(),
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }

    /// Depth after decomposing every generalized CNOT into matchings and every
    /// projective measurement into ancilla init, CNOT layers and readout.
    pub fn gate_depth(&self) -> usize {
        self.ops
            .iter()
            .map(|op| match op {
                Op::Cnot { coupling, .. } => edge_coloring(coupling).len(),
                Op::MeasurePauli { checks, .. } => edge_coloring(checks).len() + 2,
                Op::Tick { .. } => 0,
                _ => 1,
            })
            .sum()
    }

    /// Replaces each projective measurement by an ancilla register, a
    /// generalized CNOT and a transversal measurement. Outcome flip locations
    /// become ancilla qubit locations just before readout. Outcome indices are
    /// unchanged.
    pub fn decompose_measurements(&self) -> Circuit {
        let mut b = CircuitBuilder::new();
        for r in &self.registers {
            b.register(&r.name, r.len);
        }
        let mut group_seen = std::collections::HashSet::new();
        let mut anc_count = 0;
        for op in &self.ops {
            match op {
                Op::MeasurePauli { basis, qubits, checks, outcomes, flips } => {
                    let anc = b.register(&format!("anc{anc_count}"), checks.rows());
                    anc_count += 1;
                    b.init(basis.dual(), anc.qubits());
                    match basis {
                        Basis::Z => b.cnot(qubits.clone(), anc.qubits(), checks.clone()),
                        Basis::X => b.cnot(anc.qubits(), qubits.clone(), checks.transpose()),
                    }
                    if let Some(fr) = flips {
                        let name = &self.groups[self.locations[fr.start].group].0;
                        b.tick(name, &anc.qubits(), 1.0);
                    }
                    let label = self.outcome_label(outcomes.start);
                    let r = if *basis == Basis::Z {
                        b.measure(Basis::Z, anc.qubits(), &label, None)
                    } else {
                        b.measure(Basis::X, anc.qubits(), &label, None)
                    };
                    debug_assert_eq!(&r, outcomes);
                }
                Op::Measure { basis, qubits, outcomes, flips } => {
                    let label = self.outcome_label(outcomes.start);
                    let g = flips.as_ref().map(|fr| self.groups[self.locations[fr.start].group].0.clone());
                    b.measure(*basis, qubits.clone(), &label, g.as_deref());
                }
                Op::Tick { locations } => {
                    let g = &self.groups[self.locations[locations.start].group].0;
                    if group_seen.insert(g.clone()) {
                        let qs: Vec<usize> = locations
                            .clone()
                            .map(|l| match self.locations[l].kind {
                                LocationKind::Qubit(q) => q,
                                _ => unreachable!(),
                            })
                            .collect();
                        b.tick(g, &qs, self.locations[locations.start].rate);
                    }
                }
                other => b.ops.push(other.clone()),
            }
        }
        b.build()
    }

    fn outcome_label(&self, start: usize) -> String {
        self.outcome_groups.iter().find(|(_, r)| r.start == start).map(|(n, _)| n.clone()).unwrap_or_default()
    }
}

fn apply_flip_faults(c: &Circuit, fault: &FaultPath, flips: &Option<Range<usize>>, out: &mut BitVec) {
    let Some(range) = flips else { return };
    for l in range.clone() {
        if let LocationKind::Flip { outcome, by } = c.locations[l].kind {
            if fault.of(by).get(l) {
                out.flip(outcome);
            }
        }
    }
}

/// Proper edge coloring of the bipartite graph with adjacency `m`
/// (rows × columns) using exactly max-degree colors. Each returned class is a
/// list of (row, col) edges forming a matching.
pub fn edge_coloring(m: &BitMatrix) -> Vec<Vec<(usize, usize)>> {
    let delta = m.weight_profile().max();
    if delta == 0 {
        return Vec::new();
    }
    let (rows, cols) = m.shape();
    // at_row[r][c] = column matched to row r in color c
    let mut at_row = vec![vec![usize::MAX; delta]; rows];
    let mut at_col = vec![vec![usize::MAX; delta]; cols];
    for r in 0..rows {
        for c in m.row(r).ones() {
            let a = (0..delta).find(|&k| at_row[r][k] == usize::MAX).expect("row degree within delta");
            let b = (0..delta).find(|&k| at_col[c][k] == usize::MAX).expect("col degree within delta");
            if at_col[c][a] != usize::MAX {
                // Swap colors a and b along the alternating path starting at column c.
                let mut path = Vec::new();
                let mut col_side = true;
                let mut node = c;
                let mut color = a;
                loop {
                    let next = if col_side { at_col[node][color] } else { at_row[node][color] };
                    if next == usize::MAX {
                        break;
                    }
                    path.push((col_side, node, next, color));
                    node = next;
                    col_side = !col_side;
                    color = if color == a { b } else { a };
                }
                for &(is_col, u, v, k) in &path {
                    if is_col {
                        at_col[u][k] = usize::MAX;
                        at_row[v][k] = usize::MAX;
                    } else {
                        at_row[u][k] = usize::MAX;
                        at_col[v][k] = usize::MAX;
                    }
                }
                for &(is_col, u, v, k) in &path {
                    let swapped = if k == a { b } else { a };
                    if is_col {
                        at_col[u][swapped] = v;
                        at_row[v][swapped] = u;
                    } else {
                        at_row[u][swapped] = v;
                        at_col[v][swapped] = u;
                    }
                }
            }
            at_row[r][a] = c;
            at_col[c][a] = r;
        }
    }
    (0..delta)
        .map(|k| (0..rows).filter(|&r| at_row[r][k] != usize::MAX).map(|r| (r, at_row[r][k])).collect())
        .collect()
}

/// Per-trial generator: a counter-based stream keyed by (seed, trial), so
/// parallel and serial runs draw identical faults.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Precomputed geometric-skip sampler for i.i.d. X and Z faults.
#[derive(Debug, Clone)]
pub struct FaultSampler {
    /// (basis, locations sharing one rate, ln(1 − rate))
    classes: Vec<(Basis, Vec<usize>, f64)>,
}

impl FaultSampler {
    pub fn new(c: &Circuit, p_phy: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p_phy) {
            return Err(Error::Precondition(format!("p_phy = {p_phy} outside [0, 1)")));
        }
        let mut classes: Vec<(Basis, Vec<usize>, f64)> = Vec::new();
        for basis in [Basis::X, Basis::Z] {
            let mut by_rate: Vec<(f64, Vec<usize>)> = Vec::new();
            for l in c.locations_of(basis) {
                let rate = (p_phy * c.locations[l].rate).min(1.0);
                match by_rate.iter_mut().find(|(r, _)| *r == rate) {
                    Some((_, v)) => v.push(l),
                    None => by_rate.push((rate, vec![l])),
                }
            }
            for (rate, locs) in by_rate {
                if rate > 0.0 {
                    classes.push((basis, locs, (1.0 - rate).ln()));
                }
            }
        }
        Ok(FaultSampler { classes })
    }

    /// Sparse list of (basis, location) faults.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<(Basis, usize)> {
        let mut out = Vec::new();
        for (basis, locs, log_q) in &self.classes {
            if *log_q == f64::NEG_INFINITY {
                out.extend(locs.iter().map(|&l| (*basis, l)));
                continue;
            }
            let mut i = 0usize;
            loop {
                let u: f64 = rng.gen::<f64>();
                let gap = ((1.0 - u).ln() / log_q).floor();
                if !gap.is_finite() || gap >= (locs.len() - i) as f64 {
                    break;
                }
                i += gap as usize;
                out.push((*basis, locs[i]));
                i += 1;
                if i >= locs.len() {
                    break;
                }
            }
        }
        out
    }
}

/// Draws a fault path with i.i.d. X and Z faults at rate `p_phy` times each
/// location's multiplier. Deterministic in (seed, trial).
pub fn sample_faults(c: &Circuit, p_phy: f64, seed: u64, trial: u64) -> Result<FaultPath> {
    let sampler = FaultSampler::new(c, p_phy)?;
    let mut rng = trial_rng(seed, trial);
    let mut f = FaultPath::empty(c);
    for (basis, l) in sampler.sample(&mut rng) {
        f.of_mut(basis).set(l, true);
    }
    Ok(f)
}

/// Syndrome lookup table over all errors up to a fixed weight.
#[derive(Debug, Clone)]
pub struct LookupDecoder {
    check: BitMatrix,
    max_weight: usize,
    table: HashMap<BitVec, BitVec>,
    fallback: BitMatrix,
}

/// Largest table the decoder will build.
pub const DECODER_TABLE_CAP: u128 = 5_000_000;

impl LookupDecoder {
    pub fn new(check: &BitMatrix, max_weight: usize) -> Result<Self> {
        let n = check.cols();
        let size = subset_count(n, max_weight);
        if size > DECODER_TABLE_CAP {
            return Err(Error::SearchTooLarge {
                what: "decoder table".into(),
                size: size as usize,
                cap: DECODER_TABLE_CAP as usize,
            });
        }
        let mut table = HashMap::new();
        table.insert(BitVec::zeros(check.rows()), BitVec::zeros(n));
        let columns: Vec<BitVec> = (0..n).map(|c| check.column(c)).collect();
        for_each_subset(n, max_weight, |idx| {
            let mut s = BitVec::zeros(check.rows());
            for &i in idx {
                s.xor_assign(&columns[i]);
            }
            table.entry(s).or_insert_with(|| BitVec::from_indices(n, idx));
            true
        });
        let fallback = check.generalized_right_inverse();
        Ok(LookupDecoder { check: check.clone(), max_weight, table, fallback })
    }

    pub fn max_weight(&self) -> usize {
        self.max_weight
    }

    pub fn check(&self) -> &BitMatrix {
        &self.check
    }

    /// Minimum-weight correction, or None for an out-of-table syndrome.
    pub fn decode(&self, syndrome: &BitVec) -> Option<BitVec> {
        self.table.get(syndrome).cloned()
    }

    /// Some syndrome-consistent correction for out-of-table syndromes.
    pub fn fallback(&self, syndrome: &BitVec) -> BitVec {
        self.fallback.mul_vec(syndrome)
    }
}

/// X- and Z-error lookup decoders for a CSS code, correcting up to ⌊(d−1)/2⌋.
#[derive(Debug, Clone)]
pub struct CssDecoder {
    pub code: CssCode,
    /// Decodes X errors from Z-check syndromes.
    pub x_errors: LookupDecoder,
    /// Decodes Z errors from X-check syndromes.
    pub z_errors: LookupDecoder,
}

impl CssDecoder {
    pub fn new(code: &CssCode) -> Result<Self> {
        let d = code.d.ok_or_else(|| Error::Precondition("decoder needs a known distance".into()))?;
        let t = d.saturating_sub(1) / 2;
        Ok(CssDecoder {
            code: code.clone(),
            x_errors: LookupDecoder::new(&code.h_z, t)?,
            z_errors: LookupDecoder::new(&code.h_x, t)?,
        })
    }

    /// Outcome of ideal decoding of a residual error of type `basis`.
    pub fn ideal_decode(&self, basis: Basis, residual: &BitVec) -> DecodeOutcome {
        let (dec, logical) = match basis {
            Basis::X => (&self.x_errors, &self.code.j_z),
            Basis::Z => (&self.z_errors, &self.code.j_x),
        };
        let s = dec.check.mul_vec(residual);
        match dec.decode(&s) {
            None => {
                let c = dec.fallback(&s);
                DecodeOutcome::Heralded { logical_error: !logical.mul_vec(&residual.xor(&c)).is_zero() }
            }
            Some(c) => {
                if logical.mul_vec(&residual.xor(&c)).is_zero() {
                    DecodeOutcome::Success
                } else {
                    DecodeOutcome::LogicalError
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeOutcome {
    Success,
    LogicalError,
    /// Out-of-table syndrome. Counted as a failure; `logical_error` records
    /// whether a syndrome-consistent fallback correction would also have failed.
    Heralded { logical_error: bool },
}

impl DecodeOutcome {
    pub fn is_failure(self) -> bool {
        self != DecodeOutcome::Success
    }

    /// Logical error after resolving heralded trials with the fallback.
    pub fn is_logical_error(self) -> bool {
        matches!(self, DecodeOutcome::LogicalError | DecodeOutcome::Heralded { logical_error: true })
    }
}

/// Wilson score interval for a binomial proportion (z = 1.96).
pub fn wilson_interval(failures: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let phat = failures as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (phat + z * z / (2.0 * n)) / denom;
    let half = z * ((phat * (1.0 - phat) / n + z * z / (4.0 * n * n)).sqrt()) / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub p: f64,
    pub trials: u64,
    /// Trials with any failure, heralded ones included.
    pub failures: u64,
    /// Logical X-frame errors with heralded trials resolved by the fallback.
    pub x_failures: u64,
    pub z_failures: u64,
    pub heralded: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl McReport {
    fn from_counts(p: f64, trials: u64, failures: u64, x_failures: u64, z_failures: u64, heralded: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(failures, trials);
        McReport {
            p,
            trials,
            failures,
            x_failures,
            z_failures,
            heralded,
            estimate: if trials == 0 { 0.0 } else { failures as f64 / trials as f64 },
            ci_low,
            ci_high,
        }
    }

    pub const TSV_HEADER: &'static str = "p\ttrials\tfailures\testimate\tci_low\tci_high";

    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{:.6e}\t{:.6e}\t{:.6e}",
            self.p, self.trials, self.failures, self.estimate, self.ci_low, self.ci_high
        )
    }
}

/// One error-correction cycle by teleportation onto an encoded Bell pair:
/// data block A is coupled into resource block B by transversal CNOT, A is
/// read out in X and B in Z, and the data reappears on C after Pauli
/// feedback. The Z readout of B gives the X-error syndrome and the X
/// readout of A gives the Z-error syndrome. A correction from the lookup
/// decoder is applied, then a final ideal round decides logical success.
#[derive(Debug, Clone)]
pub struct MemoryExperiment {
    pub circuit: Circuit,
    pub decoder: CssDecoder,
    pub lambda: f64,
    mu_x: Range<usize>,
    mu_z: Range<usize>,
    out: Register,
    x_effects: Vec<Frame>,
    z_effects: Vec<Frame>,
    x_index: Vec<usize>,
    z_index: Vec<usize>,
}

impl MemoryExperiment {
    /// `lambda` scales the fault rate on resource-state locations.
    pub fn new(code: &CssCode, lambda: f64) -> Result<Self> {
        if lambda.is_nan() || lambda < 0.0 {
            return Err(Error::Precondition(format!("lambda = {lambda} must be nonnegative")));
        }
        let n = code.n;
        let decoder = CssDecoder::new(code)?;
        let mut b = CircuitBuilder::new();
        let a = b.register("A", n);
        let rb = b.register("B", n);
        let rc = b.register("C", n);
        b.tick("A1", &a.qubits(), 1.0);
        b.tick("B1", &rb.qubits(), lambda);
        b.tick("C1", &rc.qubits(), lambda);
        b.transversal_cnot(a.qubits(), rb.qubits());
        b.tick("A2", &a.qubits(), 1.0);
        b.tick("B2", &rb.qubits(), 1.0);
        b.tick("C2", &rc.qubits(), 1.0);
        let mu_x = b.measure(Basis::X, a.qubits(), "mu_x", None);
        let mu_z = b.measure(Basis::Z, rb.qubits(), "mu_z", None);
        b.feedback(Basis::X, rc.qubits(), BitMatrix::identity(n), mu_z.clone().collect());
        b.feedback(Basis::Z, rc.qubits(), BitMatrix::identity(n), mu_x.clone().collect());
        let circuit = b.build();
        let x_index = circuit.locations_of(Basis::X);
        let z_index = circuit.locations_of(Basis::Z);
        let x_effects = circuit.effects(Basis::X);
        let z_effects = circuit.effects(Basis::Z);
        Ok(MemoryExperiment { circuit, decoder, lambda, mu_x, mu_z, out: rc, x_effects, z_effects, x_index, z_index })
    }

    fn effect(&self, basis: Basis, location: usize) -> &Frame {
        let (idx, eff) = match basis {
            Basis::X => (&self.x_index, &self.x_effects),
            Basis::Z => (&self.z_index, &self.z_effects),
        };
        &eff[idx.binary_search(&location).expect("admissible location")]
    }

    /// (X outcome, Z outcome) for one fault list.
    pub fn evaluate(&self, faults: &[(Basis, usize)]) -> (DecodeOutcome, DecodeOutcome) {
        let mut fr = Frame::zeros(&self.circuit);
        for &(basis, l) in faults {
            fr.xor_assign(self.effect(basis, l));
        }
        let slice = |v: &BitVec, r: &Range<usize>| v.slice(r.start, r.end - r.start);
        let n = self.out.len;
        let x_out = fr.x.slice(self.out.start, n);
        let z_out = fr.z.slice(self.out.start, n);
        let x = self.cycle(Basis::X, &slice(&fr.flips, &self.mu_z), x_out);
        let z = self.cycle(Basis::Z, &slice(&fr.flips, &self.mu_x), z_out);
        (x, z)
    }

    fn cycle(&self, basis: Basis, readout_flips: &BitVec, mut residual: BitVec) -> DecodeOutcome {
        let dec = match basis {
            Basis::X => &self.decoder.x_errors,
            Basis::Z => &self.decoder.z_errors,
        };
        let s = dec.check.mul_vec(readout_flips);
        match dec.decode(&s) {
            Some(c) => {
                residual.xor_assign(&c);
                self.decoder.ideal_decode(basis, &residual)
            }
            None => {
                residual.xor_assign(&dec.fallback(&s));
                let logical_error = self.decoder.ideal_decode(basis, &residual).is_logical_error();
                DecodeOutcome::Heralded { logical_error }
            }
        }
    }

    pub fn run(&self, p_phy: f64, trials: u64, seed: u64) -> Result<McReport> {
        let sampler = FaultSampler::new(&self.circuit, p_phy)?;
        let counts = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, t);
                let faults = sampler.sample(&mut rng);
                let (x, z) = self.evaluate(&faults);
                let her = matches!(x, DecodeOutcome::Heralded { .. }) || matches!(z, DecodeOutcome::Heralded { .. });
                [
                    x.is_logical_error() as u64,
                    z.is_logical_error() as u64,
                    (x.is_failure() || z.is_failure()) as u64,
                    her as u64,
                ]
            })
            .reduce(|| [0; 4], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]);
        let [xf, zf, any, her] = counts;
        Ok(McReport::from_counts(p_phy, trials, any, xf, zf, her))
    }
}

/// Merged error rate of two consecutive idle layers.
pub fn merge_wait(p1: f64, p2: f64) -> f64 {
    p1 + p2 + p1 * p2
}

/// Reduced error rates of the resource-preparation gadgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    pub q_bs: f64,
    pub q_ms: f64,
    pub q_ltc: f64,
}

/// `s1` is the depth of the code-check extraction, `s2` the depth of the
/// F-code check extraction.
pub fn reduced_error_params(p_phy: f64, s1: u32, s2: u32) -> Result<ReducedParams> {
    if !(0.0..1.0).contains(&p_phy) {
        return Err(Error::Precondition(format!("p_phy = {p_phy} outside [0, 1)")));
    }
    let fw1 = 2f64.powi(s1 as i32);
    let bw1 = 2f64.powf(s1 as f64 * fw1);
    let q_ms = 2.0 * bw1 * (2.0 * p_phy).powf(1.0 / fw1) + bw1 * p_phy.powf(1.0 / fw1);
    let fw2 = 2f64.powi(s2 as i32);
    let bw2 = 2f64.powf((s2 as f64 + 1.0) * fw2);
    let q_ltc = 3.0 * bw2 * p_phy.powf(1.0 / fw2);
    Ok(ReducedParams { q_bs: 12.0 * p_phy.sqrt(), q_ms, q_ltc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_coloring_is_proper() {
        let m = BitMatrix::from_strs(&["1101", "0111", "1011", "1110"]);
        let classes = edge_coloring(&m);
        assert_eq!(classes.len(), 3);
        let mut seen = BitMatrix::zeros(4, 4);
        for class in &classes {
            let mut rows = std::collections::HashSet::new();
            let mut cols = std::collections::HashSet::new();
            for &(r, c) in class {
                assert!(rows.insert(r) && cols.insert(c));
                assert!(!seen.get(r, c));
                seen.set(r, c, true);
            }
        }
        assert_eq!(seen, m);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(40, 100_000);
        assert!(lo < 4e-4 && 4e-4 < hi);
        assert_eq!(wilson_interval(0, 10).0, 0.0);
    }
}
