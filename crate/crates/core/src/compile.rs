//! Logical-operation decomposition, block-disjoint scheduling and cost
//! calculators for a layer of logical operations on memory-code blocks.
//!
//! Blocks and logical qubits are 0-indexed. Labels inside measurement
//! templates (`j`, `{a}`, `{b}`, `1`, `S`, `C`) stay symbolic, in LaTeX
//! subscript form: `1` is the first logical qubit of an ancilla memory
//! block, `S` and `C` the logical qubit of a surface-code and color-code
//! block.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Init,
    Mea,
    H,
    S,
    T,
    Cnot,
}

/// A logical operation `(B, F)`: block operand(s) plus the gate acting on them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogicalOp {
    Init { block: usize },
    Mea { block: usize, qubit: usize },
    H { block: usize, qubit: usize },
    S { block: usize, qubit: usize },
    T { block: usize, qubit: usize },
    Cnot { control: (usize, usize), target: (usize, usize) },
}

impl LogicalOp {
    pub fn kind(&self) -> OpKind {
        match self {
            LogicalOp::Init { .. } => OpKind::Init,
            LogicalOp::Mea { .. } => OpKind::Mea,
            LogicalOp::H { .. } => OpKind::H,
            LogicalOp::S { .. } => OpKind::S,
            LogicalOp::T { .. } => OpKind::T,
            LogicalOp::Cnot { .. } => OpKind::Cnot,
        }
    }

    fn single(&self) -> Option<(usize, usize)> {
        match *self {
            LogicalOp::Mea { block, qubit }
            | LogicalOp::H { block, qubit }
            | LogicalOp::S { block, qubit }
            | LogicalOp::T { block, qubit } => Some((block, qubit)),
            _ => None,
        }
    }

    /// Set of `(block, logical qubit)` pairs touched. Initialization prepares
    /// every logical qubit of its block, so its support is the whole block.
    pub fn qubit_support(&self, k: usize) -> Vec<(usize, usize)> {
        match *self {
            LogicalOp::Init { block } => (0..k).map(|j| (block, j)).collect(),
            LogicalOp::Cnot { control, target } => vec![control, target],
            _ => vec![self.single().unwrap()],
        }
    }

    /// Distinct blocks touched, ascending.
    pub fn block_support(&self) -> Vec<usize> {
        match *self {
            LogicalOp::Init { block } => vec![block],
            LogicalOp::Cnot { control, target } if control.0 == target.0 => vec![control.0],
            LogicalOp::Cnot { control, target } => {
                let (u, v) = (control.0, target.0);
                vec![u.min(v), u.max(v)]
            }
            _ => vec![self.single().unwrap().0],
        }
    }

    /// Operation family `F` with block operands stripped, e.g. `H_2` or `CNOT_{0,3}`.
    pub fn family(&self) -> String {
        match *self {
            LogicalOp::Init { .. } => "INIT".into(),
            LogicalOp::Mea { qubit, .. } => format!("MEA_{qubit}"),
            LogicalOp::H { qubit, .. } => format!("H_{qubit}"),
            LogicalOp::S { qubit, .. } => format!("S_{qubit}"),
            LogicalOp::T { qubit, .. } => format!("T_{qubit}"),
            LogicalOp::Cnot { control, target } => format!("CNOT_{{{},{}}}", control.1, target.1),
        }
    }

    fn check_range(&self, k: usize) -> Result<()> {
        for (_, q) in self.qubit_support(k) {
            if q >= k {
                return Err(Error::Precondition(format!("{self}: logical qubit {q} out of range for k = {k}")));
            }
        }
        if let LogicalOp::Cnot { control, target } = self {
            if control == target {
                return Err(Error::Precondition(format!("{self}: control equals target")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for LogicalOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LogicalOp::Init { block } => write!(f, "INIT {block}"),
            LogicalOp::Cnot { control, target } => {
                write!(f, "CNOT {}.{} {}.{}", control.0, control.1, target.0, target.1)
            }
            op => {
                let (u, j) = op.single().unwrap();
                let name = match op.kind() {
                    OpKind::Mea => "MEA",
                    OpKind::H => "H",
                    OpKind::S => "S",
                    _ => "T",
                };
                write!(f, "{name} {u}.{j}")
            }
        }
    }
}

fn parse_slot(tok: &str, line: usize) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("line {line}: expected <block>.<qubit>, got {tok:?}"));
    let (u, j) = tok.split_once('.').ok_or_else(bad)?;
    Ok((u.parse().map_err(|_| bad())?, j.parse().map_err(|_| bad())?))
}

/// Parse a logical circuit: one operation per line, `#` comments allowed.
pub fn parse_circuit(text: &str) -> Result<Vec<LogicalOp>> {
    let mut ops = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        let arity = |want: usize| {
            if toks.len() == want + 1 {
                Ok(())
            } else {
                Err(Error::Parse(format!("line {line}: {} takes {want} operand(s)", toks[0])))
            }
        };
        let op = match toks[0].to_ascii_uppercase().as_str() {
            "INIT" => {
                arity(1)?;
                let block = toks[1]
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {line}: bad block {:?}", toks[1])))?;
                LogicalOp::Init { block }
            }
            "CNOT" => {
                arity(2)?;
                LogicalOp::Cnot { control: parse_slot(toks[1], line)?, target: parse_slot(toks[2], line)? }
            }
            name @ ("MEA" | "H" | "S" | "T") => {
                arity(1)?;
                let (block, qubit) = parse_slot(toks[1], line)?;
                match name {
                    "MEA" => LogicalOp::Mea { block, qubit },
                    "H" => LogicalOp::H { block, qubit },
                    "S" => LogicalOp::S { block, qubit },
                    _ => LogicalOp::T { block, qubit },
                }
            }
            other => return Err(Error::Parse(format!("line {line}: unknown operation {other:?}"))),
        };
        ops.push(op);
    }
    Ok(ops)
}

// ---------------------------------------------------------------------------
// Decomposition table

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Z,
}

/// One tensor factor of a logical measurement, e.g. `Z̄_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub pauli: Pauli,
    pub label: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalMeasurement {
    pub factors: Vec<Factor>,
    pub repeat: usize,
}

impl LogicalMeasurement {
    pub fn latex(&self) -> String {
        let body = self
            .factors
            .iter()
            .map(|f| format!("\\bar{{{}}}_{}", if f.pauli == Pauli::X { "X" } else { "Z" }, f.label))
            .collect::<Vec<_>>()
            .join(" \\otimes ");
        if self.repeat > 1 {
            format!("{body} \\times {}", self.repeat)
        } else {
            body
        }
    }
}

/// Resource states consumed beyond those used by the logical measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtraResource {
    MemoryX,
    MemoryZ,
    SurfaceX,
    SurfaceZ,
    ColorX,
    ColorZ,
    TMagic,
}

impl ExtraResource {
    pub fn latex(&self) -> &'static str {
        match self {
            ExtraResource::MemoryX => "$H^M_X$",
            ExtraResource::MemoryZ => "$H^M_Z$",
            ExtraResource::SurfaceX => "$H^S_X$",
            ExtraResource::SurfaceZ => "$H^S_Z$",
            ExtraResource::ColorX => "$H^C_X$",
            ExtraResource::ColorZ => "$H^C_Z$",
            ExtraResource::TMagic => "$T$-gate magic state",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagicUse {
    None,
    /// One copy is used up per application.
    ConsumesT,
    /// One copy is required as input and survives the gate.
    ReusesS,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub name: &'static str,
    pub measurements: Vec<LogicalMeasurement>,
    pub extras: Vec<ExtraResource>,
    pub magic: MagicUse,
}

impl Decomposition {
    pub fn measurement_count(&self) -> usize {
        self.measurements.iter().map(|m| m.repeat).sum()
    }

    /// Cells of the row as they would be typeset: name, measurements, extras.
    pub fn latex_cells(&self) -> [String; 3] {
        let meas = self.measurements.iter().map(|m| format!("${}$", m.latex())).collect::<Vec<_>>();
        let extras = self.extras.iter().map(|e| e.latex().to_string()).collect::<Vec<_>>();
        [self.name.to_string(), meas.join(", "), extras.join(", ")]
    }
}

fn m(spec: &[(Pauli, &'static str)]) -> LogicalMeasurement {
    LogicalMeasurement { factors: spec.iter().map(|&(pauli, label)| Factor { pauli, label }).collect(), repeat: 1 }
}

use Pauli::{X, Z};

fn row(kind: OpKind) -> Decomposition {
    use ExtraResource::*;
    match kind {
        OpKind::Init => Decomposition { name: "Initialization", measurements: vec![], extras: vec![MemoryX], magic: MagicUse::None },
        OpKind::Mea => Decomposition { name: "$Mea_j$", measurements: vec![m(&[(Z, "j")])], extras: vec![], magic: MagicUse::None },
        OpKind::H => Decomposition {
            name: "$H_j$",
            measurements: vec![m(&[(Z, "j"), (Z, "1")]), m(&[(X, "j")]), m(&[(Z, "j"), (X, "1")]), m(&[(Z, "1")])],
            extras: vec![MemoryZ],
            magic: MagicUse::None,
        },
        OpKind::S => Decomposition {
            name: "$S_j$",
            measurements: vec![m(&[(Z, "1"), (Z, "1")]), m(&[(Z, "j"), (Z, "1"), (X, "1")]), m(&[(X, "1")])],
            extras: vec![MemoryZ],
            magic: MagicUse::ReusesS,
        },
        OpKind::T => Decomposition {
            name: "$T_j$",
            measurements: vec![
                m(&[(Z, "j"), (Z, "1")]),
                LogicalMeasurement { repeat: 2, ..m(&[(X, "1")]) },
                m(&[(Z, "1"), (Z, "1")]),
                m(&[(Z, "j"), (Z, "1"), (X, "1")]),
            ],
            extras: vec![TMagic, MemoryZ],
            magic: MagicUse::ConsumesT,
        },
        OpKind::Cnot => Decomposition {
            name: "$CNOT_{a,b}$",
            measurements: vec![m(&[(Z, "{a}"), (Z, "1")]), m(&[(X, "{b}"), (X, "1")]), m(&[(Z, "1")])],
            extras: vec![MemoryZ],
            magic: MagicUse::None,
        },
    }
}

/// Logical measurements and extra resource states implementing `op`.
pub fn decompose(op: &LogicalOp) -> Decomposition {
    row(op.kind())
}

/// Rows for the two magic-state preparation operations.
pub fn magic_preparation_rows() -> Vec<Decomposition> {
    use ExtraResource::*;
    vec![
        Decomposition {
            name: "Noisy $T$-gate magic state preparation",
            measurements: vec![m(&[(Z, "S"), (Z, "1")])],
            extras: vec![SurfaceX, SurfaceZ, MemoryZ],
            magic: MagicUse::None,
        },
        Decomposition {
            name: "Fault-tolerant $S$-state magic state preparation",
            measurements: vec![m(&[(Z, "C"), (Z, "1")])],
            extras: vec![ColorX, ColorZ, MemoryZ],
            magic: MagicUse::None,
        },
    ]
}

/// Full decomposition table in display order.
pub fn operation_table() -> Vec<Decomposition> {
    let mut rows: Vec<_> = [OpKind::Init, OpKind::Mea, OpKind::H, OpKind::S, OpKind::T, OpKind::Cnot]
        .into_iter()
        .map(row)
        .collect();
    rows.extend(magic_preparation_rows());
    rows
}

// ---------------------------------------------------------------------------
// Disjointness and scheduling

pub fn is_qubit_disjoint(ops: &[LogicalOp], k: usize) -> bool {
    let mut seen = HashSet::new();
    ops.iter().all(|op| op.qubit_support(k).into_iter().all(|s| seen.insert(s)))
}

pub fn is_block_disjoint(ops: &[LogicalOp]) -> bool {
    let mut seen = HashSet::new();
    ops.iter().all(|op| op.block_support().into_iter().all(|b| seen.insert(b)))
}

/// Partition of an operation set into block-disjoint sub-layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    /// Indices into the input set, one list per color, each ascending.
    pub classes: Vec<Vec<usize>>,
}

impl Schedule {
    pub fn colors(&self) -> usize {
        self.classes.len()
    }
}

/// Greedy proper edge coloring of the block multigraph: each operation takes
/// the smallest color free at all of its blocks. With maximum degree `k`
/// this uses at most `2k - 1` colors.
pub fn serialize(ops: &[LogicalOp], k: usize) -> Result<Schedule> {
    for op in ops {
        op.check_range(k)?;
    }
    if !is_qubit_disjoint(ops, k) {
        return Err(Error::Precondition("operation set is not qubit-disjoint".into()));
    }
    let mut used: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        let blocks = op.block_support();
        let color = (0..)
            .find(|&c| blocks.iter().all(|b| !used.get(b).is_some_and(|u| u.get(c).copied().unwrap_or(false))))
            .unwrap();
        for b in blocks {
            let u = used.entry(b).or_default();
            if u.len() <= color {
                u.resize(color + 1, false);
            }
            u[color] = true;
        }
        if classes.len() <= color {
            classes.resize(color + 1, Vec::new());
        }
        classes[color].push(i);
    }
    Ok(Schedule { classes })
}

/// Problems with `schedule` as a partition of `ops` into block-disjoint classes.
pub fn check_schedule(ops: &[LogicalOp], schedule: &Schedule) -> Vec<String> {
    let mut issues = Vec::new();
    let mut count = vec![0usize; ops.len()];
    for (c, class) in schedule.classes.iter().enumerate() {
        for &i in class {
            match count.get_mut(i) {
                Some(slot) => *slot += 1,
                None => issues.push(format!("class {c}: index {i} out of range")),
            }
        }
        let members: Vec<LogicalOp> = class.iter().filter_map(|&i| ops.get(i).copied()).collect();
        if !is_block_disjoint(&members) {
            issues.push(format!("class {c} is not block-disjoint"));
        }
        if class.is_empty() {
            issues.push(format!("class {c} is empty"));
        }
    }
    for (i, &n) in count.iter().enumerate() {
        if n != 1 {
            issues.push(format!("operation {i} appears {n} times"));
        }
    }
    issues
}

/// Split a sequential circuit into qubit-disjoint layers, placing each
/// operation one layer after the last operation sharing a logical qubit.
pub fn layer_circuit(ops: &[LogicalOp], k: usize) -> Result<Vec<Vec<usize>>> {
    let mut depth: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut layers: Vec<Vec<usize>> = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        op.check_range(k)?;
        let support = op.qubit_support(k);
        let level = support.iter().filter_map(|s| depth.get(s)).max().map_or(0, |d| d + 1);
        for s in support {
            depth.insert(s, level);
        }
        if layers.len() <= level {
            layers.resize(level + 1, Vec::new());
        }
        layers[level].push(i);
    }
    Ok(layers)
}

// ---------------------------------------------------------------------------
// Cost arithmetic

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Number of LTSP batches for `num` copies of one operation family:
/// `ceil(ceil(ceil(num / k_R) / k_F) / d_S^2)`.
pub fn batch(num: u64, k_r: u64, k_f: u64, d_s: u64) -> Result<u64> {
    if k_r == 0 || k_f == 0 || d_s == 0 {
        return Err(Error::Precondition("k_R, k_F and d_S must be positive".into()));
    }
    Ok(ceil_div(ceil_div(ceil_div(num, k_r), k_f), d_s * d_s))
}

/// Exact rational upper bound on the sum of batches over `families`
/// operation families with `total` operations in all:
/// `(total + families (k_R + k_R k_F + k_R k_F d_S^2)) / (k_R k_F d_S^2)`.
pub fn batch_sum_bound(total: u64, families: u64, k_r: u64, k_f: u64, d_s: u64) -> BigRational {
    let big = |x: u64| BigInt::from(x);
    let d2 = big(d_s) * big(d_s);
    let denom = big(k_r) * big(k_f) * &d2;
    let per_family = big(k_r) + big(k_r) * big(k_f) + &denom;
    BigRational::new(big(total) + big(families) * per_family, denom)
}

/// Number of distinct operation families for `k` logical qubits per block:
/// `k` each of Mea, H, S, T, `k^2 - k` CNOT index pairs, and initialization.
pub fn family_count(k: u64) -> u64 {
    4 * k + k * k - k + 1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Logical qubits per memory block.
    pub k: u64,
    /// Memory block length.
    pub n: u64,
    /// Copies served in parallel by one surgery ancilla (R-code dimension).
    pub k_r: u64,
    /// Copies produced per LTSP run (F-code dimension).
    pub k_f: u64,
    /// Surface-code distance for noisy T-state injection.
    pub d_s: u64,
    /// Number of data memory blocks.
    pub blocks: u64,
    /// Constant `c` in the family-count term `c k^2`.
    pub family_constant: u64,
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let named = [("k", self.k), ("n", self.n), ("k_R", self.k_r), ("k_F", self.k_f), ("d_S", self.d_s)];
        for (name, v) in named {
            if v == 0 {
                return Err(Error::Precondition(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyCost {
    pub family: String,
    pub num: u64,
    pub batch: u64,
    /// Logical measurements per operation, each needing one deformed-code resource state.
    pub measurements: u64,
    pub extras: u64,
    /// LTSP circuit runs per step: `batch` per measurement, `batch * k_R` per extra state.
    pub ltsp_runs: u64,
    pub magic_t: u64,
    pub magic_s_inputs: u64,
    /// Resource-factory qubits, `batch * n k_R k_F d_S^2` per resource type.
    pub factory_qubits: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub params: CostParams,
    pub operations: u64,
    pub families: Vec<FamilyCost>,
    pub batch_sum: u64,
    /// Bound using the number of families actually present.
    pub bound_present: BigRational,
    /// Bound using `family_constant * k^2` families.
    pub bound_constant: BigRational,
    pub sectors: Vec<(String, u128)>,
    /// Steps per sub-layer (`d_S^2`) and time units per step (`d_S`).
    pub steps: u64,
    pub step_time: u64,
}

impl CostReport {
    pub fn bound_present_holds(&self) -> bool {
        BigRational::from_integer(BigInt::from(self.batch_sum)) <= self.bound_present
    }

    pub fn bound_constant_holds(&self) -> bool {
        BigRational::from_integer(BigInt::from(self.batch_sum)) <= self.bound_constant
    }

    pub fn sublayer_time(&self) -> u64 {
        self.steps * self.step_time
    }

    pub fn factory_qubits(&self) -> u128 {
        self.families.iter().map(|f| f.factory_qubits).sum()
    }

    pub fn total_qubits(&self) -> u128 {
        self.sectors.iter().map(|s| s.1).sum()
    }

    /// Key/value lines, tab separated.
    pub fn to_tsv(&self, prefix: &str) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{prefix}{k}\t{v}\n"));
        kv("operations", self.operations.to_string());
        for f in &self.families {
            let key = format!("family.{}", f.family);
            kv(&format!("{key}.num"), f.num.to_string());
            kv(&format!("{key}.batch"), f.batch.to_string());
            kv(&format!("{key}.ltsp_runs"), f.ltsp_runs.to_string());
            kv(&format!("{key}.factory_qubits"), f.factory_qubits.to_string());
            if f.magic_t > 0 {
                kv(&format!("{key}.t_states_consumed"), f.magic_t.to_string());
            }
            if f.magic_s_inputs > 0 {
                kv(&format!("{key}.s_states_reused"), f.magic_s_inputs.to_string());
            }
        }
        kv("batch_sum", self.batch_sum.to_string());
        kv("bound_present", fmt_ratio(&self.bound_present));
        kv("bound_present_holds", self.bound_present_holds().to_string());
        kv("bound_constant", fmt_ratio(&self.bound_constant));
        kv("bound_constant_holds", self.bound_constant_holds().to_string());
        for (name, q) in &self.sectors {
            kv(&format!("qubits.{name}"), q.to_string());
        }
        kv("qubits.total", self.total_qubits().to_string());
        kv("steps", self.steps.to_string());
        kv("step_time", self.step_time.to_string());
        kv("sublayer_time", self.sublayer_time().to_string());
        out
    }
}

/// `p/q` with a six-digit decimal approximation.
fn fmt_ratio(r: &BigRational) -> String {
    let approx = r.to_f64().unwrap_or(f64::NAN);
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{} ({approx:.6})", r.numer(), r.denom())
    }
}

/// Cost of one block-disjoint sub-layer.
pub fn sublayer_cost(ops: &[LogicalOp], params: &CostParams) -> Result<CostReport> {
    params.validate()?;
    if !is_block_disjoint(ops) {
        return Err(Error::Precondition("sub-layer is not block-disjoint".into()));
    }
    let mut by_family: BTreeMap<String, (u64, OpKind)> = BTreeMap::new();
    for op in ops {
        op.check_range(params.k as usize)?;
        by_family.entry(op.family()).or_insert((0, op.kind())).0 += 1;
    }
    let per_run = u128::from(params.n) * u128::from(params.k_r) * u128::from(params.k_f) * u128::from(params.d_s).pow(2);
    let mut families = Vec::new();
    for (family, (num, kind)) in by_family {
        let d = row(kind);
        let b = batch(num, params.k_r, params.k_f, params.d_s)?;
        let measurements = d.measurement_count() as u64;
        let extras = d.extras.iter().filter(|e| **e != ExtraResource::TMagic).count() as u64;
        families.push(FamilyCost {
            family,
            num,
            batch: b,
            measurements,
            extras,
            ltsp_runs: b * measurements + b * params.k_r * extras,
            magic_t: if d.magic == MagicUse::ConsumesT { num } else { 0 },
            magic_s_inputs: if d.magic == MagicUse::ReusesS { num } else { 0 },
            factory_qubits: u128::from(b) * per_run * u128::from(measurements + extras),
        });
    }
    let operations = ops.len() as u64;
    let batch_sum = families.iter().map(|f| f.batch).sum();
    let (k_r, k_f, d_s) = (params.k_r, params.k_f, params.d_s);
    let bound_present = batch_sum_bound(operations, families.len() as u64, k_r, k_f, d_s);
    let bound_constant = batch_sum_bound(operations, params.family_constant * params.k * params.k, k_r, k_f, d_s);
    let blocks = u128::from(params.blocks);
    let n = u128::from(params.n);
    let d2 = u128::from(d_s).pow(2);
    let factory: u128 = families.iter().map(|f| f.factory_qubits).sum();
    let sectors = vec![
        ("data_memory".to_string(), blocks * n),
        ("ancilla_s_magic".to_string(), blocks * n),
        ("ancilla_gates".to_string(), blocks * n),
        ("ancilla_slot_switching".to_string(), blocks * n),
        ("resource_factory".to_string(), factory),
        ("magic_factory_surface".to_string(), blocks * d2),
        ("magic_factory_memory".to_string(), blocks * n),
    ];
    Ok(CostReport {
        params: *params,
        operations,
        families,
        batch_sum,
        bound_present,
        bound_constant,
        sectors,
        steps: d_s * d_s,
        step_time: d_s,
    })
}

/// A circuit split into qubit-disjoint layers, each serialized into
/// block-disjoint sub-layers with a cost report per sub-layer.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub ops: Vec<LogicalOp>,
    pub layers: Vec<Vec<usize>>,
    pub schedules: Vec<Schedule>,
    pub costs: Vec<Vec<CostReport>>,
}

pub fn compile(ops: &[LogicalOp], params: &CostParams) -> Result<Compiled> {
    params.validate()?;
    let k = params.k as usize;
    let layers = layer_circuit(ops, k)?;
    let mut schedules = Vec::new();
    let mut costs = Vec::new();
    for layer in &layers {
        let members: Vec<LogicalOp> = layer.iter().map(|&i| ops[i]).collect();
        let sched = serialize(&members, k)?;
        let mut layer_costs = Vec::new();
        for class in &sched.classes {
            let sub: Vec<LogicalOp> = class.iter().map(|&i| members[i]).collect();
            layer_costs.push(sublayer_cost(&sub, params)?);
        }
        schedules.push(Schedule {
            classes: sched.classes.iter().map(|c| c.iter().map(|&i| layer[i]).collect()).collect(),
        });
        costs.push(layer_costs);
    }
    Ok(Compiled { ops: ops.to_vec(), layers, schedules, costs })
}

impl Compiled {
    pub fn sublayers(&self) -> usize {
        self.schedules.iter().map(|s| s.colors()).sum()
    }

    pub fn total_time(&self) -> u64 {
        self.costs.iter().flatten().map(|c| c.sublayer_time()).sum()
    }

    /// `layer  sublayer  index  op  blocks`, one row per operation.
    pub fn schedule_tsv(&self) -> String {
        let mut out = String::from("layer\tsublayer\tindex\top\tblocks\n");
        for (l, sched) in self.schedules.iter().enumerate() {
            for (s, class) in sched.classes.iter().enumerate() {
                for &i in class {
                    let op = &self.ops[i];
                    let blocks = op.block_support().iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",");
                    out.push_str(&format!("{l}\t{s}\t{i}\t{op}\t{blocks}\n"));
                }
            }
        }
        out
    }

    pub fn cost_tsv(&self) -> String {
        let mut out = String::from("key\tvalue\n");
        out.push_str(&format!("layers\t{}\n", self.layers.len()));
        out.push_str(&format!("sublayers\t{}\n", self.sublayers()));
        out.push_str(&format!("total_time\t{}\n", self.total_time()));
        for (l, layer) in self.costs.iter().enumerate() {
            for (s, c) in layer.iter().enumerate() {
                out.push_str(&c.to_tsv(&format!("L{l}.S{s}.")));
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Overhead exponents

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Exact(f64),
    AtLeast(f64),
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Exact(x) => write!(f, "{x}"),
            Exponent::AtLeast(x) => write!(f, ">={x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverheadRow {
    pub family: &'static str,
    pub protocol: &'static str,
    pub qubit: Exponent,
    pub time: Exponent,
}

/// Qubit and time overhead exponents of this scheme for a code family with
/// `d = Omega(n^{1/a})`; `a_r` and `a_f` are the same exponents for the R and
/// F codes and only enter the `o(1)` corrections.
pub fn overhead_exponents(a: f64, a_r: f64, a_f: f64) -> Result<OverheadRow> {
    for (name, v) in [("a", a), ("a_R", a_r), ("a_F", a_f)] {
        if !v.is_finite() || v < 1.0 {
            return Err(Error::Precondition(format!("{name} must be a finite value >= 1, got {v}")));
        }
    }
    Ok(OverheadRow { family: "qLDPC", protocol: "PCS+LTSP+GT", qubit: Exponent::Exact(0.0), time: Exponent::Exact(a) })
}

/// Comparison rows for other schemes, with the polylog concatenated-code row
/// evaluated at `a`.
pub fn comparison_rows(a: f64) -> Vec<OverheadRow> {
    use Exponent::*;
    vec![
        OverheadRow { family: "qLDPC", protocol: "GM+BFB", qubit: Exact(0.0), time: AtLeast(2.0) },
        OverheadRow { family: "qLDPC", protocol: "DS", qubit: Exact(1.0), time: Exact(1.0) },
        OverheadRow { family: "qLDPC", protocol: "polylog CC+GT", qubit: Exact(0.0), time: AtLeast(2.0 * a) },
        OverheadRow { family: "good qLTC", protocol: "log CC+GT", qubit: Exact(0.0), time: Exact(1.0) },
        OverheadRow { family: "surface", protocol: "LS", qubit: Exact(2.0), time: Exact(1.0) },
    ]
}

/// Big-rational re-evaluation of `batch`, kept separate from the integer path.
pub fn batch_rational(num: u64, k_r: u64, k_f: u64, d_s: u64) -> BigInt {
    let ceil = |r: BigRational| r.ceil().to_integer();
    let one = |x: u64| BigRational::from_integer(BigInt::from(x));
    let a = ceil(one(num) / one(k_r));
    let b = ceil(BigRational::from_integer(a) / one(k_f));
    let c = ceil(BigRational::from_integer(b) / one(d_s * d_s));
    if c < BigInt::zero() {
        BigInt::zero()
    } else {
        c
    }
}
