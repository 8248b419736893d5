//! Pass/fail ledger over the library's verification checks.
//!
//! Every entry has a stable key such as `lemma.pcs.distance`, a status, a
//! count of checked instances and a short detail string. Output contains no
//! timings, so identical configurations give byte-identical ledgers.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codes::{
    classical_distance, css_distance, hamming_743, ltc_preimage_violations, repetition, soundness, steane,
    surface_code_via_hgp, validate_css, ClassicalCode, CssCode,
};
use crate::compile::{
    batch, batch_rational, check_schedule, comparison_rows, family_count, is_block_disjoint, operation_table,
    overhead_exponents, serialize, sublayer_cost, CostParams, Exponent, LogicalOp,
};
use crate::gf2::BitMatrix;
use crate::ltsp::{build_prep_circuit, sample_x, sp_matrices, sweep_x, sweep_z, verify_against_circuit};
use crate::protocol::{
    audit_effective, build_surgery_circuit, build_tele_measurement, run_noiseless, sample_surgery, sweep_surgery,
    LemmaTally,
};
use crate::sim::{merge_wait, Basis, MemoryExperiment};
use crate::surgery::{
    build_deformed, build_glue, deformed_report, lemma_budget, measured_extraction, verify_distance_bound,
    DeformedCode, DistanceCertificate,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Small instances that finish in minutes on a laptop.
    Desk,
    /// Same instances with reduced sample counts, for smoke tests.
    Quick,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "quick" => Ok(Preset::Quick),
            _ => Err(Error::Parse(format!("unknown preset {s:?} (expected desk or quick)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerConfig {
    pub preset: Preset,
    pub seed: u64,
    /// Exhaustive fault-weight budget; 0 skips every fault-injection check.
    pub max_weight: usize,
    pub samples: u64,
    pub mc_trials: u64,
    pub p_phy: f64,
}

impl LedgerConfig {
    pub fn new(preset: Preset, seed: u64) -> Self {
        let (samples, mc_trials, p_phy) = match preset {
            Preset::Desk => (10_000, 100_000, 1e-3),
            Preset::Quick => (500, 50_000, 1e-3),
        };
        LedgerConfig { preset, seed, max_weight: 2, samples, mc_trials, p_phy }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: &'static str,
    pub pass: bool,
    pub checked: u64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ledger {
    pub entries: Vec<Entry>,
}

impl Ledger {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("key\tstatus\tchecked\tdetail\n");
        for e in &self.entries {
            let status = if e.pass { "pass" } else { "fail" };
            let _ = writeln!(out, "{}\t{status}\t{}\t{}", e.key, e.checked, e.detail.replace(['\t', '\n'], " "));
        }
        out
    }

    fn push(&mut self, key: &'static str, outcome: Result<(bool, u64, String)>) {
        let (pass, checked, detail) = outcome.unwrap_or_else(|e| (false, 0, format!("error: {e}")));
        self.entries.push(Entry { key, pass, checked, detail });
    }
}

fn first(issues: &[String]) -> String {
    match issues.first() {
        None => "ok".into(),
        Some(s) => format!("{} issue(s), first: {s}", issues.len()),
    }
}

fn vacuous() -> Result<(bool, u64, String)> {
    Ok((true, 0, "vacuous: max-weight 0".into()))
}

fn tally_line(t: &LemmaTally) -> String {
    format!(
        "held={} detected={} beyond_bound={} violations={} outcome_rate={}/{}{}",
        t.held,
        t.detected,
        t.beyond_bound,
        t.violations,
        t.outcome_correct,
        t.outcome_checked,
        t.first_violation.as_ref().map(|v| format!(" first: {v}")).unwrap_or_default()
    )
}

fn tally_ok(t: &LemmaTally) -> bool {
    t.violations == 0 && t.beyond_bound == 0 && t.outcome_correct == t.outcome_checked
}

/// Surface [[13,1,3]] target with one measured logical and the Hamming R code.
pub fn desk_deformed() -> Result<DeformedCode> {
    let target = surface_code_via_hgp(3)?.with_distance(3);
    let glue = build_glue(&target, &BitMatrix::identity(1))?;
    build_deformed(&target, &hamming_743().with_distance(3), &glue)
}

fn code_suite() -> Result<(bool, u64, String)> {
    let classical: Vec<(&str, ClassicalCode, usize)> =
        vec![("repetition3", repetition(3), 3), ("repetition5", repetition(5), 5), ("hamming743", hamming_743(), 3)];
    let quantum: Vec<(&str, CssCode, usize)> =
        vec![("steane", steane(), 3), ("surface3", surface_code_via_hgp(3)?, 3)];
    let mut issues = Vec::new();
    for (name, c, d) in &classical {
        issues.extend(c.validate().into_iter().map(|v| format!("{name}: {v}")));
        let got = classical_distance(c, usize::MAX)?.exact();
        if got != Some(*d) {
            issues.push(format!("{name}: distance {got:?}, expected {d}"));
        }
    }
    for (name, c, d) in &quantum {
        issues.extend(validate_css(c).into_iter().map(|v| format!("{name}: {v}")));
        let got = css_distance(c, usize::MAX)?.exact();
        if got != Some(*d) {
            issues.push(format!("{name}: distance {got:?}, expected {d}"));
        }
    }
    Ok((issues.is_empty(), (classical.len() + quantum.len()) as u64, first(&issues)))
}

fn ltc_soundness() -> Result<(bool, u64, String)> {
    let code = hamming_743();
    let s = soundness(&code)?;
    let violations = ltc_preimage_violations(&code, s)?;
    let checked = (1u64 << code.h.rank()) - 1;
    let detail = format!("s={}/{} preimage_violations={}", s.numer(), s.denom(), violations.len());
    Ok((violations.is_empty(), checked, detail))
}

fn pcs_structure(dc: &DeformedCode) -> Result<(bool, u64, String)> {
    let issues = deformed_report(dc);
    Ok((issues.is_empty(), 1, first(&issues)))
}

fn pcs_extraction(dc: &DeformedCode) -> Result<(bool, u64, String)> {
    let coeff = measured_extraction(dc)?;
    Ok((true, coeff.rows() as u64, format!("{} measured logicals extracted", coeff.rows())))
}

fn pcs_distance(dc: &DeformedCode, max_weight: usize) -> Result<(bool, u64, String)> {
    if max_weight == 0 {
        return vacuous();
    }
    let bound = lemma_budget(dc).ok_or_else(|| Error::Precondition("distances unknown".into()))?;
    let budget = bound.min(max_weight);
    match verify_distance_bound(dc, budget)? {
        DistanceCertificate::Certified { budget } => {
            Ok((true, dc.css.n as u64, format!("no logical of weight <= {budget} (bound {bound})")))
        }
        DistanceCertificate::Counterexample { x_type, vector } => Ok((
            false,
            dc.css.n as u64,
            format!("{} logical of weight {}", if x_type { "X" } else { "Z" }, vector.weight()),
        )),
    }
}

/// Preparation-circuit checks for resource states of `source` encoded with `f`.
pub fn ltsp_checks(ledger: &mut Ledger, source: &CssCode, f: &ClassicalCode, cfg: &LedgerConfig) {
    let lt = match build_prep_circuit(source, f) {
        Ok(lt) => lt,
        Err(e) => {
            for key in ["lemma.ltsp.noiseless", "lemma.ltsp.matrices", "lemma.ltsp.spX", "lemma.ltsp.spZ"] {
                ledger.push(key, Err(e.clone()));
            }
            return;
        }
    };
    ledger.push(
        "lemma.ltsp.noiseless",
        (0..3u64)
            .map(|t| lt.noiseless_report(cfg.seed.wrapping_add(t)))
            .collect::<Result<Vec<_>>>()
            .map(|r| {
                let issues: Vec<String> = r.concat();
                (issues.is_empty(), 3, first(&issues))
            }),
    );
    ledger.push(
        "lemma.ltsp.matrices",
        (0..lt.k_f)
            .map(|j| sp_matrices(&lt, j).and_then(|spp| verify_against_circuit(&lt, &spp)))
            .collect::<Result<Vec<_>>>()
            .map(|r| {
                let issues: Vec<String> = r.concat();
                (issues.is_empty(), lt.k_f as u64, first(&issues))
            }),
    );
    if cfg.max_weight == 0 {
        ledger.push("lemma.ltsp.spX", vacuous());
        ledger.push("lemma.ltsp.spZ", vacuous());
        return;
    }
    ledger.push(
        "lemma.ltsp.spX",
        sweep_z(&lt, cfg.max_weight).map(|t| (t.violations == 0, t.checked, format!("violations={}", t.violations))),
    );
    ledger.push(
        "lemma.ltsp.spZ",
        (|| {
            let exhaustive = sweep_x(&lt, 1)?;
            let mut checked = exhaustive.checked;
            let mut bad = exhaustive.violations + exhaustive.inequivalent;
            let mut detail = format!(
                "weight1: detected={} violations={} inequivalent={}",
                exhaustive.detected, exhaustive.violations, exhaustive.inequivalent
            );
            if cfg.max_weight >= 2 {
                let s = sample_x(&lt, 2, cfg.samples, cfg.seed)?;
                checked += s.checked;
                bad += s.violations + s.inequivalent;
                let _ = write!(
                    detail,
                    "; sampled weight2: detected={} violations={} inequivalent={}",
                    s.detected, s.violations, s.inequivalent
                );
            }
            Ok((bad == 0, checked, detail))
        })(),
    );
}

/// Teleported Z-check measurement of the deformed code.
pub fn teleport_checks(ledger: &mut Ledger, dc: &DeformedCode, cfg: &LedgerConfig) {
    let tm = match build_tele_measurement(&dc.css, Basis::Z) {
        Ok(tm) => tm,
        Err(e) => {
            for key in ["lemma.tm.matrices", "lemma.tm.effective", "lemma.tm.direct"] {
                ledger.push(key, Err(e.clone()));
            }
            return;
        }
    };
    let mut issues = tm.verify_matrices();
    issues.extend(tm.resource_report(cfg.seed));
    ledger.push("lemma.tm.matrices", Ok((issues.is_empty(), tm.columns() as u64, first(&issues))));
    if cfg.max_weight == 0 {
        ledger.push("lemma.tm.effective", vacuous());
    } else {
        let fails = audit_effective(&tm, cfg.max_weight.max(4), cfg.samples, cfg.seed);
        let checked = 2 * (tm.columns() as u64 + cfg.samples);
        ledger.push("lemma.tm.effective", Ok((fails.is_empty(), checked, first(&fails))));
    }
    let frames = cfg.samples.min(1000);
    let mismatches = tm.frame_oracle(frames, cfg.seed);
    let state = tm.state_oracle(3, cfg.seed);
    let detail = format!("frame mismatches={mismatches}; state oracle: {}", first(&state));
    ledger.push("lemma.tm.direct", Ok((mismatches == 0 && state.is_empty(), frames + 3, detail)));
}

/// Reduced and expanded surgery circuits on the deformed code.
pub fn surgery_checks(ledger: &mut Ledger, dc: &DeformedCode, cfg: &LedgerConfig) {
    let run = match build_surgery_circuit(dc) {
        Ok(r) => r,
        Err(e) => {
            for key in ["lemma.cs.matrices", "lemma.cs.noiseless", "lemma.cs.csmZ", "lemma.cs.csmX"] {
                ledger.push(key, Err(e.clone()));
            }
            return;
        }
    };
    ledger.push(
        "lemma.cs.matrices",
        (|| {
            let mut issues = run.verify_matrices()?;
            issues.extend(run.verify_reduction()?);
            Ok((issues.is_empty(), run.columns() as u64, first(&issues)))
        })(),
    );
    ledger.push(
        "lemma.cs.noiseless",
        (|| {
            let copies = run.deformed.target.k * run.deformed.k_r();
            let mut issues = Vec::new();
            for value in [false, true] {
                let ones = crate::gf2::BitVec::from_bools(&vec![value; copies]);
                let res = run_noiseless(&run, &ones, false, cfg.seed)?;
                issues.extend(res.issues);
                if res.outcomes != ones {
                    issues.push(format!("input {} read as {:?}", value as u8, res.outcomes.to_bits()));
                }
            }
            Ok((issues.is_empty(), 2, first(&issues)))
        })(),
    );
    for (key, basis) in [("lemma.cs.csmZ", Basis::Z), ("lemma.cs.csmX", Basis::X)] {
        if cfg.max_weight == 0 {
            ledger.push(key, vacuous());
            continue;
        }
        let mut t = sweep_surgery(&run, basis, cfg.max_weight.min(1));
        if cfg.max_weight >= 2 {
            let s = sample_surgery(&run, basis, 2, cfg.samples, cfg.seed);
            t.checked += s.checked;
            t.detected += s.detected;
            t.held += s.held;
            t.beyond_bound += s.beyond_bound;
            t.violations += s.violations;
            t.outcome_checked += s.outcome_checked;
            t.outcome_correct += s.outcome_correct;
            t.first_violation = t.first_violation.or(s.first_violation);
        }
        ledger.push(key, Ok((tally_ok(&t), t.checked, tally_line(&t))));
    }
}

/// Glue and lifted conditions, measured-logical extraction and the distance bound.
pub fn pcs_checks(ledger: &mut Ledger, dc: &DeformedCode, cfg: &LedgerConfig) {
    ledger.push("lemma.pcs.structure", pcs_structure(dc));
    ledger.push("lemma.pcs.extraction", pcs_extraction(dc));
    ledger.push("lemma.pcs.distance", pcs_distance(dc, cfg.max_weight));
}

fn memory_trend(cfg: &LedgerConfig) -> Result<(bool, u64, String)> {
    let e3 = MemoryExperiment::new(&surface_code_via_hgp(3)?.with_distance(3), 1.0)?;
    let e5 = MemoryExperiment::new(&surface_code_via_hgp(5)?.with_distance(5), 1.0)?;
    let zero = e3.run(0.0, cfg.mc_trials.min(1000), cfg.seed)?;
    let r3 = e3.run(cfg.p_phy, cfg.mc_trials, cfg.seed)?;
    let r5 = e5.run(cfg.p_phy, cfg.mc_trials, cfg.seed)?;
    let pass = zero.failures == 0 && r5.estimate < r3.estimate && r5.ci_high < r3.ci_low;
    let detail = format!(
        "p={} d3 {}/{} [{:.3e},{:.3e}] d5 {}/{} [{:.3e},{:.3e}] p0 failures={}",
        cfg.p_phy, r3.failures, r3.trials, r3.ci_low, r3.ci_high, r5.failures, r5.trials, r5.ci_low, r5.ci_high,
        zero.failures
    );
    Ok((pass, 2 * cfg.mc_trials + zero.trials, detail))
}

fn merge_wait_check(cfg: &LedgerConfig) -> Result<(bool, u64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut bad = 0;
    for _ in 0..1000 {
        let (p1, p2): (f64, f64) = (rng.gen(), rng.gen());
        if merge_wait(p1, p2) > (2.0 * p1 + p2).min(p1 + 2.0 * p2) + 1e-12 {
            bad += 1;
        }
    }
    Ok((bad == 0, 1000, format!("violations={bad}")))
}

/// Random qubit-disjoint layer on `blocks` blocks of `k` logical qubits.
pub fn random_layer<R: Rng>(rng: &mut R, blocks: usize, k: usize) -> Vec<LogicalOp> {
    let mut free: Vec<(usize, usize)> = (0..blocks).flat_map(|u| (0..k).map(move |j| (u, j))).collect();
    let mut ops = Vec::new();
    while !free.is_empty() {
        let slot = free.swap_remove(rng.gen_range(0..free.len()));
        let op = match rng.gen_range(0..7) {
            0 => LogicalOp::Mea { block: slot.0, qubit: slot.1 },
            1 => LogicalOp::H { block: slot.0, qubit: slot.1 },
            2 => LogicalOp::S { block: slot.0, qubit: slot.1 },
            3 => LogicalOp::T { block: slot.0, qubit: slot.1 },
            4 => continue,
            _ if !free.is_empty() => {
                let other = free.swap_remove(rng.gen_range(0..free.len()));
                LogicalOp::Cnot { control: slot, target: other }
            }
            _ => LogicalOp::Mea { block: slot.0, qubit: slot.1 },
        };
        ops.push(op);
    }
    ops
}

fn scheduler_check(cfg: &LedgerConfig) -> Result<(bool, u64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5c4e_d01e);
    let mut issues = Vec::new();
    let mut max_colors = 0usize;
    for layer in 0..200 {
        let k = rng.gen_range(1..=6);
        let blocks = rng.gen_range(1..=32);
        let ops = random_layer(&mut rng, blocks, k);
        let s = serialize(&ops, k)?;
        if s.colors() > 2 * k - 1 {
            issues.push(format!("layer {layer}: {} colors for k = {k}", s.colors()));
        }
        max_colors = max_colors.max(s.colors());
        for class in &s.classes {
            let members: Vec<LogicalOp> = class.iter().map(|&i| ops[i]).collect();
            if !is_block_disjoint(&members) {
                issues.push(format!("layer {layer}: class not block-disjoint"));
            }
        }
        issues.extend(check_schedule(&ops, &s).into_iter().map(|v| format!("layer {layer}: {v}")));
    }
    Ok((issues.is_empty(), 200, format!("max colors={max_colors}; {}", first(&issues))))
}

fn cost_check(cfg: &LedgerConfig) -> Result<(bool, u64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xc057);
    let mut issues = Vec::new();
    let mut points = 0u64;
    for k_r in 1..=10u64 {
        for k_f in 1..=10u64 {
            for d_s in 1..=10u64 {
                points += 1;
                let num = rng.gen_range(0..5000u64);
                let b = batch(num, k_r, k_f, d_s)?;
                if num_bigint::BigInt::from(b) != batch_rational(num, k_r, k_f, d_s) {
                    issues.push(format!("batch({num},{k_r},{k_f},{d_s}) = {b} disagrees with rational evaluation"));
                }
                let k = rng.gen_range(1..=4u64);
                let ops = random_layer(&mut rng, 12, k as usize);
                let sched = serialize(&ops, k as usize)?;
                let params = CostParams { k, n: 13, k_r, k_f, d_s, blocks: 12, family_constant: 6 };
                for class in &sched.classes {
                    let sub: Vec<LogicalOp> = class.iter().map(|&i| ops[i]).collect();
                    let rep = sublayer_cost(&sub, &params)?;
                    if !rep.bound_present_holds() || !rep.bound_constant_holds() {
                        issues.push(format!("batch-sum bound fails at k_R={k_r} k_F={k_f} d_S={d_s}"));
                    }
                }
            }
        }
    }
    for k in 1..=64 {
        if family_count(k) > 6 * k * k {
            issues.push(format!("family count exceeds 6k^2 at k = {k}"));
        }
    }
    Ok((issues.is_empty(), points, first(&issues)))
}

fn table_check() -> Result<(bool, u64, String)> {
    let rows = operation_table();
    let counts: Vec<usize> = rows.iter().map(|r| r.measurement_count()).collect();
    let pass = counts == [0, 1, 4, 3, 5, 3, 1, 1];
    Ok((pass, rows.len() as u64, format!("measurement counts {counts:?}")))
}

fn exponent_check() -> Result<(bool, u64, String)> {
    let mut issues = Vec::new();
    for a in [1.0, 1.5, 2.0] {
        let row = overhead_exponents(a, 1.0, 1.0)?;
        if row.qubit != Exponent::Exact(0.0) || row.time != Exponent::Exact(a) {
            issues.push(format!("a = {a}: got ({}, {})", row.qubit, row.time));
        }
    }
    let ls = comparison_rows(1.0).into_iter().find(|r| r.protocol == "LS");
    if ls.map(|r| (r.qubit, r.time)) != Some((Exponent::Exact(2.0), Exponent::Exact(1.0))) {
        issues.push("surface-code row differs".into());
    }
    Ok((issues.is_empty(), 4, first(&issues)))
}

/// Run every check of the preset.
pub fn run_ledger(cfg: &LedgerConfig) -> Ledger {
    let mut ledger = Ledger::default();
    ledger.push("code.suite", code_suite());
    ledger.push("lemma.ltc.soundness", ltc_soundness());
    match desk_deformed() {
        Ok(dc) => {
            pcs_checks(&mut ledger, &dc, cfg);
            ltsp_checks(&mut ledger, &dc.target, &dc.r_code, cfg);
            teleport_checks(&mut ledger, &dc, cfg);
            surgery_checks(&mut ledger, &dc, cfg);
        }
        Err(e) => ledger.push("lemma.pcs.structure", Err(e)),
    }
    ledger.push("sim.merge_wait", merge_wait_check(cfg));
    ledger.push("sim.memory_trend", memory_trend(cfg));
    ledger.push("compile.schedule", scheduler_check(cfg));
    ledger.push("compile.cost", cost_check(cfg));
    ledger.push("compile.table", table_check());
    ledger.push("compile.exponents", exponent_check());
    ledger
}
