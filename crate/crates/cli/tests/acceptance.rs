//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use qsurg_core::codes::{
    classical_distance, css_distance, enumerate_codewords, hamming_743, ltc_preimage_violations, repetition,
    soundness, steane, surface_code_via_hgp, validate_css, CssCode,
};
use qsurg_core::compile::{
    batch, batch_rational, comparison_rows, operation_table, overhead_exponents, serialize, sublayer_cost,
    CostParams, Exponent, LogicalOp,
};
use qsurg_core::gf2::{BitMatrix, BitVec};
use qsurg_core::ledger::random_layer;
use qsurg_core::ltsp::{build_prep_circuit, sample_x, sweep_x, sweep_z};
use qsurg_core::protocol::{
    audit_effective, build_surgery_circuit, build_tele_measurement, run_noiseless, sample_surgery, sweep_surgery,
};
use qsurg_core::sim::{Basis, MemoryExperiment};
use qsurg_core::surgery::{
    build_deformed, build_glue, lifted_condition_report, measured_extraction, verify_distance_bound, verify_glue,
    DeformedCode, DistanceCertificate,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> std::result::Result<(), String> {
    ensure(start.elapsed() < limit, format!("took {:?}, limit {limit:?}", start.elapsed()))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn surface() -> CssCode {
    surface_code_via_hgp(3).unwrap().with_distance(3)
}

fn deformed() -> DeformedCode {
    let target = surface();
    let glue = build_glue(&target, &BitMatrix::identity(1)).unwrap();
    build_deformed(&target, &hamming_743().with_distance(3), &glue).unwrap()
}

fn code_suite() -> Check {
    let start = Instant::now();
    for (name, code, d) in [("rep3", repetition(3), 3), ("rep5", repetition(5), 5), ("hamming", hamming_743(), 3)] {
        ensure(code.validate().is_empty(), format!("{name}: {:?}", code.validate()))?;
        let got = classical_distance(&code, usize::MAX).map_err(err)?.exact();
        ensure(got == Some(d), format!("{name}: distance {got:?}"))?;
    }
    for (name, code) in [("steane", steane()), ("surface3", surface())] {
        ensure(validate_css(&code).is_empty(), format!("{name}: {:?}", validate_css(&code)))?;
        let got = css_distance(&code, usize::MAX).map_err(err)?.exact();
        ensure(got == Some(3), format!("{name}: distance {got:?}"))?;
    }
    within(start, Duration::from_secs(10))?;
    Ok("distances 3,5,3,3,3".into())
}

fn ltc_soundness() -> Check {
    let start = Instant::now();
    let code = hamming_743();
    let s = soundness(&code).map_err(err)?;
    // Oracle: distance to the code by sweeping every codeword.
    let words = enumerate_codewords(&code.g);
    let (n, r) = (code.n as u64, code.h.rows() as u64);
    let mut best: Option<Ratio<u64>> = None;
    for mask in 0u64..(1 << code.n) {
        let u = BitVec::from_mask(code.n, mask);
        let dist = words.iter().map(|c| u.xor(c).weight()).min().unwrap() as u64;
        if dist == 0 {
            continue;
        }
        let ratio = Ratio::new(n * code.h.mul_vec(&u).weight() as u64, r * dist);
        best = Some(best.map_or(ratio, |b| b.min(ratio)));
    }
    ensure(best == Some(s), format!("soundness {s} vs oracle {best:?}"))?;
    let violations = ltc_preimage_violations(&code, s).map_err(err)?;
    ensure(violations.is_empty(), format!("{} preimage violations", violations.len()))?;
    within(start, Duration::from_secs(5))?;
    Ok(format!("s = {s}, preimage bound holds on all 7 nonzero syndromes"))
}

fn pcs_build() -> Check {
    let start = Instant::now();
    let dc = deformed();
    let glue = verify_glue(&dc.target, &dc.glue);
    ensure(glue.is_empty(), format!("glue: {glue:?}"))?;
    let lifted = lifted_condition_report(&dc);
    ensure(lifted.is_empty(), format!("lifted: {lifted:?}"))?;
    measured_extraction(&dc).map_err(err)?;
    let cert = verify_distance_bound(&dc, 2).map_err(err)?;
    ensure(cert == DistanceCertificate::Certified { budget: 2 }, format!("{cert:?}"))?;
    within(start, Duration::from_secs(120))?;
    Ok(format!("deformed n = {}, no logical of weight <= 2", dc.css.n))
}

fn ltsp() -> Check {
    let start = Instant::now();
    let lt = build_prep_circuit(&surface(), &hamming_743().with_distance(3)).map_err(err)?;
    for seed in 0..3 {
        let r = lt.noiseless_report(seed).map_err(err)?;
        ensure(r.is_empty(), format!("noiseless: {r:?}"))?;
    }
    let z = sweep_z(&lt, 2).map_err(err)?;
    ensure(z.violations == 0, format!("spX: {z:?}"))?;
    let x = sweep_x(&lt, 1).map_err(err)?;
    ensure(x.violations == 0 && x.inequivalent == 0, format!("spZ weight 1: {x:?}"))?;
    let s = sample_x(&lt, 2, 10_000, 42).map_err(err)?;
    ensure(s.violations == 0 && s.inequivalent == 0 && s.checked == 10_000, format!("spZ weight 2: {s:?}"))?;
    within(start, Duration::from_secs(600))?;
    Ok(format!("{} Z faults, {} + {} X faults", z.checked, x.checked, s.checked))
}

fn teleported() -> Check {
    let dc = deformed();
    let tm = build_tele_measurement(&dc.css, Basis::Z).map_err(err)?;
    let fails = audit_effective(&tm, 4, 10_000, 42);
    ensure(fails.is_empty(), format!("{} failures, first {:?}", fails.len(), fails.first()))?;
    let mismatches = tm.frame_oracle(1000, 42);
    ensure(mismatches == 0, format!("{mismatches} frame mismatches"))?;
    Ok(format!("{} columns x 2 types exhaustive, 2 x 10^4 random, 10^3 frames", tm.columns()))
}

fn surgery() -> Check {
    let dc = deformed();
    let run = build_surgery_circuit(&dc).map_err(err)?;
    let copies = dc.k_r() * dc.target.k;
    for value in [false, true] {
        let ones = BitVec::from_bools(&vec![value; copies]);
        let res = run_noiseless(&run, &ones, false, 42).map_err(err)?;
        ensure(res.issues.is_empty(), format!("{:?}", res.issues))?;
        ensure(res.outcomes == ones, format!("input {value}: outcomes {:?}", res.outcomes.to_bits()))?;
    }
    let mut held = 0;
    for basis in [Basis::Z, Basis::X] {
        for t in [sweep_surgery(&run, basis, 1), sample_surgery(&run, basis, 2, 10_000, 42)] {
            ensure(t.violations == 0 && t.beyond_bound == 0, format!("{basis:?}: {t:?}"))?;
            ensure(t.outcome_rate() == 1.0, format!("{basis:?}: outcome rate {}", t.outcome_rate()))?;
            held += t.held;
        }
    }
    Ok(format!("{copies} copies read +1/-1; {held} undetected faults within bound"))
}

fn monte_carlo() -> Check {
    let start = Instant::now();
    let e3 = MemoryExperiment::new(&surface(), 1.0).map_err(err)?;
    let e5 = MemoryExperiment::new(&surface_code_via_hgp(5).map_err(err)?.with_distance(5), 1.0).map_err(err)?;
    let zero = e3.run(0.0, 100_000, 42).map_err(err)?;
    ensure(zero.failures == 0, format!("p = 0 gave {} failures", zero.failures))?;
    let r3 = e3.run(1e-3, 100_000, 42).map_err(err)?;
    let r5 = e5.run(1e-3, 100_000, 42).map_err(err)?;
    let detail = format!(
        "d3 {:.2e} [{:.2e},{:.2e}], d5 {:.2e} [{:.2e},{:.2e}]",
        r3.estimate, r3.ci_low, r3.ci_high, r5.estimate, r5.ci_low, r5.ci_high
    );
    ensure(r5.estimate < r3.estimate && r5.ci_high < r3.ci_low, detail.clone())?;
    within(start, Duration::from_secs(900))?;
    Ok(detail)
}

fn scheduler() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut max_colors = 0;
    for layer in 0..200 {
        let k = rng.gen_range(1..=6);
        let blocks = rng.gen_range(1..=32);
        let ops = random_layer(&mut rng, blocks, k);
        let s = serialize(&ops, k).map_err(err)?;
        ensure(s.colors() < 2 * k, format!("layer {layer}: {} colors, k = {k}", s.colors()))?;
        max_colors = max_colors.max(s.colors());
        let mut seen = vec![0; ops.len()];
        for class in &s.classes {
            for (x, &i) in class.iter().enumerate() {
                seen[i] += 1;
                for &j in &class[x + 1..] {
                    let (a, b) = (ops[i].block_support(), ops[j].block_support());
                    ensure(!a.iter().any(|u| b.contains(u)), format!("layer {layer}: {} and {} share a block", ops[i], ops[j]))?;
                }
            }
        }
        ensure(seen.iter().all(|&c| c == 1), format!("layer {layer}: classes do not partition the layer"))?;
    }
    Ok(format!("200 layers, at most {max_colors} colors"))
}

fn reference_rows() -> Vec<[String; 3]> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../paper.md");
    let text = std::fs::read_to_string(path).expect("reference notes");
    let label = text.find("\\label{tab:operations}").expect("table label");
    let start = text[..label].rfind("\\begin{tabular}{ccc}").expect("table start");
    let body = &text[start..label];
    let end = body.find("\\end{tabular}").unwrap();
    body[..end]
        .lines()
        .filter(|l| l.contains('&') && l.trim_end().ends_with("\\\\"))
        .skip(1)
        .map(|l| {
            let cells: Vec<String> =
                l.trim_end().trim_end_matches("\\\\").split('&').map(|c| c.replace('~', "").trim().to_string()).collect();
            [cells[0].clone(), cells[1].clone(), cells[2].clone()]
        })
        .collect()
}

fn cost() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut points = 0;
    for k_r in 1..=10u64 {
        for k_f in 1..=10u64 {
            for d_s in 1..=10u64 {
                points += 1;
                let num = rng.gen_range(0..20_000u64);
                let b = batch(num, k_r, k_f, d_s).map_err(err)?;
                ensure(num_bigint::BigInt::from(b) == batch_rational(num, k_r, k_f, d_s), format!("batch({num},{k_r},{k_f},{d_s})"))?;
                let k = rng.gen_range(1..=4u64);
                let ops: Vec<LogicalOp> = random_layer(&mut rng, 16, k as usize);
                let sched = serialize(&ops, k as usize).map_err(err)?;
                let params = CostParams { k, n: 13, k_r, k_f, d_s, blocks: 16, family_constant: 6 };
                for class in &sched.classes {
                    let sub: Vec<LogicalOp> = class.iter().map(|&i| ops[i]).collect();
                    let rep = sublayer_cost(&sub, &params).map_err(err)?;
                    ensure(rep.bound_present_holds() && rep.bound_constant_holds(), format!("bound at {k_r},{k_f},{d_s}"))?;
                }
            }
        }
    }
    ensure(batch(0, 4, 4, 3) == Ok(0) && batch(144, 4, 4, 3) == Ok(1), "batch edge cases")?;
    let ours: Vec<[String; 3]> = operation_table().iter().map(|d| d.latex_cells()).collect();
    ensure(ours == reference_rows(), "decomposition table differs from the reference rows")?;
    for a in [1.0, 1.5, 2.0] {
        let row = overhead_exponents(a, 1.0, 1.0).map_err(err)?;
        ensure(row.qubit == Exponent::Exact(0.0) && row.time == Exponent::Exact(a), format!("a = {a}"))?;
    }
    let ls = comparison_rows(1.0).into_iter().find(|r| r.protocol == "LS").unwrap();
    ensure((ls.qubit, ls.time) == (Exponent::Exact(2.0), Exponent::Exact(1.0)), "LS row")?;
    Ok(format!("{points} grid points, {} table rows", ours.len()))
}

fn determinism() -> Check {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_qsurg"))
            .args(["ledger", "--preset", "desk", "--seed", "42"])
            .output()
            .map_err(err)
    };
    let (a, b) = (run()?, run()?);
    ensure(a.status.success(), format!("ledger failed:\n{}", String::from_utf8_lossy(&a.stdout)))?;
    ensure(a.stdout == b.stdout, "outputs differ")?;
    Ok(format!("{} identical bytes", a.stdout.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("code suite", code_suite),
        ("LTC soundness", ltc_soundness),
        ("parallelized surgery build", pcs_build),
        ("resource-state preparation", ltsp),
        ("teleported measurement", teleported),
        ("code surgery end to end", surgery),
        ("Monte Carlo trend", monte_carlo),
        ("scheduler", scheduler),
        ("cost arithmetic", cost),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
