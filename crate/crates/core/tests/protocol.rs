use qsurg_core::codes::{hamming_743, min_logical, steane, surface_code_via_hgp, CssCode, DistanceResult};
use qsurg_core::gf2::{BitMatrix, BitVec};
use qsurg_core::protocol::*;
use qsurg_core::sim::Basis;
use qsurg_core::surgery::{build_deformed, build_glue, DeformedCode};

fn surface() -> CssCode {
    surface_code_via_hgp(3).unwrap()
}

fn deformed_single() -> DeformedCode {
    let target = surface();
    let glue = build_glue(&target, &BitMatrix::identity(1)).unwrap();
    build_deformed(&target, &hamming_743(), &glue).unwrap()
}

fn deformed_composite() -> DeformedCode {
    let s = surface();
    let target = s.direct_sum(&s);
    let glue = build_glue(&target, &BitMatrix::from_strs(&["10"])).unwrap();
    build_deformed(&target, &hamming_743(), &glue).unwrap()
}

#[test]
fn tele_matrices_match_circuit() {
    for measured in [Basis::Z, Basis::X] {
        let tm = build_tele_measurement(&steane(), measured).unwrap();
        assert!(tm.verify_matrices().is_empty(), "{:?}", tm.verify_matrices());
        assert!(tm.resource_report(3).is_empty());
    }
    let tm = build_tele_measurement(&deformed_single().css, Basis::Z).unwrap();
    assert!(tm.verify_matrices().is_empty());
}

#[test]
fn operator_transfer_audit() {
    // X(H_X) on all three blocks at the start ends as X(H_X) on C.
    let code = surface();
    let tm = build_tele_measurement(&code, Basis::Z).unwrap();
    let n = code.n;
    let j = &tm.matrices.j_x;
    for r in 0..code.h_x.rows() {
        for block in [0, 2, 4] {
            for q in 0..n {
                assert_eq!(j.get(r, block * n + q), code.h_x.get(r, q));
            }
        }
        for q in 0..n {
            assert!(!j.get(r, 3 * n + q));
        }
    }
    assert!(j.mul_vec(&BitVec::zeros(7 * n)).is_zero());
}

#[test]
fn effective_errors_zero_and_weight_one() {
    let tm = build_tele_measurement(&deformed_single().css, Basis::Z).unwrap();
    let zero = BitVec::zeros(tm.columns());
    assert!(effective_z_error(&tm, &zero).is_zero());
    assert!(effective_x_error(&tm, &zero).is_zero());
    let fails = audit_effective(&tm, 4, 0, 0);
    assert!(fails.is_empty(), "{fails:?}");
}

#[test]
fn outcome_flip_maps_through_b_columns() {
    let code = steane();
    let tm = build_tele_measurement(&code, Basis::Z).unwrap();
    let n = code.n;
    let e = BitVec::unit(7 * n, 3 * n + 2);
    let eff = effective_x_error(&tm, &e);
    assert_eq!(eff, BitVec::unit(7 * n, 2));
    assert_eq!(tm.readout(Basis::X, &e).syndrome, code.h_z.column(2));
}

#[test]
fn effective_error_random_audit() {
    let tm = build_tele_measurement(&deformed_single().css, Basis::Z).unwrap();
    let fails = audit_effective(&tm, 4, 2000, 17);
    assert!(fails.is_empty(), "{fails:?}");
    let tm = build_tele_measurement(&steane(), Basis::X).unwrap();
    assert!(audit_effective(&tm, 4, 500, 18).is_empty());
}

#[test]
fn teleported_outcome_equals_direct_measurement() {
    let tm = build_tele_measurement(&deformed_single().css, Basis::Z).unwrap();
    assert_eq!(tm.frame_oracle(300, 5), 0);
    let issues = tm.state_oracle(3, 5);
    assert!(issues.is_empty(), "{issues:?}");
    let tm = build_tele_measurement(&surface(), Basis::X).unwrap();
    assert!(tm.state_oracle(3, 6).is_empty());
}

#[test]
fn surgery_matrices_and_reduction() {
    for dc in [deformed_single(), deformed_composite()] {
        let run = build_surgery_circuit(&dc).unwrap();
        assert!(run.verify_matrices().unwrap().is_empty(), "{:?}", run.verify_matrices());
        let red = run.verify_reduction().unwrap();
        assert!(red.is_empty(), "{red:?}");
    }
}

#[test]
fn noiseless_surgery_reads_logical_values() {
    let run = build_surgery_circuit(&deformed_single()).unwrap();
    for value in [false, true] {
        let ones = BitVec::from_bools(&[value; 4]);
        let res = run_noiseless(&run, &ones, false, 9).unwrap();
        assert!(res.issues.is_empty(), "{:?}", res.issues);
        assert_eq!(res.outcomes, ones);
    }
}

#[test]
fn noiseless_surgery_keeps_unmeasured_logicals() {
    let run = build_surgery_circuit(&deformed_composite()).unwrap();
    let ones = BitVec::from_bits(&[1, 0, 0, 1, 1, 1, 0, 0]);
    let res = run_noiseless(&run, &ones, false, 2).unwrap();
    assert!(res.issues.is_empty(), "{:?}", res.issues);
    assert_eq!(res.outcomes, BitVec::from_bits(&[1, 0, 1, 0]));
    let res = run_noiseless(&run, &ones, true, 3).unwrap();
    assert!(res.issues.is_empty(), "{:?}", res.issues);
}

#[test]
fn surgery_lemmas_exhaustive_weight_two() {
    for dc in [deformed_single(), deformed_composite()] {
        let run = build_surgery_circuit(&dc).unwrap();
        for basis in [Basis::Z, Basis::X] {
            let t = sweep_surgery(&run, basis, 2);
            assert_eq!(t.violations, 0, "{:?}", t.first_violation);
            assert!(t.held > 0);
            assert_eq!(t.beyond_bound, 0);
            assert_eq!(t.outcome_rate(), 1.0);
        }
    }
}

#[test]
fn surgery_lemmas_sampled() {
    let run = build_surgery_circuit(&deformed_single()).unwrap();
    let t = sample_surgery(&run, Basis::X, 2, 3000, 4);
    assert_eq!(t.checked, 3000);
    assert_eq!(t.violations, 0);
    assert!(t.held > 100, "{t:?}");
    let t = sample_surgery(&run, Basis::Z, 3, 1000, 4);
    assert_eq!(t.violations, 0);
}

#[test]
fn zero_fault_is_trivial() {
    let run = build_surgery_circuit(&deformed_single()).unwrap();
    let zero = BitVec::zeros(run.columns());
    assert!(matches!(surgery_residual_z(&run, &zero), ResidualZ::Holds { after_weight: 0, .. }));
    assert!(matches!(surgery_outcome_x(&run, &zero), OutcomeX::Holds { after_weight: 0, .. }));
}

#[test]
fn deformed_logical_beyond_bound_is_flagged() {
    let dc = deformed_composite();
    let run = build_surgery_circuit(&dc).unwrap();
    let (res, witness) = min_logical(&dc.css.h_x, &dc.css.j_x, 6).unwrap();
    assert!(matches!(res, DistanceResult::Exact(w) if w >= run.d_deformed));
    let u = witness.unwrap();
    let (n_m, n_a) = (run.n_memory(), run.n_ancilla());
    let mut e = BitVec::zeros(run.columns());
    e.xor_at(0, &u.slice(0, n_m));
    e.xor_at(4 * n_m, &u.slice(n_m, n_a));
    match surgery_residual_z(&run, &e) {
        ResidualZ::BeyondBound { logical_flip, .. } => assert!(!logical_flip.is_zero()),
        other => panic!("expected a failure witness, got {other:?}"),
    }
}

#[test]
fn measured_logical_beyond_memory_distance_flips_outcome() {
    let dc = deformed_single();
    let run = build_surgery_circuit(&dc).unwrap();
    let z_logical = dc.target.j_z.row(0);
    let mut e = BitVec::zeros(run.columns());
    // Minimum-weight X logical of copy 0 at M1.
    let (_, w) = min_logical(&dc.target.h_z, &dc.target.j_z, 3).unwrap();
    let x_log = w.unwrap();
    assert!(x_log.dot(&z_logical));
    e.xor_at(0, &x_log);
    match surgery_outcome_x(&run, &e) {
        OutcomeX::BeyondBound { outcome_flip, .. } => assert!(outcome_flip.get(0)),
        other => panic!("expected the outcome to flip, got {other:?}"),
    }
}

fn deformed_joint() -> DeformedCode {
    let s = surface();
    let target = s.direct_sum(&s);
    let glue = build_glue(&target, &BitMatrix::from_strs(&["11"])).unwrap();
    build_deformed(&target, &hamming_743(), &glue).unwrap()
}

#[test]
fn joint_measurement_needs_feedback() {
    let dc = deformed_joint();
    assert!(!dc.lifted.beta.is_zero());
    let run = build_surgery_circuit(&dc).unwrap();
    assert!(!run.feedback.is_zero());
    assert!(run.verify_matrices().unwrap().is_empty());
    assert!(run.verify_reduction().unwrap().is_empty());
    let ones = BitVec::from_bits(&[1, 0, 0, 1, 1, 1, 0, 0]);
    let res = run_noiseless(&run, &ones, false, 4).unwrap();
    assert!(res.issues.is_empty(), "{:?}", res.issues);
    assert_eq!(res.outcomes, BitVec::from_bits(&[1, 1, 0, 0]));
    for seed in 0..4 {
        let res = run_noiseless(&run, &ones, true, seed).unwrap();
        assert!(res.issues.is_empty(), "{:?}", res.issues);
    }
    for basis in [Basis::Z, Basis::X] {
        let t = sweep_surgery(&run, basis, 2);
        assert_eq!(t.violations, 0, "{:?}", t.first_violation);
    }
}
