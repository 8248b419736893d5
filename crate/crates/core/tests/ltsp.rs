use qsurg_core::codes::{hamming_743, repetition, single_qubit_code, steane, surface_code_via_hgp, CssCode};
use qsurg_core::gf2::{BitMatrix, BitVec};
use qsurg_core::ltsp::*;

fn surface() -> CssCode {
    surface_code_via_hgp(3).unwrap()
}

fn hamming() -> qsurg_core::codes::ClassicalCode {
    hamming_743().with_distance(3)
}

#[test]
fn resource_state_ranks() {
    let spec = resource_state(&surface()).unwrap();
    assert_eq!(spec.h_rs_x.cols(), 26);
    assert_eq!(spec.h_rs_x.rank() + spec.h_rs_z.rank(), 26);
    let s = resource_state(&steane()).unwrap();
    assert!(s.h_rs_x.mul(&s.h_rs_z.transpose()).is_zero());
}

#[test]
fn trivial_source_gives_bell_pair() {
    let spec = resource_state(&single_qubit_code()).unwrap();
    assert_eq!(spec.h_rs_x, BitMatrix::from_strs(&["11"]));
    assert_eq!(spec.h_rs_z, BitMatrix::from_strs(&["11"]));
}

#[test]
fn bell_rewrite_spans_bell_stabilizer() {
    for code in [surface(), steane()] {
        let (x, z) = bell_rewrite(&code).unwrap();
        assert_eq!(x.rank(), code.n);
        assert_eq!(z.rank(), code.n);
    }
}

#[test]
fn noiseless_preparation_yields_resource_copies() {
    let lt = build_prep_circuit(&surface(), &hamming()).unwrap();
    assert_eq!(lt.k_f, 4);
    for seed in 0..3 {
        let report = lt.noiseless_report(seed).unwrap();
        assert!(report.is_empty(), "{report:?}");
    }
}

#[test]
fn degenerate_f_code_reduces_to_plain_preparation() {
    let lt = build_prep_circuit(&steane(), &repetition(1).with_distance(1)).unwrap();
    assert_eq!(lt.circuit.num_qubits(), 2 * 7 + 3);
    assert!(lt.noiseless_report(1).unwrap().is_empty());
    let spp = sp_matrices(&lt, 0).unwrap();
    assert!(verify_against_circuit(&lt, &spp).unwrap().is_empty());
}

#[test]
fn non_standard_f_code_rejected() {
    let mut f = hamming();
    f.g = BitMatrix::from_strs(&["1111111", "0100101", "0010011", "0001111"]);
    assert!(build_prep_circuit(&surface(), &f).is_err());
}

#[test]
fn displayed_matrices_match_propagation() {
    let lt = build_prep_circuit(&surface(), &hamming()).unwrap();
    for j in 0..lt.k_f {
        let spp = sp_matrices(&lt, j).unwrap();
        assert_eq!(spp.j_x.cols(), lt.z_layout().len());
        assert_eq!(spp.j_z.cols(), lt.x_layout().len());
        let mismatches = verify_against_circuit(&lt, &spp).unwrap();
        assert!(mismatches.is_empty(), "{mismatches:?}");
        assert!(no_propagation_identity(&lt.source, &lt.f, j));
    }
}

#[test]
fn zero_fault_has_zero_residual() {
    let lt = build_prep_circuit(&surface(), &hamming()).unwrap();
    let spp = sp_matrices(&lt, 0).unwrap();
    let z = check_z_bound(&lt, &spp, &BitVec::zeros(spp.j_x.cols())).unwrap();
    assert!(z.e_rs.is_zero() && z.ok);
    let f = spz_factors(&lt).unwrap();
    let x = check_x_bound(&lt, &spp, &f, &BitVec::zeros(spp.j_z.cols())).unwrap();
    assert_eq!(x, XBound::Residual { e_rs: BitVec::zeros(26), ok: true });
}

#[test]
fn single_outcome_flip_is_detected() {
    let lt = build_prep_circuit(&surface(), &hamming()).unwrap();
    let spp = sp_matrices(&lt, 0).unwrap();
    let f = spz_factors(&lt).unwrap();
    let len = spp.j_z.cols();
    let e = BitVec::unit(len, len - 1);
    assert_eq!(check_x_bound(&lt, &spp, &f, &e).unwrap(), XBound::Detected);
}

#[test]
fn x_bound_constants() {
    let lt = build_prep_circuit(&surface(), &hamming()).unwrap();
    let f = spz_factors(&lt).unwrap();
    assert_eq!(f.omega_dz, 4);
    assert_eq!(f.factor, num_rational::Ratio::from_integer(1));
    assert_eq!(f.threshold, num_rational::Ratio::new(3, 4));
}

#[test]
fn z_lemma_exhaustive_weight_two() {
    let lt = build_prep_circuit(&surface(), &hamming()).unwrap();
    let t = sweep_z(&lt, 2).unwrap();
    assert_eq!(t.violations, 0);
    assert!(t.checked > 0);
}

#[test]
fn x_lemma_weight_one_and_sampled_weight_two() {
    let lt = build_prep_circuit(&surface(), &hamming()).unwrap();
    let t = sweep_x(&lt, 1).unwrap();
    assert_eq!((t.violations, t.inequivalent), (0, 0), "{t:?}");
    assert!(t.detected < t.checked);
    let s = sample_x(&lt, 2, 2000, 9).unwrap();
    assert_eq!((s.violations, s.inequivalent), (0, 0), "{s:?}");
}

#[test]
fn parity_check_layers_have_bounded_depth() {
    let lt = build_prep_circuit(&surface(), &hamming()).unwrap();
    let w = lt.circuit.omega_max();
    for op in lt.circuit.ops() {
        if let qsurg_core::sim::Op::MeasurePauli { checks, .. } = op {
            assert!(qsurg_core::sim::edge_coloring(checks).len() + 2 <= w + 2);
        }
    }
}
