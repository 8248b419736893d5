use proptest::prelude::*;
use qsurg_core::codes::{surface_code_via_hgp, CssCode};
use qsurg_core::gf2::{BitMatrix, BitVec};
use qsurg_core::sim::*;

fn surface(d: usize) -> CssCode {
    surface_code_via_hgp(d).unwrap().with_distance(d)
}

fn toy_circuit() -> Circuit {
    let mut b = CircuitBuilder::new();
    let data = b.register("data", 4);
    let anc = b.register("anc", 2);
    b.tick("D1", &data.qubits(), 1.0);
    b.init(Basis::Z, anc.qubits());
    b.cnot(data.qubits(), anc.qubits(), BitMatrix::from_strs(&["1100", "0111"]));
    b.tick("D2", &data.qubits(), 1.0);
    b.tick("A2", &anc.qubits(), 1.0);
    b.measure(Basis::Z, anc.qubits(), "m", Some("mflip"));
    b.measure_pauli(Basis::X, data.qubits(), BitMatrix::from_strs(&["1111"]), "x", Some("xflip"));
    b.tick("D3", &data.qubits(), 1.0);
    b.build()
}

#[test]
fn single_x_before_z_measurement_flips_its_bit() {
    let mut b = CircuitBuilder::new();
    let q = b.register("q", 3);
    let loc = b.tick("T", &q.qubits(), 1.0);
    let out = b.measure(Basis::Z, q.qubits(), "m", None);
    let c = b.build();
    let fr = c.propagate(&FaultPath::single(&c, Basis::X, loc.start + 1));
    assert_eq!(fr.flips, BitVec::unit(out.len(), 1));
    let fr = c.propagate(&FaultPath::single(&c, Basis::Z, loc.start + 1));
    assert!(fr.flips.is_zero());
}

#[test]
fn generalized_cnot_matches_gate_by_gate() {
    let a = BitMatrix::from_strs(&["101", "011", "110"]);
    let build = |expand: bool| {
        let mut b = CircuitBuilder::new();
        let c = b.register("c", 3);
        let t = b.register("t", 3);
        b.tick("in_c", &c.qubits(), 1.0);
        b.tick("in_t", &t.qubits(), 1.0);
        if expand {
            for class in edge_coloring(&a) {
                let mut m = BitMatrix::zeros(3, 3);
                for (r, col) in class {
                    m.set(r, col, true);
                }
                b.cnot(c.qubits(), t.qubits(), m);
            }
        } else {
            b.cnot(c.qubits(), t.qubits(), a.clone());
        }
        b.build()
    };
    let (g, e) = (build(false), build(true));
    for basis in [Basis::X, Basis::Z] {
        for l in g.locations_of(basis) {
            let f = FaultPath::single(&g, basis, l);
            assert_eq!(g.propagate(&f), e.propagate(&f));
        }
    }
    let spread = g.propagate(&FaultPath::single(&g, Basis::X, 0));
    assert!(spread.x.weight() - 1 <= g.omega_max());
}

#[test]
fn projective_measurement_matches_ancilla_decomposition() {
    let c = toy_circuit();
    let d = c.decompose_measurements();
    assert_eq!(c.num_outcomes(), d.num_outcomes());
    // Map every location group by name.
    let map = |l: usize| {
        let (name, range) = c.groups().iter().find(|(_, r)| r.contains(&l)).unwrap();
        d.group(name).unwrap().start + (l - range.start)
    };
    for basis in [Basis::X, Basis::Z] {
        let locs = c.locations_of(basis);
        for (i, &l1) in locs.iter().enumerate() {
            for &l2 in &locs[i..] {
                let mut f = FaultPath::single(&c, basis, l1);
                f.of_mut(basis).flip(l2);
                let mut g = FaultPath::single(&d, basis, map(l1));
                g.of_mut(basis).flip(map(l2));
                assert_eq!(c.propagate(&f).flips, d.propagate(&g).flips, "{basis:?} {l1} {l2}");
            }
        }
    }
    assert!(d.gate_depth() >= c.ops().len() - 4);
}

#[test]
fn x_and_z_faults_decouple() {
    let c = toy_circuit();
    let m = c.outcome_group("m").unwrap();
    let x = c.outcome_group("x").unwrap();
    for l in c.locations_of(Basis::Z) {
        let fr = c.propagate(&FaultPath::single(&c, Basis::Z, l));
        assert!(fr.flips.slice(m.start, m.len()).is_zero());
        assert!(fr.x.is_zero());
    }
    for l in c.locations_of(Basis::X) {
        let fr = c.propagate(&FaultPath::single(&c, Basis::X, l));
        assert!(fr.flips.slice(x.start, x.len()).is_zero());
        assert!(fr.z.is_zero());
    }
}

proptest! {
    #[test]
    fn propagation_is_linear(seed in any::<u64>()) {
        let c = toy_circuit();
        let f1 = sample_faults(&c, 0.3, seed, 0).unwrap();
        let f2 = sample_faults(&c, 0.3, seed, 1).unwrap();
        let sum = FaultPath { x: f1.x.xor(&f2.x), z: f1.z.xor(&f2.z) };
        let mut expect = c.propagate(&f1);
        expect.xor_assign(&c.propagate(&f2));
        prop_assert_eq!(c.propagate(&sum), expect);
    }

    #[test]
    fn merge_wait_is_bounded(p1 in 0.0f64..1.0, p2 in 0.0f64..1.0) {
        let m = merge_wait(p1, p2);
        prop_assert!(m <= (2.0 * p1 + p2).min(p1 + 2.0 * p2) + 1e-12);
    }

    #[test]
    fn edge_coloring_uses_max_degree(rows in proptest::collection::vec(0u64..256, 1..8)) {
        let strs: Vec<String> = rows.iter().map(|r| format!("{r:08b}")).collect();
        let refs: Vec<&str> = strs.iter().map(|s| s.as_str()).collect();
        let m = BitMatrix::from_strs(&refs);
        let classes = edge_coloring(&m);
        prop_assert_eq!(classes.len(), m.weight_profile().max());
        let mut seen = BitMatrix::zeros(m.rows(), m.cols());
        for class in &classes {
            let mut rs = std::collections::HashSet::new();
            let mut cs = std::collections::HashSet::new();
            for &(r, c) in class {
                prop_assert!(rs.insert(r) && cs.insert(c));
                seen.set(r, c, true);
            }
        }
        prop_assert_eq!(seen, m);
    }
}

#[test]
fn sampling_edge_cases() {
    let c = toy_circuit();
    assert!(sample_faults(&c, 0.0, 7, 0).unwrap().is_empty());
    assert_eq!(sample_faults(&c, 0.2, 7, 3).unwrap(), sample_faults(&c, 0.2, 7, 3).unwrap());
    assert!(sample_faults(&c, 1.0, 7, 0).is_err());
    let p = 1.0 - 1e-9;
    let trials = 200;
    let total: usize = (0..trials).map(|t| sample_faults(&c, p, 1, t).unwrap().weight()).sum();
    let slots = c.locations_of(Basis::X).len() + c.locations_of(Basis::Z).len();
    let mean = total as f64 / trials as f64;
    assert!((mean - slots as f64).abs() < 0.01, "mean {mean} vs {slots}");
}

#[test]
fn geometric_sampler_matches_rate() {
    let c = toy_circuit();
    let sampler = FaultSampler::new(&c, 0.1).unwrap();
    let trials = 20_000;
    let mut count = 0usize;
    for t in 0..trials {
        count += sampler.sample(&mut trial_rng(3, t)).len();
    }
    let slots = (c.locations_of(Basis::X).len() + c.locations_of(Basis::Z).len()) as f64;
    let mean = count as f64 / trials as f64;
    let sigma = (slots * 0.1 * 0.9 / trials as f64).sqrt();
    assert!((mean - 0.1 * slots).abs() < 4.0 * sigma, "mean {mean}");
}

#[test]
fn lookup_decoder_corrects_single_errors() {
    let code = surface(3);
    let dec = CssDecoder::new(&code).unwrap();
    assert_eq!(dec.x_errors.decode(&BitVec::zeros(code.r_z())), Some(BitVec::zeros(code.n)));
    for i in 0..code.n {
        let e = BitVec::unit(code.n, i);
        assert_eq!(dec.ideal_decode(Basis::X, &e), DecodeOutcome::Success);
        assert_eq!(dec.ideal_decode(Basis::Z, &e), DecodeOutcome::Success);
    }
    let mut silent = 0;
    for i in 0..code.n {
        for j in i + 1..code.n {
            let e = BitVec::from_indices(code.n, &[i, j]);
            if dec.ideal_decode(Basis::X, &e) == DecodeOutcome::Success {
                silent += 1;
            }
        }
    }
    // Some weight-2 errors are still corrected (degenerate or lucky); none is misreported.
    assert!(silent < code.n * (code.n - 1) / 2);
}

#[test]
fn decoder_table_cap() {
    let big = BitMatrix::zeros(4, 200);
    assert!(LookupDecoder::new(&big, 5).is_err());
}

#[test]
fn memory_is_noiseless_at_zero_rate() {
    let exp = MemoryExperiment::new(&surface(3), 1.0).unwrap();
    let r = exp.run(0.0, 1000, 5).unwrap();
    assert_eq!(r.failures, 0);
}

#[test]
fn memory_single_faults_are_corrected() {
    let exp = MemoryExperiment::new(&surface(3), 1.0).unwrap();
    for basis in [Basis::X, Basis::Z] {
        for l in exp.circuit.locations_of(basis) {
            let (x, z) = exp.evaluate(&[(basis, l)]);
            assert_eq!((x, z), (DecodeOutcome::Success, DecodeOutcome::Success), "{basis:?} {l}");
        }
    }
}

#[test]
fn memory_rate_saturates_at_high_noise() {
    let exp = MemoryExperiment::new(&surface(3), 1.0).unwrap();
    let r = exp.run(0.5, 4000, 11).unwrap();
    let x_rate = r.x_failures as f64 / r.trials as f64;
    assert!((0.4..0.6).contains(&x_rate), "x failure rate {x_rate}");
}

#[test]
fn lambda_is_validated() {
    assert!(MemoryExperiment::new(&surface(3), f64::NAN).is_err());
}

#[test]
fn reduced_params_arithmetic() {
    let r = reduced_error_params(1e-4, 1, 1).unwrap();
    assert!((r.q_bs - 0.12).abs() < 1e-12);
    assert_eq!(reduced_error_params(0.0, 2, 2).unwrap().q_bs, 0.0);
    let mut last = reduced_error_params(0.0, 2, 3).unwrap();
    for i in 1..100 {
        let cur = reduced_error_params(i as f64 / 100.0, 2, 3).unwrap();
        assert!(cur.q_bs >= last.q_bs && cur.q_ms >= last.q_ms && cur.q_ltc >= last.q_ltc);
        last = cur;
    }
    assert!((merge_wait(0.1, 0.2) - 0.32).abs() < 1e-12);
    assert_eq!(merge_wait(0.0, 0.3), 0.3);
}
