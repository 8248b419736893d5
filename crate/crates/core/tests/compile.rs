mod common;

use num_bigint::BigInt;
use proptest::prelude::*;
use qsurg_core::compile::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(k: u64) -> CostParams {
    CostParams { k, n: 13, k_r: 4, k_f: 4, d_s: 3, blocks: 8, family_constant: 6 }
}

/// Random qubit-disjoint layer: each (block, qubit) slot is used at most once.
fn random_layer(rng: &mut ChaCha8Rng, blocks: usize, k: usize) -> Vec<LogicalOp> {
    let mut free: Vec<(usize, usize)> = (0..blocks).flat_map(|u| (0..k).map(move |j| (u, j))).collect();
    let mut ops = Vec::new();
    let target = rng.gen_range(0..=free.len());
    while !free.is_empty() && ops.len() < target {
        let i = rng.gen_range(0..free.len());
        let slot = free.swap_remove(i);
        let op = match rng.gen_range(0..6) {
            0 => LogicalOp::Mea { block: slot.0, qubit: slot.1 },
            1 => LogicalOp::H { block: slot.0, qubit: slot.1 },
            2 => LogicalOp::S { block: slot.0, qubit: slot.1 },
            3 => LogicalOp::T { block: slot.0, qubit: slot.1 },
            _ if !free.is_empty() => {
                let other = free.swap_remove(rng.gen_range(0..free.len()));
                LogicalOp::Cnot { control: slot, target: other }
            }
            _ => LogicalOp::H { block: slot.0, qubit: slot.1 },
        };
        ops.push(op);
    }
    ops
}

fn brute_qubit_disjoint(ops: &[LogicalOp], k: usize) -> bool {
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            let a = ops[i].qubit_support(k);
            if ops[j].qubit_support(k).iter().any(|s| a.contains(s)) {
                return false;
            }
        }
    }
    true
}

fn brute_block_disjoint(ops: &[LogicalOp]) -> bool {
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            let a = ops[i].block_support();
            if ops[j].block_support().iter().any(|b| a.contains(b)) {
                return false;
            }
        }
    }
    true
}

#[test]
fn table_rows_match_reference() {
    let reference = common::reference_operation_rows();
    let ours: Vec<[String; 3]> = operation_table().iter().map(|d| d.latex_cells()).collect();
    assert_eq!(ours, reference);
}

#[test]
fn decomposition_examples() {
    let mea = decompose(&LogicalOp::Mea { block: 0, qubit: 2 });
    assert_eq!(mea.measurements.len(), 1);
    assert_eq!(mea.measurements[0].latex(), "\\bar{Z}_j");
    assert!(mea.extras.is_empty());
    let cnot = decompose(&LogicalOp::Cnot { control: (0, 0), target: (1, 1) });
    assert_eq!(cnot.measurement_count(), 3);
    assert_eq!(cnot.extras, vec![ExtraResource::MemoryZ]);
    let init = decompose(&LogicalOp::Init { block: 3 });
    assert!(init.measurements.is_empty());
    assert_eq!(init.extras, vec![ExtraResource::MemoryX]);
    assert_eq!(decompose(&LogicalOp::T { block: 0, qubit: 0 }).magic, MagicUse::ConsumesT);
    assert_eq!(decompose(&LogicalOp::S { block: 0, qubit: 0 }).magic, MagicUse::ReusesS);
    assert_eq!(decompose(&LogicalOp::T { block: 0, qubit: 0 }).measurement_count(), 5);
}

#[test]
fn parse_and_display_round_trip() {
    let text = "# layer\nINIT 0\nCNOT 0.1 2.3\nT 1.0  # magic\n\nMEA 2.2\nH 3.1\nS 4.0\n";
    let ops = parse_circuit(text).unwrap();
    assert_eq!(ops.len(), 6);
    let again: String = ops.iter().map(|o| format!("{o}\n")).collect();
    assert_eq!(parse_circuit(&again).unwrap(), ops);
    assert!(parse_circuit("CNOT 0.1").is_err());
    assert!(parse_circuit("X 0.1").is_err());
    assert!(parse_circuit("H 0-1").is_err());
}

#[test]
fn disjointness_examples() {
    let a = LogicalOp::Cnot { control: (0, 0), target: (1, 0) };
    let b = LogicalOp::Cnot { control: (0, 1), target: (1, 1) };
    assert!(is_qubit_disjoint(&[a, b], 2));
    assert!(!is_block_disjoint(&[a, b]));
    assert!(is_qubit_disjoint(&[], 2) && is_block_disjoint(&[]));
    let init = LogicalOp::Init { block: 0 };
    assert!(!is_qubit_disjoint(&[init, LogicalOp::H { block: 0, qubit: 1 }], 2));
}

#[test]
fn shared_block_pair_serializes_fully() {
    let k = 5;
    let ops: Vec<_> = (0..k).map(|j| LogicalOp::Cnot { control: (0, j), target: (1, j) }).collect();
    let s = serialize(&ops, k).unwrap();
    assert_eq!(s.colors(), k);
    assert!(check_schedule(&ops, &s).is_empty());
    let one = serialize(&[LogicalOp::T { block: 3, qubit: 0 }], 1).unwrap();
    assert_eq!(one.colors(), 1);
}

#[test]
fn serialize_rejects_overlap() {
    let ops = [LogicalOp::H { block: 0, qubit: 0 }, LogicalOp::Mea { block: 0, qubit: 0 }];
    assert!(serialize(&ops, 2).is_err());
    assert!(serialize(&[LogicalOp::H { block: 0, qubit: 4 }], 2).is_err());
}

#[test]
fn eight_blocks_four_qubits() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let ops = random_layer(&mut rng, 8, 4);
        let s = serialize(&ops, 4).unwrap();
        assert!(s.colors() <= 7);
        for class in &s.classes {
            let members: Vec<_> = class.iter().map(|&i| ops[i]).collect();
            assert!(brute_block_disjoint(&members));
        }
        assert!(check_schedule(&ops, &s).is_empty());
    }
}

proptest! {
    #[test]
    fn disjointness_matches_brute_force(seed in any::<u64>(), k in 1usize..5, blocks in 1usize..6, extra in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ops = random_layer(&mut rng, blocks, k);
        for _ in 0..extra {
            ops.push(LogicalOp::H { block: rng.gen_range(0..blocks), qubit: rng.gen_range(0..k) });
        }
        prop_assert_eq!(is_qubit_disjoint(&ops, k), brute_qubit_disjoint(&ops, k));
        prop_assert_eq!(is_block_disjoint(&ops), brute_block_disjoint(&ops));
    }

    #[test]
    fn schedules_are_valid(seed in any::<u64>(), k in 1usize..7, blocks in 1usize..33) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops = random_layer(&mut rng, blocks, k);
        let s = serialize(&ops, k).unwrap();
        prop_assert!(s.colors() <= (2 * k - 1).max(1));
        prop_assert!(check_schedule(&ops, &s).is_empty());
    }

    #[test]
    fn batch_matches_rational(num in 0u64..100_000, k_r in 1u64..20, k_f in 1u64..20, d_s in 1u64..8) {
        let b = batch(num, k_r, k_f, d_s).unwrap();
        prop_assert_eq!(BigInt::from(b), batch_rational(num, k_r, k_f, d_s));
    }

    #[test]
    fn batch_sum_bound_holds(seed in any::<u64>(), k in 1u64..5, k_r in 1u64..6, k_f in 1u64..6, d_s in 1u64..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops = random_layer(&mut rng, 24, k as usize);
        let sched = serialize(&ops, k as usize).unwrap();
        let p = CostParams { k, k_r, k_f, d_s, ..params(k) };
        for class in &sched.classes {
            let sub: Vec<_> = class.iter().map(|&i| ops[i]).collect();
            let report = sublayer_cost(&sub, &p).unwrap();
            prop_assert!(report.bound_present_holds());
            prop_assert!(report.bound_constant_holds());
        }
    }
}

#[test]
fn batch_edge_cases() {
    assert_eq!(batch(0, 4, 4, 3).unwrap(), 0);
    assert_eq!(batch(4 * 4 * 9, 4, 4, 3).unwrap(), 1);
    assert_eq!(batch(4 * 4 * 9 + 1, 4, 4, 3).unwrap(), 2);
    assert!(batch(1, 0, 1, 1).is_err());
}

#[test]
fn family_count_fits_default_constant() {
    for k in 1..50 {
        assert!(family_count(k) <= 6 * k * k);
    }
}

#[test]
fn sublayer_cost_report() {
    let ops = [
        LogicalOp::T { block: 0, qubit: 1 },
        LogicalOp::T { block: 1, qubit: 1 },
        LogicalOp::S { block: 2, qubit: 0 },
        LogicalOp::Cnot { control: (3, 0), target: (4, 1) },
    ];
    let r = sublayer_cost(&ops, &params(2)).unwrap();
    assert_eq!(r.families.len(), 3);
    let t = r.families.iter().find(|f| f.family == "T_1").unwrap();
    assert_eq!((t.num, t.batch, t.magic_t), (2, 1, 2));
    let s = r.families.iter().find(|f| f.family == "S_0").unwrap();
    assert_eq!((s.magic_t, s.magic_s_inputs), (0, 1));
    assert_eq!(r.batch_sum, 3);
    assert!(r.bound_present_holds() && r.bound_constant_holds());
    assert_eq!(r.sublayer_time(), 27);
    assert!(r.to_tsv("").contains("batch_sum\t3\n"));
    assert!(sublayer_cost(&ops[..1].repeat(2), &params(2)).is_err());
}

#[test]
fn compile_circuit_end_to_end() {
    let text = "INIT 0\nINIT 1\nCNOT 0.0 1.0\nCNOT 0.1 1.1\nH 0.0\nT 1.1\nMEA 0.1\n";
    let ops = parse_circuit(text).unwrap();
    let c = compile(&ops, &params(2)).unwrap();
    assert_eq!(c.layers.len(), 3);
    assert_eq!(c.sublayers(), 1 + 2 + 2);
    for (layer, sched) in c.layers.iter().zip(&c.schedules) {
        let mut covered: Vec<usize> = sched.classes.concat();
        covered.sort();
        assert_eq!(&covered, layer);
    }
    let tsv = c.schedule_tsv();
    assert_eq!(tsv.lines().count(), ops.len() + 1);
    assert!(c.cost_tsv().starts_with("key\tvalue\nlayers\t3\n"));
}

#[test]
fn overhead_rows() {
    for a in [1.0, 1.5, 2.0] {
        let row = overhead_exponents(a, 1.0, 1.0).unwrap();
        assert_eq!(row.qubit, Exponent::Exact(0.0));
        assert_eq!(row.time, Exponent::Exact(a));
    }
    assert!(overhead_exponents(0.5, 1.0, 1.0).is_err());
    assert!(overhead_exponents(f64::NAN, 1.0, 1.0).is_err());
    let rows = comparison_rows(2.0);
    let ls = rows.iter().find(|r| r.protocol == "LS").unwrap();
    assert_eq!((ls.qubit, ls.time), (Exponent::Exact(2.0), Exponent::Exact(1.0)));
    let ds = rows.iter().find(|r| r.protocol == "DS").unwrap();
    assert_eq!((ds.qubit, ds.time), (Exponent::Exact(1.0), Exponent::Exact(1.0)));
    assert_eq!(rows.iter().find(|r| r.protocol == "GM+BFB").unwrap().time, Exponent::AtLeast(2.0));
}
