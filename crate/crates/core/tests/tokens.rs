mod common;

use common::{arb_circuit, arb_circuit_with};
use proptest::prelude::*;
use qcdiff_core::circuit::{
    denormalize_param, detokenize, normalize_param, read_circuits_jsonl, tokenize, write_circuits_jsonl, Circuit,
    GateInstance, GateKind, GateSet, TokenMatrix,
};
use qcdiff_core::sim::{circuit_unitary, infidelity};

fn same_up_to_angle_rounding(a: &Circuit, b: &Circuit) -> bool {
    a.num_qubits() == b.num_qubits()
        && a.len() == b.len()
        && a.gates().iter().zip(b.gates()).all(|(x, y)| {
            (x.kind(), x.controls(), x.targets()) == (y.kind(), y.controls(), y.targets())
                && (x.lambda() - y.lambda()).abs() < 1e-12
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tokenize_round_trips(circ in arb_circuit(), extra in 0usize..4) {
        let gs = GateSet::full();
        let m = tokenize(&circ, circ.len() + extra, &gs).unwrap();
        let back = detokenize(&m, &gs).unwrap();
        prop_assert!(same_up_to_angle_rounding(&back, &circ));
        let again = tokenize(&back, circ.len() + extra, &gs).unwrap();
        prop_assert_eq!(again.tokens(), m.tokens());
        prop_assert!(infidelity(&circuit_unitary(&back), &circuit_unitary(&circ)).unwrap() < 1e-12);
    }

    #[test]
    fn token_matrix_bytes_round_trip(circ in arb_circuit()) {
        let m = tokenize(&circ, 8, &GateSet::full()).unwrap();
        let bytes = m.to_bytes();
        prop_assert_eq!(bytes.len(), TokenMatrix::byte_len(m.num_qubits(), 8));
        prop_assert_eq!(TokenMatrix::from_bytes(&bytes, m.num_qubits(), 8).unwrap(), m);
    }

    #[test]
    fn jsonl_round_trips(circs in prop::collection::vec(arb_circuit(), 0..5)) {
        let mut buf = Vec::new();
        write_circuits_jsonl(&mut buf, &circs).unwrap();
        let back = read_circuits_jsonl(&buf[..]).unwrap();
        prop_assert_eq!(back.len(), circs.len());
        for (a, b) in back.iter().zip(&circs) {
            prop_assert!(same_up_to_angle_rounding(a, b));
        }
    }

    #[test]
    fn toy_set_rejects_foreign_kinds(circ in arb_circuit_with(vec![GateKind::Ry, GateKind::Swap], 2..=3, 4)) {
        let toy = GateSet::new(&[GateKind::H, GateKind::Cx, GateKind::Rx]).unwrap();
        prop_assert_eq!(tokenize(&circ, 4, &toy).is_ok(), circ.is_empty());
    }

    #[test]
    fn normalization_lands_in_half_open_range(theta in -100.0f64..100.0) {
        for kind in [GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::Cp] {
            let lam = normalize_param(kind, theta);
            prop_assert!((-1.0..1.0).contains(&lam));
            let period = kind.param_period().unwrap();
            let back = denormalize_param(kind, lam);
            let diff = (back - theta).rem_euclid(period);
            prop_assert!(diff.min(period - diff) < 1e-9);
        }
    }
}

#[test]
fn class_order_for_all_kinds() {
    assert_eq!(GateSet::full().classes(), &[0, 1, -2, 2, -3, 3, 4, 5, 6, 7, 8, 9]);
    assert_eq!(GateSet::full().num_classes(), 12);
    assert_eq!(GateSet::full().padding(), 9);
}

#[test]
fn toy_set_has_six_classes_regardless_of_listing_order() {
    let a = GateSet::new(&[GateKind::Rx, GateKind::Cx, GateKind::H]).unwrap();
    let b = GateSet::new(&[GateKind::H, GateKind::Cx, GateKind::Rx, GateKind::H]).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.classes(), &[0, 1, -2, 2, 3, 4]);
}

#[test]
fn periods() {
    use std::f64::consts::PI;
    assert_eq!(GateKind::Rx.param_period(), Some(4.0 * PI));
    assert_eq!(GateKind::Rz.param_period(), Some(4.0 * PI));
    assert_eq!(GateKind::Cp.param_period(), Some(2.0 * PI));
    assert_eq!(GateKind::H.param_period(), None);
    assert_eq!(normalize_param(GateKind::Rx, 0.0), -1.0);
    assert_eq!(normalize_param(GateKind::Rx, 2.0 * PI), 0.0);
    assert_eq!(normalize_param(GateKind::Cp, PI), 0.0);
}

#[test]
fn layout_of_a_toffoli_column() {
    let c = Circuit::from_gates(3, vec![GateInstance::ccx(2, 0, 1), GateInstance::h(1)]).unwrap();
    let m = tokenize(&c, 3, &GateSet::full()).unwrap();
    let ccx = GateSet::full().token_of(GateKind::Ccx).unwrap();
    assert_eq!(m.column(0).collect::<Vec<_>>(), vec![-ccx, ccx, -ccx]);
    assert_eq!(m.column(1).collect::<Vec<_>>(), vec![0, 1, 0]);
    assert_eq!(m.column(2).collect::<Vec<_>>(), vec![9, 9, 9]);
}

#[test]
fn malformed_columns_are_rejected() {
    let gs = GateSet::full();
    let cx = gs.token_of(GateKind::Cx).unwrap();
    let h = gs.token_of(GateKind::H).unwrap();
    let bad = |col: [i16; 3]| TokenMatrix::new(3, 1, col.to_vec(), vec![0.0]).unwrap();
    assert!(detokenize(&bad([-cx, 0, 0]), &gs).is_err());
    assert!(detokenize(&bad([-cx, cx, cx]), &gs).is_err());
    assert!(detokenize(&bad([h, cx, -cx]), &gs).is_err());
    assert!(detokenize(&bad([h, gs.padding(), 0]), &gs).is_err());
    assert!(detokenize(&bad([-h, 0, 0]), &gs).is_err());
    assert!(detokenize(&bad([42, 0, 0]), &gs).is_err());
    assert!(detokenize(&bad([0, 0, 0]), &gs).unwrap().is_empty());
}

#[test]
fn too_many_gates() {
    let c = Circuit::from_gates(1, vec![GateInstance::h(0); 5]).unwrap();
    assert!(tokenize(&c, 4, &GateSet::full()).is_err());
}
