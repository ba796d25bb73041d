#![allow(dead_code)]

use std::f64::consts::PI;

use proptest::prelude::*;
use qcdiff_core::circuit::{Circuit, GateInstance, GateKind};

pub fn arb_gate(kinds: Vec<GateKind>, n: usize) -> impl Strategy<Value = GateInstance> {
    let kinds: Vec<GateKind> = kinds.into_iter().filter(|k| k.arity() <= n).collect();
    (prop::sample::select(kinds), Just((0..n).collect::<Vec<_>>()).prop_shuffle(), 0.0..4.0 * PI).prop_map(
        |(k, qs, th)| {
            let (ctrl, rest) = qs.split_at(k.num_controls());
            let theta = k.is_parameterized().then_some(th);
            GateInstance::new(k, ctrl.to_vec(), rest[..k.num_targets()].to_vec(), theta).unwrap()
        },
    )
}

/// Circuits on `qubits` over `kinds` with at most `max_gates` gates.
pub fn arb_circuit_with(
    kinds: Vec<GateKind>,
    qubits: std::ops::RangeInclusive<usize>,
    max_gates: usize,
) -> impl Strategy<Value = Circuit> {
    qubits.prop_flat_map(move |n| {
        prop::collection::vec(arb_gate(kinds.clone(), n), 0..=max_gates)
            .prop_map(move |gs| Circuit::from_gates(n, gs).unwrap())
    })
}

pub fn arb_circuit() -> impl Strategy<Value = Circuit> {
    arb_circuit_with(GateKind::ALL.to_vec(), 1..=4, 8)
}
