mod common;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::arb_circuit;
use qcdiff_core::circuit::{Circuit, GateInstance, GateKind};
use qcdiff_core::data::{qft_circuit, qft_unitary};
use qcdiff_core::sim::{
    circuit_unitary, corrupt, gate_unitary, hamiltonian_evolution, hamiltonian_matrix, infidelity, Corruption,
    HamiltonianSpec, Unitary,
};

type M = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn m2(a: [[Complex64; 2]; 2]) -> M {
    M::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]])
}

fn id2() -> M {
    M::identity(2, 2)
}
fn x() -> M {
    m2([[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]])
}
fn y() -> M {
    m2([[c(0., 0.), c(0., -1.)], [c(0., 1.), c(0., 0.)]])
}
fn z() -> M {
    m2([[c(1., 0.), c(0., 0.)], [c(0., 0.), c(-1., 0.)]])
}
fn p1() -> M {
    m2([[c(0., 0.), c(0., 0.)], [c(0., 0.), c(1., 0.)]])
}

/// Kronecker product over all `n` qubits, qubit 0 leftmost.
fn kron_on(n: usize, ops: &[(usize, M)]) -> M {
    let mut out = M::from_element(1, 1, c(1., 0.));
    for q in 0..n {
        let f = ops.iter().find(|(i, _)| *i == q).map_or_else(id2, |(_, m)| m.clone());
        out = out.kronecker(&f);
    }
    out
}

/// Gate matrix from Pauli algebra: projectors for controls, `exp(−iθP/2)`
/// for rotations.
fn oracle_gate(g: &GateInstance, n: usize) -> M {
    let dim = 1 << n;
    let ident = M::identity(dim, dim);
    let t = g.targets();
    let rot = |p: M, th: f64| id2() * c((th / 2.0).cos(), 0.0) - p * c(0.0, (th / 2.0).sin());
    match g.kind() {
        GateKind::H => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            kron_on(n, &[(t[0], (x() + z()) * c(s, 0.0))])
        }
        GateKind::Rx => kron_on(n, &[(t[0], rot(x(), g.theta().unwrap()))]),
        GateKind::Ry => kron_on(n, &[(t[0], rot(y(), g.theta().unwrap()))]),
        GateKind::Rz => kron_on(n, &[(t[0], rot(z(), g.theta().unwrap()))]),
        GateKind::Cx => {
            let k = g.controls()[0];
            let on = kron_on(n, &[(k, p1())]);
            &ident - &on + kron_on(n, &[(k, p1()), (t[0], x())])
        }
        GateKind::Ccx => {
            let (a, b) = (g.controls()[0], g.controls()[1]);
            let on = kron_on(n, &[(a, p1()), (b, p1())]);
            &ident - &on + kron_on(n, &[(a, p1()), (b, p1()), (t[0], x())])
        }
        GateKind::Swap => {
            let pairs = [x(), y(), z()].map(|p| kron_on(n, &[(t[0], p.clone()), (t[1], p)]));
            (&ident + &pairs[0] + &pairs[1] + &pairs[2]) * c(0.5, 0.0)
        }
        GateKind::Cp => {
            let phase = Complex64::from_polar(1.0, g.theta().unwrap()) - c(1.0, 0.0);
            &ident + kron_on(n, &[(t[0], p1()), (t[1], p1())]) * phase
        }
    }
}

fn oracle_circuit(circ: &Circuit) -> M {
    let dim = 1 << circ.num_qubits();
    circ.gates()
        .iter()
        .fold(M::identity(dim, dim), |acc, g| oracle_gate(g, circ.num_qubits()) * acc)
}

fn max_diff(a: &M, b: &M) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn circuit_unitary_matches_kronecker_oracle(circ in arb_circuit()) {
        let u = circuit_unitary(&circ);
        prop_assert!(max_diff(u.matrix(), &oracle_circuit(&circ)) < 1e-12);
    }

    #[test]
    fn infidelity_ignores_global_phase(circ in arb_circuit(), phi in -PI..PI) {
        let u = circuit_unitary(&circ);
        let shifted = Unitary::new(u.matrix() * Complex64::from_polar(1.0, phi)).unwrap();
        prop_assert!(infidelity(&u, &shifted).unwrap() <= 1e-12);
    }

    #[test]
    fn infidelity_is_bounded_and_symmetric(a in arb_circuit(), b in arb_circuit()) {
        prop_assume!(a.num_qubits() == b.num_qubits());
        let (ua, ub) = (circuit_unitary(&a), circuit_unitary(&b));
        let f = infidelity(&ua, &ub).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - infidelity(&ub, &ua).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn unitary_bytes_round_trip(circ in arb_circuit()) {
        let u = circuit_unitary(&circ);
        prop_assert_eq!(Unitary::from_bytes(&u.to_bytes()).unwrap(), u);
    }
}

#[test]
fn single_gates_match_oracle_on_every_placement() {
    for n in 1..=3usize {
        for &k in GateKind::ALL.iter().filter(|k| k.arity() <= n) {
            let mut qs: Vec<usize> = (0..n).collect();
            // All ordered choices of distinct qubits.
            let picks: Vec<Vec<usize>> = permutations(&mut qs, k.arity());
            for p in picks {
                let g = GateInstance::new(
                    k,
                    p[..k.num_controls()].to_vec(),
                    p[k.num_controls()..].to_vec(),
                    k.is_parameterized().then_some(1.234),
                )
                .unwrap();
                let u = gate_unitary(&g, n).unwrap();
                assert!(max_diff(u.matrix(), &oracle_gate(&g, n)) < 1e-13, "{g} on {n}");
            }
        }
    }
}

fn permutations(items: &mut [usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let head = items[i];
        let mut rest: Vec<usize> = items.iter().copied().filter(|&q| q != head).collect();
        for mut tail in permutations(&mut rest, k - 1) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

#[test]
fn qubit_zero_is_most_significant() {
    // X on qubit 0 of two maps |00⟩ (index 0) to |10⟩ (index 2).
    let u = circuit_unitary(&Circuit::from_gates(2, vec![GateInstance::rx(0, PI)]).unwrap());
    assert!((u.matrix()[(2, 0)].norm() - 1.0).abs() < 1e-12);
}

#[test]
fn identity_against_rz_half_pi() {
    let rz = circuit_unitary(&Circuit::from_gates(1, vec![GateInstance::rz(0, PI / 2.0)]).unwrap());
    let f = infidelity(&Unitary::identity(1), &rz).unwrap();
    assert!((f - 0.5).abs() <= 1e-12);
}

#[test]
fn infidelity_rejects_width_mismatch() {
    assert!(infidelity(&Unitary::identity(1), &Unitary::identity(2)).is_err());
}

/// `exp(A)` by scaling and squaring of a truncated Taylor series.
fn expm_series(a: &M) -> M {
    let norm = a.iter().map(|z| z.norm()).sum::<f64>();
    let s = norm.log2().ceil().max(0.0) as i32 + 1;
    let scaled = a * c(0.5f64.powi(s), 0.0);
    let dim = a.nrows();
    let mut term = M::identity(dim, dim);
    let mut sum = M::identity(dim, dim);
    for k in 1..30 {
        term = &term * &scaled * c(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

#[test]
fn evolution_matches_series_exponential() {
    let specs = [
        HamiltonianSpec::ising(3, 1.0, 0.7, 0.25),
        HamiltonianSpec::ising(4, -0.5, 1.3, 0.8),
        HamiltonianSpec::xxz(3, 0.9, 0.4, 0.25),
        HamiltonianSpec::xxz(4, 1.0, -1.0, 1.5),
    ];
    for spec in specs {
        let h = hamiltonian_matrix(&spec).unwrap();
        let oracle = expm_series(&(h * c(0.0, -spec.tau)));
        let u = hamiltonian_evolution(&spec).unwrap();
        assert!(max_diff(u.matrix(), &oracle) < 1e-10, "{spec:?}");
    }
}

#[test]
fn evolution_composes_in_time() {
    for (t1, t2) in [(0.1, 0.3), (0.7, 1.9), (2.5, -1.0)] {
        let at = |tau| hamiltonian_evolution(&HamiltonianSpec::xxz(4, 0.8, 0.6, tau)).unwrap();
        let lhs = at(t1 + t2);
        let rhs = at(t1).compose(&at(t2)).unwrap();
        assert!(max_diff(lhs.matrix(), rhs.matrix()) <= 1e-9);
    }
}

#[test]
fn single_spin_ising_half_pi_is_x() {
    for j in [0.0, 1.0, -7.5] {
        let u = hamiltonian_evolution(&HamiltonianSpec::ising(1, j, 1.0, PI / 2.0)).unwrap();
        let xu = Unitary::new(x()).unwrap();
        assert!(infidelity(&u, &xu).unwrap() <= 1e-10);
    }
}

#[test]
fn qft_matches_dft_oracle() {
    for n in 1..=4usize {
        let dim = 1usize << n;
        let mut f = M::zeros(dim, dim);
        for r in 0..dim {
            for col in 0..dim {
                let angle = 2.0 * PI * (r * col) as f64 / dim as f64;
                f[(r, col)] = c(angle.cos(), angle.sin()) / (dim as f64).sqrt();
            }
        }
        let u = circuit_unitary(&qft_circuit(n).unwrap());
        assert!(max_diff(u.matrix(), &f) <= 1e-10, "n = {n}");
        assert_eq!(qft_unitary(n).unwrap(), u);
    }
}

#[test]
fn corruptions_change_only_what_they_claim() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let base = Circuit::from_gates(
        3,
        vec![GateInstance::h(0), GateInstance::cx(0, 1), GateInstance::rz(2, 1.0), GateInstance::cp(1, 2, 0.4)],
    )
    .unwrap();
    let kinds = GateKind::ALL.to_vec();
    for _ in 0..50 {
        assert_eq!(corrupt(&base, Corruption::Drop, &kinds, &mut rng).unwrap().len(), 3);
        let app = corrupt(&base, Corruption::Append, &kinds, &mut rng).unwrap();
        assert_eq!((app.len(), &app.gates()[..4]), (5, base.gates()));
        let rep = corrupt(&base, Corruption::Replace, &kinds, &mut rng).unwrap();
        assert_eq!(rep.len(), 4);
        assert!(rep.gates().iter().zip(base.gates()).filter(|(a, b)| a != b).count() <= 1);
        let noisy = corrupt(&base, Corruption::ParamNoise(0.1), &kinds, &mut rng).unwrap();
        for (a, b) in noisy.gates().iter().zip(base.gates()) {
            assert_eq!((a.kind(), a.controls(), a.targets()), (b.kind(), b.controls(), b.targets()));
            if !a.kind().is_parameterized() {
                assert_eq!(a, b);
            }
        }
    }
}
