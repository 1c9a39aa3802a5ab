//! Cross-checks of the statevector kernels against explicit dense-matrix
//! linear algebra, plus unitarity and norm-preservation sweeps.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qdistill_core::oracle;
use qdistill_core::sim::{GateKind, GateOp, StateVector};
use qdistill_core::{EmbeddingTable, ModelConfig, StudentParams};

const ALL_KINDS: [GateKind; 10] = [
    GateKind::X,
    GateKind::Y,
    GateKind::Z,
    GateKind::H,
    GateKind::Cnot,
    GateKind::Cz,
    GateKind::Rx,
    GateKind::Ry,
    GateKind::Rz,
    GateKind::Rzz,
];

fn random_gate(rng: &mut ChaCha8Rng, n_qubits: usize) -> GateOp {
    let kind = ALL_KINDS[rng.gen_range(0..ALL_KINDS.len())];
    let a = rng.gen_range(0..n_qubits);
    let b = loop {
        let b = rng.gen_range(0..n_qubits);
        if b != a {
            break b;
        }
    };
    let angle = rng.gen_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI);
    GateOp {
        kind,
        targets: [a, if kind.arity() == 2 { b } else { 0 }],
        angle: if kind.is_parameterized() { angle } else { 0.0 },
    }
}

fn random_state(rng: &mut ChaCha8Rng, n_qubits: usize) -> StateVector {
    let dim = 1 << n_qubits;
    let mut amps: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(amps).unwrap()
}

#[test]
fn kernels_match_full_matrix_construction() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    let mut cases = 0;
    for _ in 0..600 {
        let n = rng.gen_range(2..=3);
        let state = random_state(&mut rng, n);
        let gate = random_gate(&mut rng, n);

        let expected = oracle::apply_by_matrix(&state, &gate);
        let mut fast = state.clone();
        fast.apply(&gate).unwrap();

        for (a, b) in fast.amplitudes().iter().zip(&expected) {
            assert!(
                (a - b).norm() < 1e-12,
                "kernel disagrees with matrix for {gate:?} on {n} qubits"
            );
        }
        cases += 1;
    }
    assert!(cases >= 500);
}

#[test]
fn every_gate_matrix_is_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB2);
    for _ in 0..1000 {
        let gate = random_gate(&mut rng, 2);
        let u = oracle::gate_unitary(&gate, 2);
        let product = oracle::matmul(&oracle::dagger(&u), &u);
        let identity = oracle::identity(4);
        assert!(
            oracle::max_abs_diff(&product, &identity) < 1e-12,
            "U†U != I for {gate:?}"
        );
    }
}

#[test]
fn random_circuits_preserve_the_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    for _ in 0..20 {
        let n = rng.gen_range(2..=6);
        let mut state = StateVector::zero(n).unwrap();
        for _ in 0..100 {
            state.apply(&random_gate(&mut rng, n)).unwrap();
        }
        assert!((state.norm_sqr() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn untargeted_qubits_keep_their_reduced_state() {
    // A single-qubit gate must not move probability on other qubits.
    let mut rng = ChaCha8Rng::seed_from_u64(0xD4);
    for _ in 0..100 {
        let n = 3;
        let state = random_state(&mut rng, n);
        let target = rng.gen_range(0..n);
        let gate = GateOp::ry(target, rng.gen_range(-3.0..3.0));
        let mut moved = state.clone();
        moved.apply(&gate).unwrap();
        let before = state.z_expectations();
        let after = moved.z_expectations();
        for q in 0..n {
            if q != target {
                assert!(
                    (before[q] - after[q]).abs() < 1e-10,
                    "gate on {target} disturbed qubit {q}"
                );
            }
        }
    }
}

#[test]
fn forward_state_matches_full_circuit_matrix() {
    // The whole student circuit against one explicit matrix product.
    let mut rng = ChaCha8Rng::seed_from_u64(0xE5);
    for _ in 0..10 {
        let n = rng.gen_range(2..=3);
        let config = ModelConfig::new(n, 3, 2, 2).unwrap();
        let params = StudentParams::init(&config, &mut rng);
        let table = EmbeddingTable::deterministic(9, 10, 3);
        let tokens = vec![rng.gen_range(0..10u32), rng.gen_range(0..10u32)];

        let mut state = qdistill_core::encode(&tokens, &table, &params, &config).unwrap();
        qdistill_core::apply_ansatz(&mut state, &params).unwrap();

        let pooled = table.pooled(&tokens).unwrap();
        let z = qdistill_core::model::encoding_angles(&params, &pooled);
        let gates: Vec<GateOp> = qdistill_core::circuit_gates(&params, &z)
            .into_iter()
            .map(|(g, _)| g)
            .collect();
        let u = oracle::circuit_unitary(&gates, n);
        let mut zero = vec![Complex64::new(0.0, 0.0); 1 << n];
        zero[0] = Complex64::new(1.0, 0.0);
        let expected = oracle::matvec(&u, &zero);

        for (a, b) in state.amplitudes().iter().zip(&expected) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}

#[test]
fn z_expectations_stay_in_range_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF6);
    for _ in 0..200 {
        let n = rng.gen_range(1..=5);
        let state = random_state(&mut rng, n);
        for e in state.z_expectations() {
            assert!((-1.0..=1.0).contains(&e), "expectation {e} out of range");
        }
    }
}
