//! Brute-force dense-matrix reference implementations.
//!
//! Everything here builds explicit 2^n x 2^n matrices and multiplies them
//! out, with no shared code paths into the statevector kernels or the
//! adjoint differentiation. Tests use this module to cross-check the fast
//! implementations; nothing in the library proper calls it.

use num_complex::Complex64;

use crate::sim::{GateMatrix, GateOp, StateVector};

pub type Matrix = Vec<Vec<Complex64>>;

pub fn identity(dim: usize) -> Matrix {
    let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let dim = a.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i][k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..dim {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn matvec(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn dagger(m: &Matrix) -> Matrix {
    let dim = m.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            out[j][i] = m[i][j].conj();
        }
    }
    out
}

/// max |a_ij - b_ij| over all entries.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}

/// Embed a gate's own 2x2 or 4x4 matrix into the full 2^n-dimensional
/// space (a Kronecker product with identities on every untouched qubit).
#[allow(clippy::needless_range_loop)]
pub fn gate_unitary(gate: &GateOp, n_qubits: usize) -> Matrix {
    let dim = 1 << n_qubits;
    let mut full = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    match gate.matrix() {
        GateMatrix::One(m) => {
            let q = gate.targets[0];
            let mask = 1 << q;
            for col in 0..dim {
                let b = (col >> q) & 1;
                for (bp, row_m) in m.iter().enumerate() {
                    let row = (col & !mask) | (bp << q);
                    full[row][col] = row_m[b];
                }
            }
        }
        GateMatrix::Two(m) => {
            // Subspace index convention: 2*bit(targets[0]) + bit(targets[1]).
            let a = gate.targets[0];
            let b = gate.targets[1];
            let mask = (1 << a) | (1 << b);
            for col in 0..dim {
                let sub_col = (((col >> a) & 1) << 1) | ((col >> b) & 1);
                for sub_row in 0..4 {
                    let row = (col & !mask) | ((sub_row >> 1) << a) | ((sub_row & 1) << b);
                    full[row][col] = m[sub_row][sub_col];
                }
            }
        }
    }
    full
}

/// Product of a gate sequence as one explicit matrix (first gate applied
/// first, so the list order matches circuit order).
pub fn circuit_unitary(gates: &[GateOp], n_qubits: usize) -> Matrix {
    let mut u = identity(1 << n_qubits);
    for g in gates {
        u = matmul(&gate_unitary(g, n_qubits), &u);
    }
    u
}

/// Apply a gate by explicit full-matrix multiplication.
pub fn apply_by_matrix(state: &StateVector, gate: &GateOp) -> Vec<Complex64> {
    matvec(&gate_unitary(gate, state.n_qubits()), state.amplitudes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_single_qubit_gate_in_two_qubit_space() {
        // X on qubit 1 of a 2-qubit register maps |00⟩ -> |10⟩ (index 2).
        let u = gate_unitary(&GateOp::x(1), 2);
        let mut v = vec![Complex64::new(0.0, 0.0); 4];
        v[0] = Complex64::new(1.0, 0.0);
        let out = matvec(&u, &v);
        assert!((out[2].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cnot_unitary_permutes_expected_columns() {
        // Control qubit 0: basis 1 (|01⟩, control set) maps to basis 3.
        let u = gate_unitary(&GateOp::cnot(0, 1), 2);
        assert!((u[3][1].re - 1.0).abs() < 1e-15);
        assert!((u[1][3].re - 1.0).abs() < 1e-15);
        assert!((u[0][0].re - 1.0).abs() < 1e-15);
        assert!((u[2][2].re - 1.0).abs() < 1e-15);
    }
}
