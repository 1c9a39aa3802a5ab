//! Dense statevector simulation of small qubit registers.
//!
//! The register holds all 2^n complex amplitudes. Qubit `0` is the
//! least-significant bit of a basis-state index, so |q1 q0⟩ = |01⟩ is
//! stored at index 1. Gates are applied in place with specialized
//! kernels; a two-qubit gate never copies the full vector.

use num_complex::Complex64;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

/// Largest register the library will allocate (2^24 amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;

/// Process-wide count of gate applications, used by complexity tests.
static APPLY_COUNT: AtomicU64 = AtomicU64::new(0);

/// Number of `StateVector::apply` calls since process start.
pub fn applied_gate_count() -> u64 {
    APPLY_COUNT.load(Ordering::Relaxed)
}

/// The gate set: fixed Paulis/H/CNOT/CZ plus the parameterized rotations
/// used by the encoder and ansatz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    Cnot,
    Cz,
    Rx,
    Ry,
    Rz,
    Rzz,
}

impl GateKind {
    pub fn is_parameterized(self) -> bool {
        matches!(
            self,
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Rzz
        )
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz | GateKind::Rzz => 2,
            _ => 1,
        }
    }
}

/// A single gate instance: kind, target qubits, and (for rotations) an angle
/// in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: [usize; 2],
    pub angle: f64,
}

/// 2x2 or 4x4 unitary realization of a gate.
///
/// For two-qubit gates the row/column index is `2*bit(targets[0]) +
/// bit(targets[1])`, which matches the textbook CNOT matrix with
/// `targets[0]` as the control.
pub enum GateMatrix {
    One([[Complex64; 2]; 2]),
    Two([[Complex64; 4]; 4]),
}

impl GateOp {
    pub fn x(q: usize) -> Self {
        Self {
            kind: GateKind::X,
            targets: [q, 0],
            angle: 0.0,
        }
    }
    pub fn y(q: usize) -> Self {
        Self {
            kind: GateKind::Y,
            targets: [q, 0],
            angle: 0.0,
        }
    }
    pub fn z(q: usize) -> Self {
        Self {
            kind: GateKind::Z,
            targets: [q, 0],
            angle: 0.0,
        }
    }
    pub fn h(q: usize) -> Self {
        Self {
            kind: GateKind::H,
            targets: [q, 0],
            angle: 0.0,
        }
    }
    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            targets: [control, target],
            angle: 0.0,
        }
    }
    pub fn cz(a: usize, b: usize) -> Self {
        Self {
            kind: GateKind::Cz,
            targets: [a, b],
            angle: 0.0,
        }
    }
    pub fn rx(q: usize, angle: f64) -> Self {
        Self {
            kind: GateKind::Rx,
            targets: [q, 0],
            angle,
        }
    }
    pub fn ry(q: usize, angle: f64) -> Self {
        Self {
            kind: GateKind::Ry,
            targets: [q, 0],
            angle,
        }
    }
    pub fn rz(q: usize, angle: f64) -> Self {
        Self {
            kind: GateKind::Rz,
            targets: [q, 0],
            angle,
        }
    }
    pub fn rzz(a: usize, b: usize, angle: f64) -> Self {
        Self {
            kind: GateKind::Rzz,
            targets: [a, b],
            angle,
        }
    }

    /// The explicit matrix of this gate, independent of the statevector
    /// kernels. Tests check unitarity and kernel equivalence against it.
    pub fn matrix(&self) -> GateMatrix {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        match self.kind {
            GateKind::X => GateMatrix::One([[zero, one], [one, zero]]),
            GateKind::Y => GateMatrix::One([
                [zero, Complex64::new(0.0, -1.0)],
                [Complex64::new(0.0, 1.0), zero],
            ]),
            GateKind::Z => GateMatrix::One([[one, zero], [zero, -one]]),
            GateKind::H => {
                let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                GateMatrix::One([[s, s], [s, -s]])
            }
            GateKind::Rx => {
                let c = Complex64::new((self.angle / 2.0).cos(), 0.0);
                let s = Complex64::new(0.0, -(self.angle / 2.0).sin());
                GateMatrix::One([[c, s], [s, c]])
            }
            GateKind::Ry => {
                let c = Complex64::new((self.angle / 2.0).cos(), 0.0);
                let s = (self.angle / 2.0).sin();
                GateMatrix::One([[c, Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), c]])
            }
            GateKind::Rz => {
                let p = Complex64::from_polar(1.0, -self.angle / 2.0);
                let q = Complex64::from_polar(1.0, self.angle / 2.0);
                GateMatrix::One([[p, zero], [zero, q]])
            }
            GateKind::Cnot => GateMatrix::Two([
                [one, zero, zero, zero],
                [zero, one, zero, zero],
                [zero, zero, zero, one],
                [zero, zero, one, zero],
            ]),
            GateKind::Cz => GateMatrix::Two([
                [one, zero, zero, zero],
                [zero, one, zero, zero],
                [zero, zero, one, zero],
                [zero, zero, zero, -one],
            ]),
            GateKind::Rzz => {
                // exp(-i angle/2 Z⊗Z): phase -angle/2 where the bits agree.
                let eq = Complex64::from_polar(1.0, -self.angle / 2.0);
                let ne = Complex64::from_polar(1.0, self.angle / 2.0);
                GateMatrix::Two([
                    [eq, zero, zero, zero],
                    [zero, ne, zero, zero],
                    [zero, zero, ne, zero],
                    [zero, zero, zero, eq],
                ])
            }
        }
    }

    /// Same gate with the rotation angle negated (the inverse for every
    /// parameterized gate; self-inverse kinds are returned unchanged).
    pub fn dagger(&self) -> GateOp {
        let mut g = *self;
        if self.kind.is_parameterized() {
            g.angle = -self.angle;
        }
        g
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let arity = self.kind.arity();
        for &t in &self.targets[..arity] {
            if t >= n_qubits {
                return Err(Error::InvalidArgument(format!(
                    "gate {:?} targets qubit {} but the register has {} qubits",
                    self.kind, t, n_qubits
                )));
            }
        }
        if arity == 2 && self.targets[0] == self.targets[1] {
            return Err(Error::InvalidArgument(format!(
                "gate {:?} requires two distinct qubits, got {} twice",
                self.kind, self.targets[0]
            )));
        }
        Ok(())
    }
}

/// Full state of an n-qubit register: 2^n complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros computational basis state |0...0⟩.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "qubit count {} outside supported range 1..={}",
                n_qubits, MAX_QUBITS
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Build a state from explicit amplitudes. The length must be a power
    /// of two and the norm must already be 1 within 1e-9.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector length {} is not a power of two",
                amps.len()
            )));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "qubit count {} outside supported range 1..={}",
                n_qubits, MAX_QUBITS
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "state norm^2 is {norm}, expected 1 within 1e-9"
            )));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Scratch access for the adjoint sweep, which stores an unnormalized
    /// co-state in a `StateVector`. Not part of the public surface.
    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Sum of |amplitude|^2 over the register; 1 for any valid state.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩ with the conjugate on `self`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Apply a gate in place.
    pub fn apply(&mut self, gate: &GateOp) -> Result<()> {
        gate.validate(self.n_qubits)?;
        APPLY_COUNT.fetch_add(1, Ordering::Relaxed);
        match gate.kind {
            GateKind::X => self.kernel_x(gate.targets[0]),
            GateKind::Y => self.kernel_y(gate.targets[0]),
            GateKind::Z => self.kernel_phase_flip(gate.targets[0]),
            GateKind::H => self.kernel_h(gate.targets[0]),
            GateKind::Rx => {
                let c = Complex64::new((gate.angle / 2.0).cos(), 0.0);
                let s = Complex64::new(0.0, -(gate.angle / 2.0).sin());
                self.kernel_one(gate.targets[0], c, s, s, c);
            }
            GateKind::Ry => {
                let c = Complex64::new((gate.angle / 2.0).cos(), 0.0);
                let s = (gate.angle / 2.0).sin();
                self.kernel_one(
                    gate.targets[0],
                    c,
                    Complex64::new(-s, 0.0),
                    Complex64::new(s, 0.0),
                    c,
                );
            }
            GateKind::Rz => self.kernel_rz(gate.targets[0], gate.angle),
            GateKind::Rzz => self.kernel_rzz(gate.targets[0], gate.targets[1], gate.angle),
            GateKind::Cnot => self.kernel_cnot(gate.targets[0], gate.targets[1]),
            GateKind::Cz => self.kernel_cz(gate.targets[0], gate.targets[1]),
        }
        Ok(())
    }

    /// ⟨Z_i⟩ for every qubit: +1 weight where bit i is 0, -1 where it is 1.
    pub fn z_expectations(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_qubits];
        for (idx, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (q, e) in out.iter_mut().enumerate() {
                if (idx >> q) & 1 == 0 {
                    *e += p;
                } else {
                    *e -= p;
                }
            }
        }
        out
    }

    /// General 2x2 kernel over the target bit pair.
    fn kernel_one(
        &mut self,
        target: usize,
        u00: Complex64,
        u01: Complex64,
        u10: Complex64,
        u11: Complex64,
    ) {
        let step = 1 << target;
        for base in (0..self.amps.len()).step_by(2 * step) {
            for offset in 0..step {
                let i = base + offset;
                let j = i | step;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = u00 * a + u01 * b;
                self.amps[j] = u10 * a + u11 * b;
            }
        }
    }

    fn kernel_x(&mut self, target: usize) {
        let step = 1 << target;
        for base in (0..self.amps.len()).step_by(2 * step) {
            for offset in 0..step {
                self.amps.swap(base + offset, base + offset + step);
            }
        }
    }

    fn kernel_y(&mut self, target: usize) {
        let step = 1 << target;
        let i_pos = Complex64::new(0.0, 1.0);
        let i_neg = Complex64::new(0.0, -1.0);
        for base in (0..self.amps.len()).step_by(2 * step) {
            for offset in 0..step {
                let i = base + offset;
                let j = i | step;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = i_neg * b;
                self.amps[j] = i_pos * a;
            }
        }
    }

    fn kernel_phase_flip(&mut self, target: usize) {
        let step = 1 << target;
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            if idx & step != 0 {
                *amp = -*amp;
            }
        }
    }

    fn kernel_h(&mut self, target: usize) {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.kernel_one(target, s, s, s, -s);
    }

    fn kernel_rz(&mut self, target: usize, angle: f64) {
        let p0 = Complex64::from_polar(1.0, -angle / 2.0);
        let p1 = Complex64::from_polar(1.0, angle / 2.0);
        let step = 1 << target;
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            *amp *= if idx & step == 0 { p0 } else { p1 };
        }
    }

    fn kernel_rzz(&mut self, a: usize, b: usize, angle: f64) {
        let eq = Complex64::from_polar(1.0, -angle / 2.0);
        let ne = Complex64::from_polar(1.0, angle / 2.0);
        let mask_a = 1 << a;
        let mask_b = 1 << b;
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            let same = ((idx & mask_a != 0) == (idx & mask_b != 0)) as usize;
            *amp *= if same == 1 { eq } else { ne };
        }
    }

    fn kernel_cnot(&mut self, control: usize, target: usize) {
        let cmask = 1 << control;
        let tmask = 1 << target;
        for idx in 0..self.amps.len() {
            // Visit each swapped pair once via the target=0 member.
            if idx & cmask != 0 && idx & tmask == 0 {
                self.amps.swap(idx, idx | tmask);
            }
        }
    }

    fn kernel_cz(&mut self, a: usize, b: usize) {
        let mask = (1 << a) | (1 << b);
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            if idx & mask == mask {
                *amp = -*amp;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn amp(s: &StateVector, idx: usize) -> Complex64 {
        s.amplitudes()[idx]
    }

    #[test]
    fn zero_state_is_basis_zero() {
        let s = StateVector::zero(1).unwrap();
        assert_eq!(
            s.amplitudes(),
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
        );
        let s = StateVector::zero(2).unwrap();
        assert_eq!(amp(&s, 0), Complex64::new(1.0, 0.0));
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm_sqr() == 0.0));
    }

    #[test]
    fn zero_state_rejects_out_of_range_counts() {
        let err = StateVector::zero(25).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("24"));
        assert!(StateVector::zero(0).is_err());
        assert!(StateVector::zero(24).is_ok());
    }

    #[test]
    fn rx_zero_is_identity() {
        let mut s = StateVector::zero(2).unwrap();
        s.apply(&GateOp::h(0)).unwrap();
        let before = s.clone();
        s.apply(&GateOp::rx(0, 0.0)).unwrap();
        for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn rx_pi_on_zero_gives_minus_i_one() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply(&GateOp::rx(0, std::f64::consts::PI)).unwrap();
        assert_abs_diff_eq!(amp(&s, 0).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(amp(&s, 1).re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(amp(&s, 1).im, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        // |q1 q0⟩ = |01⟩ i.e. control qubit 0 in |1⟩, target qubit 1 in |0⟩.
        let mut s = StateVector::zero(2).unwrap();
        s.apply(&GateOp::x(0)).unwrap();
        s.apply(&GateOp::cnot(0, 1)).unwrap();
        assert_abs_diff_eq!(amp(&s, 3).re, 1.0, epsilon = 1e-12);
        // Control clear: no flip.
        let mut s = StateVector::zero(2).unwrap();
        s.apply(&GateOp::cnot(0, 1)).unwrap();
        assert_abs_diff_eq!(amp(&s, 0).re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rzz_phases_zero_zero_by_half_angle() {
        let delta = 0.7713;
        let mut s = StateVector::zero(2).unwrap();
        s.apply(&GateOp::rzz(0, 1, delta)).unwrap();
        let expect = Complex64::from_polar(1.0, -delta / 2.0);
        assert_abs_diff_eq!(amp(&s, 0).re, expect.re, epsilon = 1e-12);
        assert_abs_diff_eq!(amp(&s, 0).im, expect.im, epsilon = 1e-12);
        // Differing bits pick up the opposite phase.
        let mut s = StateVector::zero(2).unwrap();
        s.apply(&GateOp::x(0)).unwrap();
        s.apply(&GateOp::rzz(0, 1, delta)).unwrap();
        let expect = Complex64::from_polar(1.0, delta / 2.0);
        assert_abs_diff_eq!(amp(&s, 1).re, expect.re, epsilon = 1e-12);
        assert_abs_diff_eq!(amp(&s, 1).im, expect.im, epsilon = 1e-12);
    }

    #[test]
    fn z_expectations_on_basis_states() {
        let s = StateVector::zero(3).unwrap();
        assert_eq!(s.z_expectations(), vec![1.0, 1.0, 1.0]);

        let mut s = StateVector::zero(3).unwrap();
        s.apply(&GateOp::x(1)).unwrap();
        let e = s.z_expectations();
        assert_abs_diff_eq!(e[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn z_expectations_vanish_on_uniform_superposition() {
        let mut s = StateVector::zero(4).unwrap();
        for q in 0..4 {
            s.apply(&GateOp::h(q)).unwrap();
        }
        for e in s.z_expectations() {
            assert_abs_diff_eq!(e, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn gate_index_out_of_range_is_rejected() {
        let mut s = StateVector::zero(2).unwrap();
        assert!(matches!(
            s.apply(&GateOp::x(2)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            s.apply(&GateOp::cnot(1, 1)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn cz_flips_phase_only_on_one_one() {
        // CZ flips the phase only on |11⟩.
        let mut s = StateVector::zero(2).unwrap();
        s.apply(&GateOp::x(0)).unwrap();
        s.apply(&GateOp::x(1)).unwrap();
        s.apply(&GateOp::cz(0, 1)).unwrap();
        assert_abs_diff_eq!(amp(&s, 3).re, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn hadamard_creates_equal_superposition() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply(&GateOp::h(0)).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(amp(&s, 0).re, r, epsilon = 1e-12);
        assert_abs_diff_eq!(amp(&s, 1).re, r, epsilon = 1e-12);
    }
}
