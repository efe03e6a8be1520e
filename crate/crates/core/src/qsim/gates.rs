use num_complex::Complex64;

use super::StateVector;
use crate::error::{Error, Result};

pub(crate) type Mat2 = [[Complex64; 2]; 2];

/// General single-qubit rotation `RZ(omega) · RY(theta) · RZ(phi)`: `phi` acts
/// first. Each factor is `exp(-i angle H)` with `H = σ_Z/2` or `σ_Y/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationGate {
    pub qubit: usize,
    pub phi: f64,
    pub theta: f64,
    pub omega: f64,
}

impl RotationGate {
    pub fn new(qubit: usize, phi: f64, theta: f64, omega: f64) -> Self {
        Self {
            qubit,
            phi,
            theta,
            omega,
        }
    }

    pub fn matrix(&self) -> Mat2 {
        rot_matrix(self.phi, self.theta, self.omega)
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        state.check_qubit(self.qubit)?;
        apply_mat2(state.amps_mut(), self.qubit, &self.matrix());
        Ok(())
    }
}

pub(crate) fn rot_matrix(phi: f64, theta: f64, omega: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let sum = Complex64::from_polar(1.0, -(phi + omega) / 2.0);
    let diff = Complex64::from_polar(1.0, (phi - omega) / 2.0);
    [
        [sum * c, -diff * s],
        [diff.conj() * s, sum.conj() * c],
    ]
}

pub(crate) fn adjoint(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

#[inline]
pub(crate) fn apply_mat2(amps: &mut [Complex64], q: usize, m: &Mat2) {
    let bit = 1usize << q;
    let [[m00, m01], [m10, m11]] = *m;
    for base in (0..amps.len()).step_by(bit << 1) {
        let (lo, hi) = amps[base..base + (bit << 1)].split_at_mut(bit);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x0, x1) = (*a0, *a1);
            *a0 = m00 * x0 + m01 * x1;
            *a1 = m10 * x0 + m11 * x1;
        }
    }
}

#[inline]
pub(crate) fn cnot_unchecked(amps: &mut [Complex64], control: usize, target: usize) {
    let (cb, tb) = (1usize << control, 1usize << target);
    for i in 0..amps.len() {
        // visit each swapped pair once, from its target-0 member
        if i & cb != 0 && i & tb == 0 {
            amps.swap(i, i | tb);
        }
    }
}

pub fn apply_cnot(state: &mut StateVector, control: usize, target: usize) -> Result<()> {
    state.check_qubit(control)?;
    state.check_qubit(target)?;
    if control == target {
        return Err(Error::domain(format!("CNOT control and target are both {control}")));
    }
    cnot_unchecked(state.amps_mut(), control, target);
    Ok(())
}

/// Ring range of entangling layer `layer` on `n` qubits: `(layer mod (n-1)) + 1`.
pub(crate) fn entangling_range(n_qubits: usize, layer: usize) -> Option<usize> {
    (n_qubits > 1).then(|| layer % (n_qubits - 1) + 1)
}

/// CNOT(q → (q + r) mod n) for q = 0..n in ascending order; a single qubit has
/// no entangler.
pub fn entangling_layer(state: &mut StateVector, layer: usize) -> Result<()> {
    let n = state.n_qubits();
    if let Some(r) = entangling_range(n, layer) {
        for q in 0..n {
            cnot_unchecked(state.amps_mut(), q, (q + r) % n);
        }
    }
    Ok(())
}

pub(crate) fn entangling_layer_inverse(amps: &mut [Complex64], n_qubits: usize, layer: usize) {
    if let Some(r) = entangling_range(n_qubits, layer) {
        for q in (0..n_qubits).rev() {
            cnot_unchecked(amps, q, (q + r) % n_qubits);
        }
    }
}
