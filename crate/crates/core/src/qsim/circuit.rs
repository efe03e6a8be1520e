use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gates::{adjoint, apply_mat2, entangling_layer_inverse, entangling_range, rot_matrix};
use super::gates::cnot_unchecked;
use super::StateVector;
use crate::dataset::l2_normalize;
use crate::error::{ensure_finite, Error, Result};
use crate::numcore::softmax_cross_entropy;
use crate::rng::Rng;

/// Qubits, layer blocks and number of `⟨σ_Z⟩` readouts (on qubits `0..outputs`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitShape {
    pub qubits: usize,
    pub layers: usize,
    pub outputs: usize,
}

impl CircuitShape {
    /// 8 qubits, 32 blocks, 4 readouts.
    pub const STANDARD: CircuitShape = CircuitShape {
        qubits: 8,
        layers: 32,
        outputs: 4,
    };

    /// Number of rotation angles (three per gate).
    pub fn slots(&self) -> usize {
        3 * self.qubits * self.layers
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits == 0 || self.qubits > 20 {
            return Err(Error::domain(format!("{} qubits not supported", self.qubits)));
        }
        if self.outputs == 0 || self.outputs > self.qubits {
            return Err(Error::domain(format!(
                "{} readouts on {} qubits",
                self.outputs, self.qubits
            )));
        }
        Ok(())
    }
}

/// Re-upload circuit: slot `j` receives angle `weights[j] * x[j % features] + biases[j]`.
///
/// Slots are numbered block-major, then qubit, then (phi, theta, omega), so
/// with 768 slots and 256 features the flattened image is fed three times in
/// consecutive 3-tuples.
#[derive(Clone, Debug, PartialEq)]
pub struct ReUpParams {
    pub shape: CircuitShape,
    pub features: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl ReUpParams {
    pub fn new(shape: CircuitShape, features: usize, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if features == 0 {
            return Err(Error::domain("re-upload circuit needs at least one feature"));
        }
        if weights.len() != shape.slots() || biases.len() != shape.slots() {
            return Err(Error::domain(format!(
                "re-upload circuit with {} slots got {} weights and {} biases",
                shape.slots(),
                weights.len(),
                biases.len()
            )));
        }
        Ok(Self {
            shape,
            features,
            weights,
            biases,
        })
    }

    pub fn zeros(shape: CircuitShape, features: usize) -> Result<Self> {
        Self::new(shape, features, vec![0.0; shape.slots()], vec![0.0; shape.slots()])
    }

    /// Near-identity start: weights then biases from `U(-0.01, 0.01)`.
    pub fn init(shape: CircuitShape, features: usize, rng: &mut Rng) -> Result<Self> {
        let n = shape.slots();
        let weights = (0..n).map(|_| rng.uniform_range(-0.01, 0.01)).collect();
        let biases = (0..n).map(|_| rng.uniform_range(-0.01, 0.01)).collect();
        Self::new(shape, features, weights, biases)
    }

    pub fn feature_of_slot(&self, slot: usize) -> usize {
        slot % self.features
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn angles(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .enumerate()
            .map(|(j, (w, b))| w * x[j % self.features] + b)
            .collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.features {
            return Err(Error::domain(format!(
                "re-upload circuit expects {} features, got {}",
                self.features,
                x.len()
            )));
        }
        ensure_finite(x, "circuit input")
    }
}

/// Amplitude-encoding circuit: the normalized input is the initial state and
/// every angle is a free parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AmpEncParams {
    pub shape: CircuitShape,
    pub biases: Vec<f64>,
}

impl AmpEncParams {
    pub fn new(shape: CircuitShape, biases: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if biases.len() != shape.slots() {
            return Err(Error::domain(format!(
                "amplitude circuit with {} slots got {} angles",
                shape.slots(),
                biases.len()
            )));
        }
        Ok(Self { shape, biases })
    }

    pub fn zeros(shape: CircuitShape) -> Result<Self> {
        Self::new(shape, vec![0.0; shape.slots()])
    }

    pub fn init(shape: CircuitShape, rng: &mut Rng) -> Result<Self> {
        let biases = (0..shape.slots()).map(|_| rng.uniform_range(-0.01, 0.01)).collect();
        Self::new(shape, biases)
    }

    pub fn input_dim(&self) -> usize {
        1 << self.shape.qubits
    }
}

/// Final state of a forward pass plus whatever the reverse sweep needs.
#[derive(Clone, Debug)]
pub struct QuantumCache {
    state: StateVector,
    angles: Vec<f64>,
    input: Vec<f64>,
    /// `‖x‖₂` for amplitude encoding, unused otherwise.
    input_norm: f64,
}

impl QuantumCache {
    pub fn state(&self) -> &StateVector {
        &self.state
    }
}

/// Loss, logits and adjoint-mode gradients for one labelled sample.
#[derive(Clone, Debug)]
pub struct CircuitGradients {
    pub loss: f64,
    pub logits: Vec<f64>,
    /// Re-upload: weights then biases. Amplitude encoding: angles.
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

fn run_layers(amps: &mut [Complex64], shape: &CircuitShape, angles: &[f64]) {
    let q_n = shape.qubits;
    for l in 0..shape.layers {
        for q in 0..q_n {
            let a = &angles[3 * (l * q_n + q)..][..3];
            apply_mat2(amps, q, &rot_matrix(a[0], a[1], a[2]));
        }
        if let Some(r) = entangling_range(q_n, l) {
            for q in 0..q_n {
                cnot_unchecked(amps, q, (q + r) % q_n);
            }
        }
    }
}

/// Reverse sweep through one rotation. On entry `psi`/`lam` hold the state
/// and co-state after the gate; on exit, before it. Returns the derivatives of
/// `⟨M⟩` with respect to (phi, theta, omega).
fn rot_adjoint(psi: &mut [Complex64], lam: &mut [Complex64], q: usize, a: &[f64]) -> [f64; 3] {
    let bit = 1usize << q;
    let zero = Complex64::new(0.0, 0.0);
    let (mut sz, mut s01, mut s10) = (zero, zero, zero);
    for base in (0..psi.len()).step_by(bit << 1) {
        for i0 in base..base + bit {
            let i1 = i0 | bit;
            let (l0, l1) = (lam[i0].conj(), lam[i1].conj());
            sz += l0 * psi[i0] - l1 * psi[i1];
            s01 += l0 * psi[i1];
            s10 += l1 * psi[i0];
        }
    }
    let d_omega = sz.im;
    // RZ(omega) Y RZ(omega)† has off-diagonals -i e^{-i omega} and i e^{i omega}
    let e = Complex64::from_polar(1.0, a[2]);
    let i = Complex64::new(0.0, 1.0);
    let d_theta = (-i * e.conj() * s01 + i * e * s10).im;

    let inv = adjoint(&rot_matrix(a[0], a[1], a[2]));
    let [[m00, m01], [m10, m11]] = inv;
    let mut sz0 = zero;
    for base in (0..psi.len()).step_by(bit << 1) {
        for i0 in base..base + bit {
            let i1 = i0 | bit;
            let (p0, p1) = (psi[i0], psi[i1]);
            let (q0, q1) = (lam[i0], lam[i1]);
            let (np0, np1) = (m00 * p0 + m01 * p1, m10 * p0 + m11 * p1);
            let (nq0, nq1) = (m00 * q0 + m01 * q1, m10 * q0 + m11 * q1);
            psi[i0] = np0;
            psi[i1] = np1;
            lam[i0] = nq0;
            lam[i1] = nq1;
            sz0 += nq0.conj() * np0 - nq1.conj() * np1;
        }
    }
    [sz0.im, d_theta, d_omega]
}

/// Reverse sweep of the whole layer stack for observable `Σ_k cot_k Z_k`.
/// Leaves `psi` at the initial state and returns `(angle gradients, initial
/// co-state)`.
fn adjoint_sweep(
    psi: &mut [Complex64],
    shape: &CircuitShape,
    angles: &[f64],
    cot: &[f64],
) -> (Vec<f64>, Vec<Complex64>) {
    let mut lam: Vec<Complex64> = psi
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let m: f64 = cot
                .iter()
                .enumerate()
                .map(|(k, c)| if i >> k & 1 == 0 { *c } else { -*c })
                .sum();
            a * m
        })
        .collect();
    let mut grads = vec![0.0; angles.len()];
    let q_n = shape.qubits;
    for l in (0..shape.layers).rev() {
        entangling_layer_inverse(psi, q_n, l);
        entangling_layer_inverse(&mut lam, q_n, l);
        for q in (0..q_n).rev() {
            let s = 3 * (l * q_n + q);
            let g = rot_adjoint(psi, &mut lam, q, &angles[s..s + 3]);
            grads[s..s + 3].copy_from_slice(&g);
        }
    }
    (grads, lam)
}

fn check_cotangent(shape: &CircuitShape, cot: &[f64]) -> Result<()> {
    if cot.len() != shape.outputs {
        return Err(Error::domain(format!(
            "cotangent of length {} for {} outputs",
            cot.len(),
            shape.outputs
        )));
    }
    ensure_finite(cot, "cotangent")
}

pub(crate) fn reupload_forward_cached(params: &ReUpParams, x: &[f64]) -> Result<(Vec<f64>, QuantumCache)> {
    params.check_input(x)?;
    let angles = params.angles(x);
    let mut state = StateVector::zero(params.shape.qubits);
    run_layers(state.amps_mut(), &params.shape, &angles);
    let outputs = state.expectations_z(params.shape.outputs)?;
    Ok((
        outputs,
        QuantumCache {
            state,
            angles,
            input: x.to_vec(),
            input_norm: 0.0,
        },
    ))
}

/// `⟨σ_Z⟩` on the readout qubits after the re-upload circuit.
pub fn reupload_forward(params: &ReUpParams, x: &[f64]) -> Result<Vec<f64>> {
    Ok(reupload_forward_cached(params, x)?.0)
}

/// Vector-Jacobian product: returns `(parameter cotangent, input cotangent)`
/// of `Σ_k cot_k f_k`.
pub(crate) fn reupload_backward(
    params: &ReUpParams,
    cache: &QuantumCache,
    cot: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_cotangent(&params.shape, cot)?;
    let mut psi = cache.state.amplitudes().to_vec();
    let (angle_grads, _) = adjoint_sweep(&mut psi, &params.shape, &cache.angles, cot);
    let n = angle_grads.len();
    let mut param_grad = vec![0.0; 2 * n];
    let mut input_grad = vec![0.0; params.features];
    for (j, g) in angle_grads.iter().enumerate() {
        let f = j % params.features;
        param_grad[j] = g * cache.input[f];
        param_grad[n + j] = *g;
        input_grad[f] += g * params.weights[j];
    }
    Ok((param_grad, input_grad))
}

/// Real amplitudes `x / ‖x‖₂` in little-endian basis order.
pub fn amplitude_embed(x: &[f64]) -> Result<StateVector> {
    if x.is_empty() || !x.len().is_power_of_two() {
        return Err(Error::domain(format!("cannot embed {} features", x.len())));
    }
    ensure_finite(x, "amplitude input")?;
    let amps = l2_normalize(x)?
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    StateVector::from_amplitudes(amps)
}

pub(crate) fn ampenc_forward_cached(params: &AmpEncParams, x: &[f64]) -> Result<(Vec<f64>, QuantumCache)> {
    if x.len() != params.input_dim() {
        return Err(Error::domain(format!(
            "amplitude circuit expects {} features, got {}",
            params.input_dim(),
            x.len()
        )));
    }
    let mut state = amplitude_embed(x)?;
    let input_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    run_layers(state.amps_mut(), &params.shape, &params.biases);
    let outputs = state.expectations_z(params.shape.outputs)?;
    Ok((
        outputs,
        QuantumCache {
            state,
            angles: params.biases.clone(),
            input: x.to_vec(),
            input_norm,
        },
    ))
}

pub fn ampenc_forward(params: &AmpEncParams, x: &[f64]) -> Result<Vec<f64>> {
    Ok(ampenc_forward_cached(params, x)?.0)
}

/// As [`reupload_backward`]; the input cotangent is chained through the
/// normalization `x ↦ x / ‖x‖₂`.
pub(crate) fn ampenc_backward(
    params: &AmpEncParams,
    cache: &QuantumCache,
    cot: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_cotangent(&params.shape, cot)?;
    let mut psi = cache.state.amplitudes().to_vec();
    let (angle_grads, lam) = adjoint_sweep(&mut psi, &params.shape, &cache.angles, cot);
    // ⟨ψ|A|ψ⟩ with real ψ: gradient 2 Re(Aψ), and Aψ is the initial co-state
    let g: Vec<f64> = lam.iter().map(|l| 2.0 * l.re).collect();
    let norm = cache.input_norm;
    let unit: Vec<f64> = cache.input.iter().map(|v| v / norm).collect();
    let along: f64 = unit.iter().zip(&g).map(|(u, gi)| u * gi).sum();
    let input_grad = g
        .iter()
        .zip(&unit)
        .map(|(gi, u)| (gi - u * along) / norm)
        .collect();
    Ok((angle_grads, input_grad))
}

/// Either circuit family, for [`circuit_gradients`].
pub trait QuantumCircuit {
    fn forward_cached(&self, x: &[f64]) -> Result<(Vec<f64>, QuantumCache)>;
    fn backward(&self, cache: &QuantumCache, cot: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>;
}

impl QuantumCircuit for ReUpParams {
    fn forward_cached(&self, x: &[f64]) -> Result<(Vec<f64>, QuantumCache)> {
        reupload_forward_cached(self, x)
    }

    fn backward(&self, cache: &QuantumCache, cot: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        reupload_backward(self, cache, cot)
    }
}

impl QuantumCircuit for AmpEncParams {
    fn forward_cached(&self, x: &[f64]) -> Result<(Vec<f64>, QuantumCache)> {
        ampenc_forward_cached(self, x)
    }

    fn backward(&self, cache: &QuantumCache, cot: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        ampenc_backward(self, cache, cot)
    }
}

/// Softmax cross-entropy of the readouts and its gradients with respect to
/// the circuit parameters and the input, from one forward and one reverse sweep.
pub fn circuit_gradients<C: QuantumCircuit>(circuit: &C, x: &[f64], label: usize) -> Result<CircuitGradients> {
    let (logits, cache) = circuit.forward_cached(x)?;
    let loss = softmax_cross_entropy(&logits, label)?;
    let (params, input) = circuit.backward(&cache, &loss.logits_grad)?;
    Ok(CircuitGradients {
        loss: loss.value,
        logits,
        params,
        input,
    })
}
