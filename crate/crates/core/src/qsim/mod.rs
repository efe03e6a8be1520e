//! Exact statevector simulation of the two variational classifiers.
//!
//! Basis states are little-endian: qubit `q` is bit `q` of the amplitude
//! index. Both circuits apply `L` blocks of one general rotation per qubit
//! followed by a ring of CNOTs, and read out `⟨σ_Z⟩` on the first qubits.
//! Gradients are computed in adjoint mode: one forward sweep, then one
//! reverse sweep that un-computes the state while propagating the co-state.

mod circuit;
mod gates;
mod spectrum;
mod state;

pub use circuit::{
    ampenc_forward, amplitude_embed, circuit_gradients, reupload_forward, AmpEncParams,
    CircuitGradients, CircuitShape, QuantumCache, QuantumCircuit, ReUpParams,
};
pub use gates::{apply_cnot, entangling_layer, RotationGate};
pub use spectrum::{fourier_probe, reupload_feature_restriction, SpectrumEstimate};
pub use state::StateVector;
