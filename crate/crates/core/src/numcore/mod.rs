//! Dense numerics shared by every model: a row-major [`Tensor`], layer kernels
//! with hand-written backward maps, the Adam optimizer, softmax cross-entropy
//! and a central finite-difference gradient oracle.

mod adam;
mod fd;
pub mod layers;
mod loss;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use fd::{central_difference_noise, finite_difference_gradient, max_relative_error};
pub use loss::{softmax, softmax_cross_entropy, LossValue};
pub use tensor::Tensor;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
