//! Comparative adversarial-robustness laboratory for simulated quantum and
//! classical image classifiers.
//!
//! The crate is organised bottom-up:
//!
//! - [`dataset`]: synthetic bar-shape images, the `QADS` file format and IDX ingestion.
//! - [`numcore`]: dense tensors, layer kernels with explicit backward maps, Adam,
//!   softmax cross-entropy and a finite-difference gradient oracle.
//! - [`qsim`]: an exact statevector simulator for the re-upload and
//!   amplitude-encoding circuits, with adjoint-mode gradients and a Fourier
//!   spectrum probe.
//! - [`models`]: the uniform [`Classifier`](models::Classifier) interface and the
//!   ConvNet / Fourier network.
//! - [`attacks`]: PGD, accuracy under attack, transfer matrices and δ heatmaps.
//! - [`lipschitz`]: certified upper bounds, the training regularizer and
//!   empirical lower bounds.
//! - [`experiment`]: configs, checkpoints, training loops and report tables.

pub mod attacks;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod lipschitz;
pub mod models;
pub mod numcore;
pub mod qsim;
pub mod rng;

pub use error::{Error, Result};
pub use models::{Classifier, Model, ModelKind};
