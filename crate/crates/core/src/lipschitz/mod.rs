//! Lipschitz certificates on the logit/expectation map, the encoding-weight
//! regularizer, and empirical lower bounds from input Jacobians.

mod empirical;
mod sdp;
mod spectral;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use empirical::{empirical_lipschitz_lower_bound, empirical_per_output_lower_bound, input_jacobian};
pub use sdp::{fourier_certificate, one_layer_sdp, SdpCertificate, SlopeRestriction};
pub use spectral::{conv_to_toeplitz, spectral_norm, spectral_norm_dense, POWER_MAX_ITER, POWER_TOL};

use crate::error::{ensure_finite, Error, Result};
use crate::models::{ConvNet, FourierNet, Model};
use crate::qsim::{AmpEncParams, ReUpParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    QuantumClosedForm,
    SdpLayer,
    SpectralProduct,
}

impl BoundMethod {
    pub fn tag(self) -> &'static str {
        match self {
            BoundMethod::QuantumClosedForm => "quantum-closed-form",
            BoundMethod::SdpLayer => "sdp-layer",
            BoundMethod::SpectralProduct => "spectral-product",
        }
    }
}

impl fmt::Display for BoundMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub model: String,
    pub method: BoundMethod,
    pub upper: f64,
    pub lower: f64,
    /// Quantum models: the bound of each output, and the ℓ₂ combination of all of them.
    pub per_output: Option<Vec<f64>>,
    pub combined: Option<f64>,
    pub epoch: usize,
    pub lambda: f64,
}

impl LipschitzReport {
    pub const CSV_HEADER: &'static str = "model,method,upper,lower,epoch,lambda";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.model, self.method, self.upper, self.lower, self.epoch, self.lambda
        )
    }

    pub fn is_sandwiched(&self) -> bool {
        self.lower <= self.upper
    }
}

/// `Σ_j |w_j|`, the same for every output; one entry per output.
pub fn quantum_lipschitz(params: &ReUpParams) -> Result<Vec<f64>> {
    ensure_finite(&params.weights, "encoding weights")?;
    // 2‖M‖ Σ |w_j| ‖H_j‖ with ‖M‖ = 1 and ‖H_j‖ = 1/2
    let bound = 2.0 * 1.0 * params.weights.iter().map(|w| w.abs() * 0.5).sum::<f64>();
    Ok(vec![bound; params.shape.outputs])
}

pub fn ampenc_lipschitz(_params: &AmpEncParams) -> Result<Vec<f64>> {
    Err(Error::Unsupported(
        "no certified bound for amplitude-encoding circuits".into(),
    ))
}

/// `(λ/4) Σ w²` and its gradient `(λ/2) w`.
pub fn weight_penalty(weights: &[f64], lambda: f64) -> Result<(f64, Vec<f64>)> {
    if !(lambda >= 0.0) {
        return Err(Error::domain(format!("penalty strength must be non-negative, got {lambda}")));
    }
    let value = 0.25 * lambda * weights.iter().map(|w| w * w).sum::<f64>();
    Ok((value, weights.iter().map(|w| 0.5 * lambda * w).collect()))
}

pub fn lipschitz_penalty(params: &ReUpParams, lambda: f64) -> Result<(f64, Vec<f64>)> {
    weight_penalty(&params.weights, lambda)
}

/// `‖Toeplitz(conv)‖₂ · ‖W_lin‖₂`; ReLU and the non-overlapping pool are 1-Lipschitz.
pub fn convnet_bound(net: &ConvNet) -> Result<f64> {
    let t = conv_to_toeplitz(&net.conv_weight, &[1, 16, 16])?;
    Ok(spectral_norm(&t)? * spectral_norm(&net.linear_weight)?)
}

pub fn fourier_bound(net: &FourierNet) -> Result<f64> {
    Ok(fourier_certificate(net)?.bound)
}

pub fn l2_to_linf(l: f64, dim: usize) -> f64 {
    (dim as f64).sqrt() * l
}

/// Certified bound and empirical lower bound over `probes`. Quantum bounds
/// hold per output, so their lower bound is per output too.
pub fn certify(model: &Model, probes: &[&[f64]]) -> Result<LipschitzReport> {
    let (method, upper, per_output, lower) = match model {
        Model::ReUp(p) => {
            let per = quantum_lipschitz(p)?;
            let lower = empirical_per_output_lower_bound(model, probes)?;
            (BoundMethod::QuantumClosedForm, per[0], Some(per), lower)
        }
        Model::AmpEnc(p) => {
            let per = ampenc_lipschitz(p)?;
            (BoundMethod::QuantumClosedForm, per[0], Some(per), 0.0)
        }
        Model::ConvNet(n) => (
            BoundMethod::SpectralProduct,
            convnet_bound(n)?,
            None,
            empirical_lipschitz_lower_bound(model, probes)?,
        ),
        Model::Fourier(n) => (
            BoundMethod::SdpLayer,
            fourier_bound(n)?,
            None,
            empirical_lipschitz_lower_bound(model, probes)?,
        ),
    };
    let combined = per_output
        .as_ref()
        .map(|v| v.iter().map(|b| b * b).sum::<f64>().sqrt());
    Ok(LipschitzReport {
        model: model.kind().to_string(),
        method,
        upper,
        lower,
        per_output,
        combined,
        epoch: 0,
        lambda: 0.0,
    })
}
