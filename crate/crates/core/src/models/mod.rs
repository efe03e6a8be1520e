//! Classifiers sharing one interface: forward pass with a cache, and a
//! vector-Jacobian product with respect to both the input and the parameters.

mod convnet;
mod fourier;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use convnet::{ConvCache, ConvNet, CHANNELS, CONV_OUT, KERNEL, POOLED};
pub use fourier::{FourierCache, FourierNet};

use crate::dataset::{DIM, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::lipschitz::weight_penalty;
use crate::numcore::{argmax, softmax_cross_entropy};
use crate::qsim::{AmpEncParams, CircuitShape, QuantumCache, QuantumCircuit, ReUpParams};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl ParamSpec {
    pub fn new(name: &str, shape: &[usize]) -> Self {
        Self {
            name: name.to_string(),
            shape: shape.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cotangents {
    pub input: Vec<f64>,
    pub params: Option<Vec<f64>>,
}

pub trait Classifier {
    type Cache;

    fn input_dim(&self) -> usize;
    fn num_classes(&self) -> usize;
    fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Self::Cache)>;
    /// Pull back the cotangent `cot` of the logits.
    fn backward(&self, cache: &Self::Cache, cot: &[f64]) -> Result<Cotangents>;

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.0)
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(x)?))
    }

    /// Cross-entropy loss and its gradient with respect to the input.
    fn loss_input_gradient(&self, x: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
        let (logits, cache) = self.forward(x)?;
        let loss = softmax_cross_entropy(&logits, label)?;
        let cot = self.backward(&cache, &loss.logits_grad)?;
        Ok((loss.value, cot.input))
    }
}

fn check_dim(x: &[f64], expected: usize, what: &str) -> Result<()> {
    if x.len() != expected {
        return Err(Error::domain(format!("{what} expects {expected} inputs, got {}", x.len())));
    }
    Ok(())
}

impl Classifier for ConvNet {
    type Cache = ConvCache;

    fn input_dim(&self) -> usize {
        DIM
    }

    fn num_classes(&self) -> usize {
        NUM_CLASSES
    }

    fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ConvCache)> {
        ConvNet::forward(self, x)
    }

    fn backward(&self, cache: &ConvCache, cot: &[f64]) -> Result<Cotangents> {
        ConvNet::backward(self, cache, cot)
    }
}

impl Classifier for FourierNet {
    type Cache = FourierCache;

    fn input_dim(&self) -> usize {
        FourierNet::input_dim(self)
    }

    fn num_classes(&self) -> usize {
        NUM_CLASSES
    }

    fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, FourierCache)> {
        check_dim(x, self.input_dim(), "fourier net")?;
        FourierNet::forward(self, x)
    }

    fn backward(&self, cache: &FourierCache, cot: &[f64]) -> Result<Cotangents> {
        FourierNet::backward(self, cache, cot)
    }
}

impl Classifier for ReUpParams {
    type Cache = QuantumCache;

    fn input_dim(&self) -> usize {
        self.features
    }

    fn num_classes(&self) -> usize {
        self.shape.outputs
    }

    fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, QuantumCache)> {
        self.forward_cached(x)
    }

    fn backward(&self, cache: &QuantumCache, cot: &[f64]) -> Result<Cotangents> {
        let (params, input) = QuantumCircuit::backward(self, cache, cot)?;
        Ok(Cotangents {
            input,
            params: Some(params),
        })
    }
}

impl Classifier for AmpEncParams {
    type Cache = QuantumCache;

    fn input_dim(&self) -> usize {
        AmpEncParams::input_dim(self)
    }

    fn num_classes(&self) -> usize {
        self.shape.outputs
    }

    fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, QuantumCache)> {
        self.forward_cached(x)
    }

    fn backward(&self, cache: &QuantumCache, cot: &[f64]) -> Result<Cotangents> {
        let (params, input) = QuantumCircuit::backward(self, cache, cot)?;
        Ok(Cotangents {
            input,
            params: Some(params),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    ReUp,
    AmpEnc,
    ConvNet,
    Fourier,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::ReUp, ModelKind::AmpEnc, ModelKind::ConvNet, ModelKind::Fourier];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::ReUp => "reup",
            ModelKind::AmpEnc => "ampenc",
            ModelKind::ConvNet => "convnet",
            ModelKind::Fourier => "fourier",
        }
    }

    pub fn is_quantum(self) -> bool {
        matches!(self, ModelKind::ReUp | ModelKind::AmpEnc)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    ReUp(ReUpParams),
    AmpEnc(AmpEncParams),
    ConvNet(ConvNet),
    Fourier(FourierNet),
}

#[derive(Clone, Debug)]
pub enum ModelCache {
    Quantum(QuantumCache),
    ConvNet(ConvCache),
    Fourier(FourierCache),
}

impl Model {
    /// The standard architecture of `kind` on 16×16 inputs.
    pub fn init(kind: ModelKind, rng: &mut Rng) -> Result<Self> {
        Ok(match kind {
            ModelKind::ReUp => Model::ReUp(ReUpParams::init(CircuitShape::STANDARD, DIM, rng)?),
            ModelKind::AmpEnc => Model::AmpEnc(AmpEncParams::init(CircuitShape::STANDARD, rng)?),
            ModelKind::ConvNet => Model::ConvNet(ConvNet::init(rng)),
            ModelKind::Fourier => Model::Fourier(FourierNet::init(DIM, rng)),
        })
    }

    pub fn zeros(kind: ModelKind) -> Result<Self> {
        Ok(match kind {
            ModelKind::ReUp => Model::ReUp(ReUpParams::zeros(CircuitShape::STANDARD, DIM)?),
            ModelKind::AmpEnc => Model::AmpEnc(AmpEncParams::zeros(CircuitShape::STANDARD)?),
            ModelKind::ConvNet => Model::ConvNet(ConvNet::zeros()),
            ModelKind::Fourier => Model::Fourier(FourierNet::zeros(DIM)),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::ReUp(_) => ModelKind::ReUp,
            Model::AmpEnc(_) => ModelKind::AmpEnc,
            Model::ConvNet(_) => ModelKind::ConvNet,
            Model::Fourier(_) => ModelKind::Fourier,
        }
    }

    pub fn layout(&self) -> Vec<ParamSpec> {
        match self {
            Model::ReUp(p) => vec![
                ParamSpec::new("weights", &[p.weights.len()]),
                ParamSpec::new("biases", &[p.biases.len()]),
            ],
            Model::AmpEnc(p) => vec![ParamSpec::new("biases", &[p.biases.len()])],
            Model::ConvNet(_) => ConvNet::layout(),
            Model::Fourier(n) => FourierNet::layout(n.input_dim()),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().iter().map(ParamSpec::len).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        match self {
            Model::ReUp(p) => p.weights.iter().chain(&p.biases).copied().collect(),
            Model::AmpEnc(p) => p.biases.clone(),
            Model::ConvNet(n) => n.flat_params(),
            Model::Fourier(n) => n.flat_params(),
        }
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::domain(format!(
                "{} expects {} parameters, got {}",
                self.kind(),
                self.param_count(),
                flat.len()
            )));
        }
        match self {
            Model::ReUp(p) => {
                let (w, b) = flat.split_at(p.weights.len());
                p.weights.copy_from_slice(w);
                p.biases.copy_from_slice(b);
                Ok(())
            }
            Model::AmpEnc(p) => {
                p.biases.copy_from_slice(flat);
                Ok(())
            }
            Model::ConvNet(n) => n.set_flat_params(flat),
            Model::Fourier(n) => n.set_flat_params(flat),
        }
    }

    /// Flat indices of the input-scaling weights, the parameters the
    /// Lipschitz penalty acts on.
    pub fn encoding_weights(&self) -> Option<Range<usize>> {
        match self {
            Model::ReUp(p) => Some(0..p.weights.len()),
            _ => None,
        }
    }
}

impl Classifier for Model {
    type Cache = ModelCache;

    fn input_dim(&self) -> usize {
        match self {
            Model::ReUp(p) => p.input_dim(),
            Model::AmpEnc(p) => Classifier::input_dim(p),
            Model::ConvNet(n) => Classifier::input_dim(n),
            Model::Fourier(n) => Classifier::input_dim(n),
        }
    }

    fn num_classes(&self) -> usize {
        match self {
            Model::ReUp(p) => p.num_classes(),
            Model::AmpEnc(p) => p.num_classes(),
            Model::ConvNet(n) => n.num_classes(),
            Model::Fourier(n) => n.num_classes(),
        }
    }

    fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ModelCache)> {
        Ok(match self {
            Model::ReUp(p) => {
                let (y, c) = Classifier::forward(p, x)?;
                (y, ModelCache::Quantum(c))
            }
            Model::AmpEnc(p) => {
                let (y, c) = Classifier::forward(p, x)?;
                (y, ModelCache::Quantum(c))
            }
            Model::ConvNet(n) => {
                let (y, c) = Classifier::forward(n, x)?;
                (y, ModelCache::ConvNet(c))
            }
            Model::Fourier(n) => {
                let (y, c) = Classifier::forward(n, x)?;
                (y, ModelCache::Fourier(c))
            }
        })
    }

    fn backward(&self, cache: &ModelCache, cot: &[f64]) -> Result<Cotangents> {
        if cot.len() != self.num_classes() {
            return Err(Error::domain(format!(
                "cotangent has {} entries for {} outputs",
                cot.len(),
                self.num_classes()
            )));
        }
        match (self, cache) {
            (Model::ReUp(p), ModelCache::Quantum(c)) => Classifier::backward(p, c, cot),
            (Model::AmpEnc(p), ModelCache::Quantum(c)) => Classifier::backward(p, c, cot),
            (Model::ConvNet(n), ModelCache::ConvNet(c)) => Classifier::backward(n, c, cot),
            (Model::Fourier(n), ModelCache::Fourier(c)) => Classifier::backward(n, c, cot),
            _ => Err(Error::Invalid("cache does not belong to this model".into())),
        }
    }
}

/// Gradient of the cross-entropy loss of `model` at `(x, label)` with respect to `x`.
pub fn classifier_input_gradient<C: Classifier>(model: &C, x: &[f64], label: usize) -> Result<Vec<f64>> {
    Ok(model.loss_input_gradient(x, label)?.1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamGradient {
    /// Mean cross-entropy plus the penalty.
    pub loss: f64,
    pub cross_entropy: f64,
    pub correct: usize,
    pub grads: Vec<f64>,
}

/// Mean loss gradient over a batch, plus `(λ/4) Σ w²` over the encoding
/// weights. Per-sample work runs in parallel; the reduction runs in sample order.
pub fn classifier_param_gradient(model: &Model, inputs: &[&[f64]], labels: &[usize], lambda: f64) -> Result<ParamGradient> {
    if inputs.len() != labels.len() || inputs.is_empty() {
        return Err(Error::domain(format!(
            "batch has {} inputs and {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    let per_sample: Vec<Result<(f64, bool, Vec<f64>)>> = inputs
        .par_iter()
        .zip(labels.par_iter())
        .map(|(x, &label)| {
            let (logits, cache) = model.forward(x)?;
            let loss = softmax_cross_entropy(&logits, label)?;
            let cot = model.backward(&cache, &loss.logits_grad)?;
            let params = cot.params.expect("models return parameter gradients");
            Ok((loss.value, argmax(&logits) == label, params))
        })
        .collect();

    let n = model.param_count();
    let mut grads = vec![0.0; n];
    let mut ce = 0.0;
    let mut correct = 0;
    for sample in per_sample {
        let (loss, hit, g) = sample?;
        ce += loss;
        correct += hit as usize;
        grads.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    let scale = 1.0 / inputs.len() as f64;
    grads.iter_mut().for_each(|g| *g *= scale);
    ce *= scale;

    let mut penalty = 0.0;
    if lambda != 0.0 {
        let range = model.encoding_weights().ok_or_else(|| {
            Error::Unsupported(format!("{} has no encoding weights to regularize", model.kind()))
        })?;
        let params = model.flat_params();
        let (value, grad) = weight_penalty(&params[range.clone()], lambda)?;
        penalty = value;
        grads[range].iter_mut().zip(&grad).for_each(|(g, p)| *g += p);
    }
    Ok(ParamGradient {
        loss: ce + penalty,
        cross_entropy: ce,
        correct,
        grads,
    })
}

#[cfg(test)]
mod tests;
