use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Variant;
use crate::error::{Error, Result};
use crate::models::{Model, ModelKind};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamArray {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model: ModelKind,
    pub seed: u64,
    pub epochs: usize,
    pub lambda: f64,
    pub params: BTreeMap<String, ParamArray>,
    pub history: Vec<EpochMetrics>,
}

impl Checkpoint {
    pub fn capture(model: &Model, seed: u64, lambda: f64, history: &[EpochMetrics]) -> Self {
        let flat = model.flat_params();
        let mut params = BTreeMap::new();
        let mut offset = 0;
        for spec in model.layout() {
            let n = spec.len();
            params.insert(
                spec.name.clone(),
                ParamArray {
                    shape: spec.shape.clone(),
                    values: flat[offset..offset + n].to_vec(),
                },
            );
            offset += n;
        }
        Self {
            format_version: CHECKPOINT_VERSION,
            model: model.kind(),
            seed,
            epochs: history.len(),
            lambda,
            params,
            history: history.to_vec(),
        }
    }

    pub fn variant(&self) -> Variant {
        Variant::new(self.model, self.lambda)
    }

    /// Rebuilds the model, checking every array against the architecture.
    pub fn to_model(&self) -> Result<Model> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(Error::Invalid(format!(
                "checkpoint version {} is not {CHECKPOINT_VERSION}",
                self.format_version
            )));
        }
        if !(self.lambda >= 0.0) || (self.lambda != 0.0 && self.model != ModelKind::ReUp) {
            return Err(Error::Invalid(format!("lambda {} is not valid for {}", self.lambda, self.model)));
        }
        let mut model = Model::zeros(self.model)?;
        let layout = model.layout();
        if let Some(extra) = self.params.keys().find(|k| !layout.iter().any(|s| &s.name == *k)) {
            return Err(Error::Invalid(format!("unexpected parameter array {extra:?} for {}", self.model)));
        }
        let mut flat = Vec::with_capacity(model.param_count());
        for spec in &layout {
            let arr = self
                .params
                .get(&spec.name)
                .ok_or_else(|| Error::Invalid(format!("missing parameter array {:?}", spec.name)))?;
            if arr.shape != spec.shape || arr.values.len() != spec.len() {
                return Err(Error::Invalid(format!(
                    "parameter array {:?} has shape {:?} with {} values, expected {:?}",
                    spec.name,
                    arr.shape,
                    arr.values.len(),
                    spec.shape
                )));
            }
            if arr.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("parameter array {:?} is not finite", spec.name)));
            }
            flat.extend_from_slice(&arr.values);
        }
        model.set_flat_params(&flat)?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Self = serde_json::from_str(text).map_err(|e| Error::Invalid(e.to_string()))?;
        ckpt.to_model()?;
        Ok(ckpt)
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, ckpt.to_json()? + "\n")?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    Checkpoint::from_json(&std::fs::read_to_string(path)?)
}
