use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{generate_dataset, load_dataset, DatasetSpec, RenderParams, Splits};
use crate::error::{Error, Result};
use crate::models::ModelKind;

/// Flat JSON experiment description; every key is optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub lambda: f64,
    pub epochs: usize,
    pub snapshot_epochs: Vec<usize>,
    pub seeds: Vec<u64>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epsilons: Vec<f64>,
    pub transfer_epsilon: f64,
    pub attack_samples: usize,
    pub attack_steps: usize,
    pub lambdas: Vec<f64>,
    pub long_epochs: usize,
    pub lipschitz_probes: usize,
    pub data_dir: Option<PathBuf>,
    pub train_count: usize,
    pub test_count: usize,
    pub dataset_seed: u64,
    pub checkpoints: Vec<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let data = DatasetSpec::default();
        Self {
            model: ModelKind::ReUp,
            lambda: 0.0,
            epochs: 20,
            snapshot_epochs: vec![20, 100],
            seeds: (0..5).collect(),
            batch_size: 50,
            learning_rate: 1e-3,
            epsilons: vec![0.05, 0.1, 0.2],
            transfer_epsilon: 0.1,
            attack_samples: 100,
            attack_steps: 50,
            lambdas: vec![0.0, 0.1, 0.2],
            long_epochs: 100,
            lipschitz_probes: 20,
            data_dir: None,
            train_count: data.train_count,
            test_count: data.test_count,
            dataset_seed: data.seed,
            checkpoints: Vec::new(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let lambda_ok = |l: f64| l.is_finite() && l >= 0.0;
        if !lambda_ok(self.lambda) || !self.lambdas.iter().all(|&l| lambda_ok(l)) {
            return Err(config_err("lambda values must be finite and non-negative"));
        }
        if self.lambda != 0.0 && self.model != ModelKind::ReUp {
            return Err(config_err(format!("lambda must be 0 for {}", self.model)));
        }
        if self.seeds.is_empty() {
            return Err(config_err("at least one seed is required"));
        }
        if self.batch_size == 0 || self.attack_samples == 0 || self.attack_steps == 0 || self.lipschitz_probes == 0 {
            return Err(config_err("batch_size, attack_samples, attack_steps and lipschitz_probes must be positive"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(config_err("learning_rate must be positive"));
        }
        let eps_ok = |e: f64| e.is_finite() && e >= 0.0;
        if !self.epsilons.iter().all(|&e| eps_ok(e)) || !eps_ok(self.transfer_epsilon) {
            return Err(config_err("attack budgets must be finite and non-negative"));
        }
        if self.long_epochs < self.epochs {
            return Err(config_err("long_epochs must be at least epochs"));
        }
        self.dataset_spec()
            .validate()
            .map_err(|e| config_err(format!("dataset: {e}")))?;
        Ok(())
    }

    pub fn dataset_spec(&self) -> DatasetSpec {
        DatasetSpec {
            train_count: self.train_count,
            test_count: self.test_count,
            seed: self.dataset_seed,
            render: RenderParams::default(),
        }
    }

    /// Splits from `data_dir/{train,test}.qads`, or generated from the spec.
    pub fn load_splits(&self) -> Result<Splits> {
        match &self.data_dir {
            Some(dir) => {
                let read = |name: &str| {
                    let path = dir.join(name);
                    load_dataset(&path).map_err(|e| match e {
                        Error::Io(io) => config_err(format!("cannot read {}: {io}", path.display())),
                        other => other,
                    })
                };
                Ok(Splits {
                    train: read("train.qads")?,
                    test: read("test.qads")?,
                })
            }
            None => generate_dataset(&self.dataset_spec()),
        }
    }

    pub fn variant(&self) -> Variant {
        Variant::new(self.model, self.lambda)
    }
}

/// A model kind with its penalty strength.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub kind: ModelKind,
    pub lambda: f64,
}

impl Variant {
    pub fn new(kind: ModelKind, lambda: f64) -> Self {
        Self { kind, lambda }
    }

    /// `reup(0.1)` for re-upload circuits, the kind name otherwise.
    pub fn name(&self) -> String {
        match self.kind {
            ModelKind::ReUp => format!("reup({:.1})", self.lambda),
            k => k.name().to_string(),
        }
    }

    /// File-name form: `reup-0.1`, `convnet`.
    pub fn slug(&self) -> String {
        match self.kind {
            ModelKind::ReUp => format!("reup-{:.1}", self.lambda),
            k => k.name().to_string(),
        }
    }
}
