use std::fmt::Write as _;

use log::warn;
use serde::{Deserialize, Serialize};

use super::Checkpoint;
use crate::attacks::{
    batch_accuracy, evaluate_accuracy, generate_adversarial_batch, AttackConfig, TransferMatrix,
};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::lipschitz::{certify, LipschitzReport};
use crate::models::{Model, ModelKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub model: String,
    pub condition: String,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub const CSV_HEADER: &'static str = "model,condition,value";

    pub fn push(&mut self, model: impl Into<String>, condition: impl Into<String>, value: f64) {
        self.rows.push(MetricsRow {
            model: model.into(),
            condition: condition.into(),
            value,
        });
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn extend(&mut self, other: MetricsTable) {
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.model, r.condition, r.value);
        }
        out
    }
}

/// A checkpoint's display name: variant, epoch and seed, e.g. `reup(0.1)@20/s0`.
pub fn checkpoint_label(ckpt: &Checkpoint) -> String {
    format!("{}@{}/s{}", ckpt.variant().name(), ckpt.epochs, ckpt.seed)
}

/// The canonical attack batch: the first `samples` test images.
pub fn attack_samples(test: &LabeledDataset, samples: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    test.take(samples).to_samples()
}

pub fn attack_config(epsilon: f64, steps: usize, samples: usize) -> AttackConfig {
    AttackConfig {
        steps,
        step_size: 2.5 * epsilon / steps as f64,
        samples,
        ..AttackConfig::pgd(epsilon)
    }
}

/// Self-attack accuracy for each budget; budget 0 is the clean accuracy.
pub fn run_attack_sweep(
    label: &str,
    model: &Model,
    inputs: &[Vec<f64>],
    labels: &[usize],
    epsilons: &[f64],
    steps: usize,
) -> Result<MetricsTable> {
    let mut table = MetricsTable::default();
    for &eps in epsilons {
        let acc = if eps == 0.0 {
            evaluate_accuracy(model, inputs, labels)?
        } else {
            let batch = generate_adversarial_batch(model, inputs, labels, &attack_config(eps, steps, inputs.len()))?;
            batch_accuracy(model, &batch)?
        };
        table.push(label, format!("eps={eps}"), acc);
    }
    Ok(table)
}

pub fn run_transfer_matrix(
    models: &[(String, &Model)],
    inputs: &[Vec<f64>],
    labels: &[usize],
    epsilon: f64,
    steps: usize,
) -> Result<TransferMatrix> {
    if models.is_empty() {
        return Err(Error::Config("transfer needs at least one checkpoint".into()));
    }
    TransferMatrix::compute(models, inputs, labels, &attack_config(epsilon, steps, inputs.len()))
}

#[derive(Clone, Debug, PartialEq)]
pub enum LipschitzRow {
    Certified(LipschitzReport),
    Skipped { model: String, epoch: usize, lambda: f64, reason: String },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LipschitzTable {
    pub rows: Vec<LipschitzRow>,
}

impl LipschitzTable {
    pub fn reports(&self) -> impl Iterator<Item = &LipschitzReport> {
        self.rows.iter().filter_map(|r| match r {
            LipschitzRow::Certified(rep) => Some(rep),
            LipschitzRow::Skipped { .. } => None,
        })
    }

    /// Skipped rows carry the method `unsupported` and empty bounds.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", LipschitzReport::CSV_HEADER);
        for r in &self.rows {
            match r {
                LipschitzRow::Certified(rep) => {
                    out.push_str(&rep.csv_row());
                    out.push('\n');
                }
                LipschitzRow::Skipped { model, epoch, lambda, .. } => {
                    let _ = writeln!(out, "{model},unsupported,,,{epoch},{lambda}");
                }
            }
        }
        out
    }
}

/// One report per checkpoint, probed on `probes`; amplitude-encoding
/// checkpoints yield a skipped row.
pub fn run_lipschitz_table(checkpoints: &[Checkpoint], probes: &[Vec<f64>]) -> Result<LipschitzTable> {
    let probe_refs: Vec<&[f64]> = probes.iter().map(Vec::as_slice).collect();
    let mut table = LipschitzTable::default();
    for ckpt in checkpoints {
        let model = ckpt.to_model()?;
        let name = ckpt.variant().name();
        match certify(&model, &probe_refs) {
            Ok(mut rep) => {
                rep.model = name;
                rep.epoch = ckpt.epochs;
                rep.lambda = ckpt.lambda;
                table.rows.push(LipschitzRow::Certified(rep));
            }
            Err(Error::Unsupported(reason)) => {
                warn!("skipping {name}: {reason}");
                table.rows.push(LipschitzRow::Skipped {
                    model: name,
                    epoch: ckpt.epochs,
                    lambda: ckpt.lambda,
                    reason,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationRow {
    pub seed: u64,
    pub lambda: f64,
    pub epoch: usize,
    pub lipschitz: f64,
    pub self_accuracy: f64,
    /// Mean accuracy of the reference models on batches crafted against this one.
    pub transfer_out: f64,
    /// Mean accuracy of this model on batches crafted against the references.
    pub transfer_in: f64,
}

impl RegularizationRow {
    pub const CSV_HEADER: &'static str = "seed,lambda,epoch,lipschitz,self_accuracy,transfer_out,transfer_in";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.seed, self.lambda, self.epoch, self.lipschitz, self.self_accuracy, self.transfer_out, self.transfer_in
        )
    }
}

/// Lipschitz bound next to transfer accuracies for every regularized
/// re-upload checkpoint, against a fixed set of reference models.
pub fn run_regularization_report(
    reup: &[Checkpoint],
    references: &[(String, &Model)],
    inputs: &[Vec<f64>],
    labels: &[usize],
    epsilon: f64,
    steps: usize,
) -> Result<Vec<RegularizationRow>> {
    let cfg = attack_config(epsilon, steps, inputs.len());
    let mut incoming = Vec::with_capacity(references.len());
    for (_, r) in references {
        incoming.push(generate_adversarial_batch(*r, inputs, labels, &cfg)?);
    }
    let mut rows = Vec::new();
    for ckpt in reup {
        if ckpt.model != ModelKind::ReUp {
            return Err(Error::Config(format!("{} is not a re-upload checkpoint", checkpoint_label(ckpt))));
        }
        let model = ckpt.to_model()?;
        let Model::ReUp(params) = &model else { unreachable!() };
        let lipschitz = crate::lipschitz::quantum_lipschitz(params)?[0];
        let own = generate_adversarial_batch(&model, inputs, labels, &cfg)?;
        let self_accuracy = batch_accuracy(&model, &own)?;
        let mean = |v: Vec<f64>| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
        let transfer_out = mean(
            references
                .iter()
                .map(|(_, r)| batch_accuracy(*r, &own))
                .collect::<Result<Vec<_>>>()?,
        );
        let transfer_in = mean(
            incoming
                .iter()
                .map(|b| batch_accuracy(&model, b))
                .collect::<Result<Vec<_>>>()?,
        );
        rows.push(RegularizationRow {
            seed: ckpt.seed,
            lambda: ckpt.lambda,
            epoch: ckpt.epochs,
            lipschitz,
            self_accuracy,
            transfer_out,
            transfer_in,
        });
    }
    Ok(rows)
}
