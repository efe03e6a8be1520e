use log::info;

use super::{Checkpoint, EpochMetrics, ExperimentConfig, Variant};
use crate::attacks::evaluate_accuracy;
use crate::dataset::Splits;
use crate::error::{Error, Result};
use crate::models::{classifier_param_gradient, Classifier, Model};
use crate::numcore::{softmax_cross_entropy, AdamConfig, AdamState};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSettings {
    pub variant: Variant,
    pub seed: u64,
    pub epochs: usize,
    pub snapshot_epochs: Vec<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl TrainSettings {
    pub fn from_config(cfg: &ExperimentConfig, seed: u64) -> Self {
        Self {
            variant: cfg.variant(),
            seed,
            epochs: cfg.epochs,
            snapshot_epochs: cfg.snapshot_epochs.clone(),
            batch_size: cfg.batch_size,
            learning_rate: cfg.learning_rate,
        }
    }
}

/// Mean cross-entropy and accuracy over a split.
pub fn evaluate_split<C: Classifier + Sync>(model: &C, inputs: &[Vec<f64>], labels: &[usize]) -> Result<(f64, f64)> {
    use rayon::prelude::*;
    let losses = inputs
        .par_iter()
        .zip(labels)
        .map(|(x, &l)| Ok(softmax_cross_entropy(&model.logits(x)?, l)?.value))
        .collect::<Result<Vec<f64>>>()?;
    let loss = losses.iter().sum::<f64>() / losses.len() as f64;
    Ok((loss, evaluate_accuracy(model, inputs, labels)?))
}

/// Trains one model. Returns a checkpoint for every snapshot epoch within
/// the run and for the final epoch, in epoch order.
pub fn train_variant(settings: &TrainSettings, data: &Splits) -> Result<Vec<Checkpoint>> {
    let variant = settings.variant;
    if data.train.is_empty() || data.test.is_empty() {
        return Err(Error::Config("training needs nonempty train and test splits".into()));
    }
    let mut rng = Rng::new(settings.seed);
    let mut model = Model::init(variant.kind, &mut rng)?;
    let mut order_rng = rng.fork();
    let (train_x, train_y) = data.train.to_samples();
    let (test_x, test_y) = data.test.to_samples();

    let mut adam = AdamState::new(
        model.param_count(),
        AdamConfig {
            lr: settings.learning_rate,
            ..AdamConfig::default()
        },
    );
    let mut params = model.flat_params();
    let mut history = Vec::with_capacity(settings.epochs);
    let mut out = Vec::new();
    if settings.epochs == 0 {
        out.push(Checkpoint::capture(&model, settings.seed, variant.lambda, &history));
        return Ok(out);
    }
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    for epoch in 1..=settings.epochs {
        order_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for batch in order.chunks(settings.batch_size) {
            let inputs: Vec<&[f64]> = batch.iter().map(|&i| train_x[i].as_slice()).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| train_y[i]).collect();
            let g = classifier_param_gradient(&model, &inputs, &labels, variant.lambda)?;
            if !g.loss.is_finite() {
                return Err(Error::numeric(format!("non-finite loss in epoch {epoch}")));
            }
            loss_sum += g.loss * batch.len() as f64;
            correct += g.correct;
            adam.step(&mut params, &g.grads)?;
            model.set_flat_params(&params)?;
        }
        let (val_loss, val_accuracy) = evaluate_split(&model, &test_x, &test_y)?;
        let m = EpochMetrics {
            epoch,
            train_loss: loss_sum / train_x.len() as f64,
            train_accuracy: correct as f64 / train_x.len() as f64,
            val_loss,
            val_accuracy,
        };
        info!(
            "{} seed {} epoch {epoch}: loss {:.4} acc {:.3} val {:.3}",
            variant.name(),
            settings.seed,
            m.train_loss,
            m.train_accuracy,
            m.val_accuracy
        );
        history.push(m);
        if epoch == settings.epochs || settings.snapshot_epochs.contains(&epoch) {
            out.push(Checkpoint::capture(&model, settings.seed, variant.lambda, &history));
        }
    }
    Ok(out)
}

/// `train_variant` for every configured seed.
pub fn run_train(cfg: &ExperimentConfig, data: &Splits) -> Result<Vec<Checkpoint>> {
    cfg.validate()?;
    let mut all = Vec::new();
    for &seed in &cfg.seeds {
        all.extend(train_variant(&TrainSettings::from_config(cfg, seed), data)?);
    }
    Ok(all)
}
