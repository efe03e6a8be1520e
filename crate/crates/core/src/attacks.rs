//! Projected gradient attacks in the ℓ∞ ball, accuracy under attack,
//! transfer matrices and perturbation heatmaps.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::SIDE;
use crate::error::{ensure_finite, Error, Result};
use crate::models::{Classifier, Model};
use crate::numcore::argmax;

pub const DEFAULT_STEPS: usize = 50;
pub const DEFAULT_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub epsilon: f64,
    pub steps: usize,
    pub step_size: f64,
    pub clip: (f64, f64),
    pub samples: usize,
}

impl AttackConfig {
    /// `T = 50` steps of size `2.5 ε / T` on the first 100 samples.
    pub fn pgd(epsilon: f64) -> Self {
        Self {
            epsilon,
            steps: DEFAULT_STEPS,
            step_size: 2.5 * epsilon / DEFAULT_STEPS as f64,
            clip: (0.0, 1.0),
            samples: DEFAULT_SAMPLES,
        }
    }

    /// A zero budget admits a zero step; the ball is a single point.
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::domain(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        if self.steps == 0 {
            return Err(Error::domain("attack needs at least one step"));
        }
        if !(self.step_size > 0.0 || (self.epsilon == 0.0 && self.step_size == 0.0)) {
            return Err(Error::domain(format!("step size must be positive, got {}", self.step_size)));
        }
        if !(self.clip.0 < self.clip.1) {
            return Err(Error::domain(format!("empty clip range {:?}", self.clip)));
        }
        Ok(())
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Sign-gradient ascent on the cross-entropy, projected onto
/// `B∞(x₀, ε) ∩ [lo, hi]ᴰ` after every step. Starts at `x₀`.
pub fn pgd_attack<C: Classifier + ?Sized>(model: &C, x: &[f64], label: usize, cfg: &AttackConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    ensure_finite(x, "attack input")?;
    let (lo, hi) = cfg.clip;
    if let Some(v) = x.iter().find(|v| !(lo..=hi).contains(*v)) {
        return Err(Error::domain(format!("input pixel {v} outside [{lo}, {hi}]")));
    }
    if cfg.epsilon == 0.0 {
        return Ok(x.to_vec());
    }
    let lower: Vec<f64> = x.iter().map(|v| (v - cfg.epsilon).max(lo)).collect();
    let upper: Vec<f64> = x.iter().map(|v| (v + cfg.epsilon).min(hi)).collect();
    let mut adv = x.to_vec();
    for _ in 0..cfg.steps {
        let (_, grad) = model.loss_input_gradient(&adv, label)?;
        for i in 0..adv.len() {
            adv[i] = (adv[i] + cfg.step_size * sign(grad[i])).clamp(lower[i], upper[i]);
        }
    }
    Ok(adv)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdversarialBatch {
    pub epsilon: f64,
    pub originals: Vec<Vec<f64>>,
    pub perturbed: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl AdversarialBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn delta(&self, index: usize) -> Result<Vec<f64>> {
        if index >= self.len() {
            return Err(Error::domain(format!("sample {index} out of range for batch of {}", self.len())));
        }
        Ok(self.perturbed[index]
            .iter()
            .zip(&self.originals[index])
            .map(|(a, b)| a - b)
            .collect())
    }

    pub fn max_abs_delta(&self) -> f64 {
        self.perturbed
            .iter()
            .zip(&self.originals)
            .flat_map(|(p, o)| p.iter().zip(o).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

/// Attacks the first `cfg.samples` inputs independently, in parallel.
pub fn generate_adversarial_batch<C: Classifier + Sync + ?Sized>(
    model: &C,
    inputs: &[Vec<f64>],
    labels: &[usize],
    cfg: &AttackConfig,
) -> Result<AdversarialBatch> {
    cfg.validate()?;
    if inputs.len() != labels.len() {
        return Err(Error::domain(format!("{} inputs but {} labels", inputs.len(), labels.len())));
    }
    let n = cfg.samples.min(inputs.len());
    if n == 0 {
        return Err(Error::domain("no samples to attack"));
    }
    let perturbed = inputs[..n]
        .par_iter()
        .zip(&labels[..n])
        .map(|(x, &l)| pgd_attack(model, x, l, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(AdversarialBatch {
        epsilon: cfg.epsilon,
        originals: inputs[..n].to_vec(),
        perturbed,
        labels: labels[..n].to_vec(),
    })
}

/// Fraction of inputs whose lowest-index argmax equals the label.
pub fn evaluate_accuracy<C: Classifier + Sync + ?Sized>(model: &C, inputs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if inputs.is_empty() || inputs.len() != labels.len() {
        return Err(Error::domain(format!(
            "accuracy needs a nonempty set, got {} inputs and {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    let hits = inputs
        .par_iter()
        .zip(labels)
        .map(|(x, &l)| Ok((argmax(&model.logits(x)?) == l) as usize))
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / inputs.len() as f64)
}

pub fn batch_accuracy<C: Classifier + Sync + ?Sized>(model: &C, batch: &AdversarialBatch) -> Result<f64> {
    evaluate_accuracy(model, &batch.perturbed, &batch.labels)
}

/// Accuracy of every target on one batch crafted against `source`.
pub fn transfer_evaluate<C: Classifier + Sync + ?Sized>(
    source: &C,
    targets: &[&Model],
    inputs: &[Vec<f64>],
    labels: &[usize],
    cfg: &AttackConfig,
) -> Result<Vec<f64>> {
    let batch = generate_adversarial_batch(source, inputs, labels, cfg)?;
    targets.iter().map(|t| batch_accuracy(*t, &batch)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub epsilon: f64,
    pub sources: Vec<String>,
    pub targets: Vec<String>,
    /// `entries[i][j]`: accuracy of target `j` on inputs attacked through source `i`.
    pub entries: Vec<Vec<f64>>,
}

impl TransferMatrix {
    pub fn compute(models: &[(String, &Model)], inputs: &[Vec<f64>], labels: &[usize], cfg: &AttackConfig) -> Result<Self> {
        let targets: Vec<&Model> = models.iter().map(|(_, m)| *m).collect();
        let entries = models
            .iter()
            .map(|(_, source)| transfer_evaluate(*source, &targets, inputs, labels, cfg))
            .collect::<Result<Vec<_>>>()?;
        let names: Vec<String> = models.iter().map(|(n, _)| n.clone()).collect();
        Ok(Self {
            epsilon: cfg.epsilon,
            sources: names.clone(),
            targets: names,
            entries,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("source");
        for t in &self.targets {
            let _ = write!(out, ",{t}");
        }
        out.push('\n');
        for (name, row) in self.sources.iter().zip(&self.entries) {
            out.push_str(name);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// δ of one sample as a 16×16 CSV grid with a `c0..c15` header, `f32` precision.
pub fn perturbation_csv(batch: &AdversarialBatch, index: usize) -> Result<String> {
    let delta = batch.delta(index)?;
    let header: Vec<String> = (0..SIDE).map(|c| format!("c{c}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for row in delta.chunks(SIDE) {
        let cells: Vec<String> = row.iter().map(|v| format!("{}", *v as f32)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_perturbation_csv(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(SIDE * SIDE);
    for (line_no, line) in text.lines().enumerate().skip(1) {
        for cell in line.split(',') {
            let v: f32 = cell
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("line {}: bad value {cell:?}", line_no + 1)))?;
            values.push(v as f64);
        }
    }
    if values.len() != SIDE * SIDE {
        return Err(Error::Invalid(format!("expected {} values, got {}", SIDE * SIDE, values.len())));
    }
    Ok(values)
}

/// Maps `δ ∈ [-ε, ε]` onto grey levels with `-ε → 0`, `0 → 128`, `+ε → 255`.
pub fn delta_to_grey(delta: f64, epsilon: f64) -> u8 {
    if epsilon <= 0.0 {
        return 128;
    }
    let r = (delta / epsilon).clamp(-1.0, 1.0);
    if r >= 0.0 {
        (128.0 + (r * 127.0).round()) as u8
    } else {
        (128.0 + (r * 128.0).round()) as u8
    }
}

/// Binary PGM (`P5`, maxval 255) heatmap of one sample's δ.
pub fn perturbation_pgm(batch: &AdversarialBatch, index: usize) -> Result<Vec<u8>> {
    let delta = batch.delta(index)?;
    let mut out = format!("P5\n{SIDE} {SIDE}\n255\n").into_bytes();
    out.extend(delta.iter().map(|&d| delta_to_grey(d, batch.epsilon)));
    Ok(out)
}
