use crate::error::{ensure_finite, Result};

/// Cross-entropy value and its gradient with respect to the logits.
#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    /// `softmax(logits) - onehot(label)`; sums to zero.
    pub logits_grad: Vec<f64>,
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<LossValue> {
    ensure_finite(logits, "logits")?;
    if label >= logits.len() {
        return Err(crate::Error::domain(format!(
            "label {label} out of range for {} logits",
            logits.len()
        )));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_total = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    let value = log_total - (logits[label] - max);
    let mut logits_grad = softmax(logits);
    logits_grad[label] -= 1.0;
    Ok(LossValue { value, logits_grad })
}
