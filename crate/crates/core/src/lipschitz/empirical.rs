use crate::error::{Error, Result};
use crate::models::Classifier;
use crate::numcore::norm2;

use super::spectral::spectral_norm_dense;

/// Input Jacobian `K × D` at `x`, one backward pass per output.
pub fn input_jacobian<C: Classifier>(model: &C, x: &[f64]) -> Result<Vec<f64>> {
    let (logits, cache) = model.forward(x)?;
    let k = logits.len();
    let mut jac = Vec::with_capacity(k * x.len());
    for out in 0..k {
        let mut cot = vec![0.0; k];
        cot[out] = 1.0;
        jac.extend(model.backward(&cache, &cot)?.input);
    }
    Ok(jac)
}

fn check_probes(probes: &[&[f64]]) -> Result<()> {
    if probes.is_empty() {
        return Err(Error::domain("empirical bound needs at least one probe"));
    }
    Ok(())
}

/// `max_x ‖J(x)‖₂` over the probes.
pub fn empirical_lipschitz_lower_bound<C: Classifier>(model: &C, probes: &[&[f64]]) -> Result<f64> {
    check_probes(probes)?;
    let mut best = 0.0f64;
    for x in probes {
        let jac = input_jacobian(model, x)?;
        best = best.max(spectral_norm_dense(&jac, jac.len() / x.len(), x.len())?);
    }
    Ok(best)
}

/// `max_x max_k ‖∇f_k(x)‖₂`: lower bound for the Lipschitz constant of a single output.
pub fn empirical_per_output_lower_bound<C: Classifier>(model: &C, probes: &[&[f64]]) -> Result<f64> {
    check_probes(probes)?;
    let mut best = 0.0f64;
    for x in probes {
        let jac = input_jacobian(model, x)?;
        for row in jac.chunks(x.len()) {
            best = best.max(norm2(row));
        }
    }
    Ok(best)
}
