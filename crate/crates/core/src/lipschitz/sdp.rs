use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{ensure_finite, Error, Result};
use crate::models::FourierNet;

/// Sector bounds `α ≤ σ'(z) ≤ β` of an activation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeRestriction {
    pub alpha: f64,
    pub beta: f64,
}

impl SlopeRestriction {
    pub const SIN_COS: SlopeRestriction = SlopeRestriction { alpha: -1.0, beta: 1.0 };
    pub const RELU: SlopeRestriction = SlopeRestriction { alpha: 0.0, beta: 1.0 };
}

const SUBGRADIENT_STEPS: usize = 400;

struct Extremes {
    min: f64,
    max: f64,
    top: DVector<f64>,
}

fn extremes(m: DMatrix<f64>) -> Result<Extremes> {
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::numeric("symmetric eigensolver did not converge"))?;
    let (mut imin, mut imax) = (0, 0);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v < eig.eigenvalues[imin] {
            imin = i;
        }
        if v > eig.eigenvalues[imax] {
            imax = i;
        }
    }
    Ok(Extremes {
        min: eig.eigenvalues[imin],
        max: eig.eigenvalues[imax],
        top: eig.eigenvectors.column(imax).into_owned(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpCertificate {
    pub bound: f64,
    pub product_bound: f64,
    pub multipliers: Vec<f64>,
}

/// One-hidden-layer certificate with a diagonal multiplier `T ≥ 0` for an
/// activation with `α = -β`. The condition splits into `W1ᵀW1 ⪯ 2βT` and
/// `-2αβ W0ᵀTW0 ⪯ L² I`, so `L² = λmax(-2αβ W0ᵀTW0)` for the best feasible `T`.
///
/// `w0` is `n × d` and `w1` is `m × n`, both row-major.
pub fn one_layer_sdp(w0: &[f64], n: usize, d: usize, w1: &[f64], m: usize, slope: SlopeRestriction) -> Result<SdpCertificate> {
    if w0.len() != n * d || w1.len() != m * n {
        return Err(Error::domain("weight shapes do not chain"));
    }
    if slope.alpha + slope.beta != 0.0 || slope.beta <= 0.0 {
        return Err(Error::Unsupported(format!(
            "certificate needs α = -β < 0, got α = {}, β = {}",
            slope.alpha, slope.beta
        )));
    }
    ensure_finite(w0, "first-layer weights")?;
    ensure_finite(w1, "second-layer weights")?;
    let scale = -2.0 * slope.alpha * slope.beta;
    let w0 = DMatrix::from_row_slice(n, d, w0);
    let w1 = DMatrix::from_row_slice(m, n, w1);
    let gram_out = w1.transpose() * &w1;
    let gram_in = &w0 * w0.transpose();

    let out_max = extremes(gram_out.clone())?.max.max(0.0);
    let in_max = extremes(gram_in.clone())?.max.max(0.0);
    let product_bound = (out_max * in_max).sqrt();
    if product_bound == 0.0 {
        return Ok(SdpCertificate {
            bound: 0.0,
            product_bound,
            multipliers: vec![out_max / (2.0 * slope.beta); n],
        });
    }

    // L² and its top eigenvector for multipliers t, via the n×n form s·D K D
    let objective = |t: &[f64]| -> Result<(f64, DVector<f64>)> {
        let sqrt_t = DVector::from_iterator(n, t.iter().map(|v| v.sqrt()));
        let mut m = gram_in.clone();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] *= scale * sqrt_t[i] * sqrt_t[j];
            }
        }
        let e = extremes(m)?;
        Ok((e.max.max(0.0), e.top))
    };
    let feasibility = |t: &[f64]| -> Result<f64> {
        let mut m = -gram_out.clone();
        for i in 0..n {
            m[(i, i)] += 2.0 * slope.beta * t[i];
        }
        Ok(extremes(m)?.min)
    };

    let t0 = out_max / (2.0 * slope.beta);
    let mut t = vec![t0; n];
    let mut best_sq = objective(&t)?.0;
    let mut best_t = t.clone();
    for k in 0..SUBGRADIENT_STEPS {
        let (lam, u) = objective(&t)?;
        if lam <= 0.0 {
            break;
        }
        let du = DVector::from_iterator(n, t.iter().zip(u.iter()).map(|(ti, ui)| ti.sqrt() * ui));
        let kdu = &gram_in * du;
        let grad: Vec<f64> = kdu.iter().map(|v| 2.0 * scale * v * v / lam).collect();
        let gmax = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if gmax == 0.0 {
            break;
        }
        let step = 0.2 * t0 / ((k + 1) as f64).sqrt() / gmax;
        t.iter_mut().zip(&grad).for_each(|(ti, g)| *ti = (*ti - step * g).max(0.0));
        let mu = feasibility(&t)?;
        if mu < 0.0 {
            let shift = -mu / (2.0 * slope.beta) * (1.0 + 1e-12) + f64::EPSILON * t0;
            t.iter_mut().for_each(|ti| *ti += shift);
        }
        let (val, _) = objective(&t)?;
        if val < best_sq {
            best_sq = val;
            best_t.clone_from(&t);
        }
    }
    Ok(SdpCertificate {
        bound: best_sq.sqrt().min(product_bound),
        product_bound,
        multipliers: best_t,
    })
}

/// Certificate for the sine/cosine network, on the 64-unit expanded first layer.
pub fn fourier_certificate(net: &FourierNet) -> Result<SdpCertificate> {
    let w0 = net.expanded_frequencies();
    let (n, d) = (w0.shape()[0], w0.shape()[1]);
    let m = net.coefficients.shape()[0];
    one_layer_sdp(w0.data(), n, d, net.coefficients.data(), m, SlopeRestriction::SIN_COS)
}
