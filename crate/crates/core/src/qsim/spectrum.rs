//! Least-squares Fourier fits of single-feature circuit restrictions.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::{reupload_forward, ReUpParams};
use crate::error::{Error, Result};

/// Coefficients `c_ω` for `ω = -K..=K` of a truncated series
/// `Σ c_ω e^{iωx}`, plus the RMS fit residual on the sample grid.
#[derive(Clone, Debug)]
pub struct SpectrumEstimate {
    pub max_frequency: usize,
    coefficients: Vec<Complex64>,
    pub residual: f64,
}

impl SpectrumEstimate {
    pub fn c(&self, omega: i64) -> Complex64 {
        let k = self.max_frequency as i64;
        if omega.abs() > k {
            return Complex64::new(0.0, 0.0);
        }
        self.coefficients[(omega + k) as usize]
    }

    /// Cosine coefficient: `c_ω + c_{-ω}` (`c_0` for `ω = 0`).
    pub fn a(&self, omega: u64) -> f64 {
        let w = omega as i64;
        if w == 0 {
            self.c(0).re
        } else {
            (self.c(w) + self.c(-w)).re
        }
    }

    /// Sine coefficient `i (c_ω - c_{-ω})`, so that
    /// `f(x) = a_0 + Σ_{ω>0} a_ω cos(ωx) + b_ω sin(ωx)`.
    pub fn b(&self, omega: u64) -> f64 {
        let w = omega as i64;
        if w == 0 {
            0.0
        } else {
            (Complex64::new(0.0, 1.0) * (self.c(w) - self.c(-w))).re
        }
    }

    /// Evaluates the fitted series.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.max_frequency as i64;
        (-k..=k)
            .map(|w| (self.c(w) * Complex64::from_polar(1.0, w as f64 * x)).re)
            .sum()
    }

    /// Frequencies whose coefficient magnitude exceeds `tol`.
    pub fn support(&self, tol: f64) -> Vec<i64> {
        let k = self.max_frequency as i64;
        (-k..=k).filter(|&w| self.c(w).norm() > tol).collect()
    }
}

/// Fits `f` on `samples` equispaced points of `[0, 2π)` with frequencies
/// `|ω| ≤ max_frequency`.
///
/// For equispaced points and `samples > 2K`, the exponentials are orthogonal
/// on the grid, so the least-squares solution is the discrete projection
/// `c_ω = (1/S) Σ_s f(x_s) e^{-iωx_s}`.
pub fn fourier_probe<F>(f: F, max_frequency: usize, samples: usize) -> Result<SpectrumEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    if samples < 2 * max_frequency + 1 {
        return Err(Error::domain(format!(
            "{samples} samples cannot determine {} coefficients",
            2 * max_frequency + 1
        )));
    }
    let xs: Vec<f64> = (0..samples).map(|s| 2.0 * PI * s as f64 / samples as f64).collect();
    let ys = xs.iter().map(|&x| f(x)).collect::<Result<Vec<f64>>>()?;
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::numeric("probe function returned a non-finite value"));
    }
    let k = max_frequency as i64;
    let coefficients = (-k..=k)
        .map(|w| {
            xs.iter()
                .zip(&ys)
                .map(|(&x, &y)| y * Complex64::from_polar(1.0, -(w as f64) * x))
                .sum::<Complex64>()
                / samples as f64
        })
        .collect();
    let mut est = SpectrumEstimate {
        max_frequency,
        coefficients,
        residual: 0.0,
    };
    let sq: f64 = xs.iter().zip(&ys).map(|(&x, &y)| (y - est.eval(x)).powi(2)).sum();
    est.residual = (sq / samples as f64).sqrt();
    Ok(est)
}

/// Output `output` of a re-upload circuit as a function of feature `feature`
/// alone, the other features frozen at `base`.
pub fn reupload_feature_restriction<'a>(
    params: &'a ReUpParams,
    base: &'a [f64],
    feature: usize,
    output: usize,
) -> impl Fn(f64) -> Result<f64> + 'a {
    move |v| {
        let mut x = base.to_vec();
        x[feature] = v;
        Ok(reupload_forward(params, &x)?[output])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{CircuitShape, RotationGate, StateVector};
    use crate::rng::Rng;

    fn ry_probe(x: f64) -> Result<f64> {
        let mut s = StateVector::zero(1);
        RotationGate::new(0, 0.0, x, 0.0).apply(&mut s)?;
        s.expectation_z(0)
    }

    #[test]
    fn single_ry_is_cosine() {
        let est = fourier_probe(ry_probe, 1, 16).unwrap();
        assert!(est.residual <= 1e-10);
        assert!((est.c(1) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((est.c(-1) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!(est.c(0).norm() < 1e-12);
        assert!((est.a(1) - 1.0).abs() < 1e-12 && est.b(1).abs() < 1e-12);
    }

    #[test]
    fn constant_circuit_has_only_dc() {
        let est = fourier_probe(
            |_| {
                let mut s = StateVector::zero(1);
                RotationGate::new(0, 0.2, 0.7, -0.4).apply(&mut s)?;
                s.expectation_z(0)
            },
            3,
            32,
        )
        .unwrap();
        assert_eq!(est.support(1e-12), vec![0]);
        assert!((est.a(0) - 0.7f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn sine_coefficient_sign() {
        let est = fourier_probe(|x| Ok(0.3 + 2.0 * x.cos() - 0.5 * (2.0 * x).sin()), 2, 16).unwrap();
        assert!((est.a(0) - 0.3).abs() < 1e-12);
        assert!((est.a(1) - 2.0).abs() < 1e-12);
        assert!((est.b(2) + 0.5).abs() < 1e-12);
    }

    fn repeated_encoding(layers: usize, rng: &mut Rng) -> impl Fn(f64) -> Result<f64> {
        let fixed: Vec<[f64; 3]> = (0..layers)
            .map(|_| [rng.uniform_range(-3.0, 3.0), rng.uniform_range(-3.0, 3.0), rng.uniform_range(-3.0, 3.0)])
            .collect();
        move |x| {
            let mut s = StateVector::zero(1);
            for a in &fixed {
                RotationGate::new(0, a[0], a[1], a[2]).apply(&mut s)?;
                RotationGate::new(0, 0.0, x, 0.0).apply(&mut s)?;
            }
            s.expectation_z(0)
        }
    }

    #[test]
    fn degree_matches_encoding_count() {
        let mut rng = Rng::new(8);
        for layers in 1..=4 {
            let f = repeated_encoding(layers, &mut rng);
            assert!(fourier_probe(&f, layers, 64).unwrap().residual <= 1e-8);
            assert!(fourier_probe(&f, layers - 1, 64).unwrap().residual > 1e-3);
        }
    }

    #[test]
    fn reupload_feature_has_degree_three() {
        let mut rng = Rng::new(9);
        let mut p = ReUpParams::init(CircuitShape::STANDARD, 256, &mut rng).unwrap();
        p.biases.iter_mut().for_each(|b| *b *= 200.0);
        p.weights.iter_mut().for_each(|w| *w *= 50.0);
        let feature = 37;
        for slot in 0..p.weights.len() {
            if p.feature_of_slot(slot) == feature {
                p.weights[slot] = 1.0;
            }
        }
        let base: Vec<f64> = (0..256).map(|_| rng.uniform()).collect();
        let f = reupload_feature_restriction(&p, &base, feature, 0);
        assert!(fourier_probe(&f, 3, 32).unwrap().residual <= 1e-8);
        assert!(fourier_probe(&f, 2, 32).unwrap().residual > 1e-3);
    }

    #[test]
    fn underdetermined_fit_rejected() {
        assert!(matches!(fourier_probe(ry_probe, 3, 6), Err(Error::Domain(_))));
    }
}
