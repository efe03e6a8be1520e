use crate::error::{Error, Result};

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate.
pub fn finite_difference_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::domain(format!("step must be positive, got {h}")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::numeric(format!("non-finite function value at coordinate {i}")));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Rounding noise of a central difference of a function of magnitude `f_scale`.
pub fn central_difference_noise(f_scale: f64, h: f64) -> f64 {
    4.0 * f64::EPSILON * f_scale.abs().max(1.0) / h
}

/// Largest coordinatewise relative error `|a - n| / max(|a|, |n|, floor)`.
///
/// Coordinates smaller than `floor` are compared on the `floor` scale; pick
/// `floor = noise / tol` so those are held to the rounding noise of the
/// difference quotient.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floor() {
        assert_eq!(max_relative_error(&[2.0, 1e-9], &[2.0, 2e-9], 1e-3), 1e-6);
        assert!((max_relative_error(&[1.0], &[1.1], 0.0) - 0.1 / 1.1).abs() < 1e-15);
        assert!(central_difference_noise(1.0, 1e-6) < 1e-9);
    }

    #[test]
    fn quadratic_is_exact() {
        let g = finite_difference_gradient(|x| x.iter().map(|v| v * v).sum(), &[1.0, 2.0], 1e-5)
            .unwrap();
        assert!((g[0] - 2.0).abs() < 1e-8 && (g[1] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn constant_gives_zero() {
        let g = finite_difference_gradient(|_| 3.5, &[0.1, -4.0, 2.0], 1e-4).unwrap();
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn sine_at_zero() {
        let g = finite_difference_gradient(|x| x[0].sin(), &[0.0], 1e-5).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_values_error() {
        let r = finite_difference_gradient(|x| 1.0 / x[0], &[0.0], 1e-300);
        assert!(r.is_ok() || matches!(r, Err(Error::Numeric(_))));
        let r = finite_difference_gradient(|_| f64::NAN, &[0.0], 1e-3);
        assert!(matches!(r, Err(Error::Numeric(_))));
    }
}
