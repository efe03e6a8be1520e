use crate::error::{ensure_finite, Error, Result};
use crate::numcore::{norm2, Tensor};
use crate::rng::Rng;

pub const POWER_TOL: f64 = 1e-9;
pub const POWER_MAX_ITER: usize = 10_000;

/// Squarings of the Gram matrix per iteration: each step multiplies by `(AᵀA)^1024`.
const SQUARINGS: usize = 10;

fn symmetric_matvec(g: &[f64], n: usize, v: &[f64]) -> Vec<f64> {
    g.chunks(n).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn square_normalized(g: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let gik = g[i * n + k];
            if gik != 0.0 {
                let row = &g[k * n..(k + 1) * n];
                out[i * n..(i + 1) * n].iter_mut().zip(row).for_each(|(o, x)| *o += gik * x);
            }
        }
    }
    let scale = out.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale > 0.0 {
        out.iter_mut().for_each(|x| *x /= scale);
    }
    out
}

/// Gram matrix on the smaller side; `AᵀA` and `AAᵀ` share their nonzero spectrum.
fn small_gram(a: &[f64], rows: usize, cols: usize) -> (Vec<f64>, usize) {
    let n = rows.min(cols);
    let mut g = vec![0.0; n * n];
    if cols <= rows {
        for r in 0..rows {
            let row = &a[r * cols..(r + 1) * cols];
            for i in 0..cols {
                if row[i] != 0.0 {
                    g[i * n..(i + 1) * n].iter_mut().zip(row).for_each(|(o, x)| *o += row[i] * x);
                }
            }
        }
    } else {
        for i in 0..rows {
            for j in i..rows {
                let v: f64 = a[i * cols..(i + 1) * cols]
                    .iter()
                    .zip(&a[j * cols..(j + 1) * cols])
                    .map(|(x, y)| x * y)
                    .sum();
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
    }
    (g, n)
}

/// Largest singular value of a row-major `rows × cols` matrix by power
/// iteration on the Gram matrix from the normalized all-ones vector, stopping
/// when the Rayleigh estimate of `σ` changes by at most `POWER_TOL` relative.
pub fn spectral_norm_dense(a: &[f64], rows: usize, cols: usize) -> Result<f64> {
    if a.len() != rows * cols || cols == 0 || rows == 0 {
        return Err(Error::domain(format!("{rows}x{cols} matrix with {} entries", a.len())));
    }
    ensure_finite(a, "matrix")?;
    if a.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let (gram, n) = small_gram(a, rows, cols);
    let mut step = gram.clone();
    for _ in 0..SQUARINGS {
        step = square_normalized(&step, n);
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut restarted = false;
    let mut sigma = f64::NAN;
    for _ in 0..POWER_MAX_ITER {
        let u = symmetric_matvec(&step, n, &v);
        let un = norm2(&u);
        if un == 0.0 {
            // start vector orthogonal to the dominant eigenspace
            if restarted {
                return Err(Error::numeric("power iteration collapsed to zero twice"));
            }
            restarted = true;
            let mut rng = Rng::new(0x5eed);
            v = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            let vn = norm2(&v);
            v.iter_mut().for_each(|x| *x /= vn);
            continue;
        }
        v = u.into_iter().map(|x| x / un).collect();
        let rayleigh: f64 = symmetric_matvec(&gram, n, &v).iter().zip(&v).map(|(a, b)| a * b).sum();
        let s = rayleigh.max(0.0).sqrt();
        if (s - sigma).abs() <= POWER_TOL * s {
            return Ok(s);
        }
        sigma = s;
    }
    Err(Error::numeric(format!(
        "power iteration did not converge in {POWER_MAX_ITER} iterations"
    )))
}

pub fn spectral_norm(matrix: &Tensor) -> Result<f64> {
    matrix.expect_rank(2, "spectral_norm")?;
    spectral_norm_dense(matrix.data(), matrix.shape()[0], matrix.shape()[1])
}

/// Dense matrix of a stride-1 valid cross-correlation with `kernel`
/// `[O, C, kh, kw]` acting on `[C, H, W]` inputs; rows are ordered `[O, oh, ow]`.
pub fn conv_to_toeplitz(kernel: &Tensor, input_shape: &[usize]) -> Result<Tensor> {
    kernel.expect_rank(4, "kernel")?;
    let (o, c, kh, kw) = (kernel.shape()[0], kernel.shape()[1], kernel.shape()[2], kernel.shape()[3]);
    let &[ci, h, w] = input_shape else {
        return Err(Error::domain(format!("input shape {input_shape:?} is not [C, H, W]")));
    };
    if ci != c || kh > h || kw > w || kh == 0 || kw == 0 {
        return Err(Error::domain(format!(
            "kernel {:?} does not fit input {input_shape:?}",
            kernel.shape()
        )));
    }
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let cols = c * h * w;
    let k = kernel.data();
    let mut t = vec![0.0; o * oh * ow * cols];
    for oc in 0..o {
        for i in 0..oh {
            for j in 0..ow {
                let row = &mut t[((oc * oh + i) * ow + j) * cols..][..cols];
                for ic in 0..c {
                    for u in 0..kh {
                        for v in 0..kw {
                            row[(ic * h + i + u) * w + j + v] = k[((oc * c + ic) * kh + u) * kw + v];
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![o * oh * ow, cols], t)
}
