//! Layer kernels. Every forward has a matching backward that maps output
//! cotangents to input (and parameter) cotangents.

use super::Tensor;
use crate::error::{Error, Result};

/// Cotangents of a parameterized layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads {
    pub input: Vec<f64>,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// `y = W x + b` with `W` of shape `[out, in]`.
pub fn linear_forward(weight: &Tensor, bias: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    weight.expect_rank(2, "linear weight")?;
    let (out, inp) = (weight.shape()[0], weight.shape()[1]);
    if x.len() != inp || bias.len() != out {
        return Err(Error::domain(format!(
            "linear: weight {out}x{inp}, bias {}, input {}",
            bias.len(),
            x.len()
        )));
    }
    let w = weight.data();
    Ok((0..out)
        .map(|o| bias[o] + super::dot(&w[o * inp..(o + 1) * inp], x))
        .collect())
}

pub fn linear_backward(weight: &Tensor, x: &[f64], dy: &[f64]) -> Result<LayerGrads> {
    weight.expect_rank(2, "linear weight")?;
    let (out, inp) = (weight.shape()[0], weight.shape()[1]);
    if x.len() != inp || dy.len() != out {
        return Err(Error::domain("linear backward: shape mismatch"));
    }
    let w = weight.data();
    let mut input = vec![0.0; inp];
    let mut dw = vec![0.0; out * inp];
    for o in 0..out {
        let g = dy[o];
        let row = &w[o * inp..(o + 1) * inp];
        for i in 0..inp {
            input[i] += row[i] * g;
            dw[o * inp + i] = g * x[i];
        }
    }
    Ok(LayerGrads {
        input,
        weight: dw,
        bias: dy.to_vec(),
    })
}

fn conv_geometry(input: &Tensor, kernel: &Tensor) -> Result<(usize, usize, usize, usize, usize, usize)> {
    input.expect_rank(3, "conv2d input")?;
    kernel.expect_rank(4, "conv2d kernel")?;
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (o, kc, kh, kw) = (
        kernel.shape()[0],
        kernel.shape()[1],
        kernel.shape()[2],
        kernel.shape()[3],
    );
    if kc != c || kh > h || kw > w || kh == 0 || kw == 0 {
        return Err(Error::domain(format!(
            "conv2d: input {:?} incompatible with kernel {:?}",
            input.shape(),
            kernel.shape()
        )));
    }
    Ok((c, h, w, o, kh, kw))
}

/// Valid, stride-1 cross-correlation: input `[C, H, W]`, kernel `[O, C, kh, kw]`,
/// output `[O, H - kh + 1, W - kw + 1]`.
pub fn conv2d_forward(input: &Tensor, kernel: &Tensor, bias: &[f64]) -> Result<Tensor> {
    let (c, h, w, o, kh, kw) = conv_geometry(input, kernel)?;
    if bias.len() != o {
        return Err(Error::domain("conv2d: bias length must equal output channels"));
    }
    let (ho, wo) = (h - kh + 1, w - kw + 1);
    let x = input.data();
    let k = kernel.data();
    let mut out = vec![0.0; o * ho * wo];
    for oc in 0..o {
        for r in 0..ho {
            for col in 0..wo {
                let mut acc = bias[oc];
                for ic in 0..c {
                    for i in 0..kh {
                        let xrow = &x[(ic * h + r + i) * w + col..][..kw];
                        let krow = &k[((oc * c + ic) * kh + i) * kw..][..kw];
                        acc += super::dot(xrow, krow);
                    }
                }
                out[(oc * ho + r) * wo + col] = acc;
            }
        }
    }
    Tensor::new(vec![o, ho, wo], out)
}

pub fn conv2d_backward(input: &Tensor, kernel: &Tensor, dout: &Tensor) -> Result<LayerGrads> {
    let (c, h, w, o, kh, kw) = conv_geometry(input, kernel)?;
    let (ho, wo) = (h - kh + 1, w - kw + 1);
    if dout.shape() != [o, ho, wo] {
        return Err(Error::domain(format!(
            "conv2d backward: cotangent shape {:?}, expected {:?}",
            dout.shape(),
            [o, ho, wo]
        )));
    }
    let x = input.data();
    let k = kernel.data();
    let g = dout.data();
    let mut dx = vec![0.0; x.len()];
    let mut dk = vec![0.0; k.len()];
    let mut db = vec![0.0; o];
    for oc in 0..o {
        for r in 0..ho {
            for col in 0..wo {
                let go = g[(oc * ho + r) * wo + col];
                if go == 0.0 {
                    continue;
                }
                db[oc] += go;
                for ic in 0..c {
                    for i in 0..kh {
                        for j in 0..kw {
                            let xi = (ic * h + r + i) * w + col + j;
                            let ki = ((oc * c + ic) * kh + i) * kw + j;
                            dx[xi] += k[ki] * go;
                            dk[ki] += x[xi] * go;
                        }
                    }
                }
            }
        }
    }
    Ok(LayerGrads {
        input: dx,
        weight: dk,
        bias: db,
    })
}

/// Non-overlapping 2×2 max pooling over `[C, H, W]`. Returns the pooled tensor
/// and, per output cell, the flat input index that won (first in row-major
/// scan on ties).
pub fn maxpool2x2_forward(input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    input.expect_rank(3, "maxpool input")?;
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::domain(format!("maxpool2x2: odd spatial shape {h}x{w}")));
    }
    let (ho, wo) = (h / 2, w / 2);
    let x = input.data();
    let mut out = Vec::with_capacity(c * ho * wo);
    let mut argmax = Vec::with_capacity(c * ho * wo);
    for ch in 0..c {
        for r in 0..ho {
            for col in 0..wo {
                let mut best = (ch * h + 2 * r) * w + 2 * col;
                for (dr, dc) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = (ch * h + 2 * r + dr) * w + 2 * col + dc;
                    if x[idx] > x[best] {
                        best = idx;
                    }
                }
                out.push(x[best]);
                argmax.push(best);
            }
        }
    }
    Ok((Tensor::new(vec![c, ho, wo], out)?, argmax))
}

pub fn maxpool2x2_backward(input_len: usize, argmax: &[usize], dout: &[f64]) -> Result<Vec<f64>> {
    if argmax.len() != dout.len() {
        return Err(Error::domain("maxpool backward: cotangent length mismatch"));
    }
    let mut dx = vec![0.0; input_len];
    for (&idx, &g) in argmax.iter().zip(dout) {
        dx[idx] += g;
    }
    Ok(dx)
}

pub fn relu_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Subgradient 0 at the kink.
pub fn relu_backward(x: &[f64], dy: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(dy)
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect()
}

pub fn sin_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.sin()).collect()
}

pub fn sin_backward(x: &[f64], dy: &[f64]) -> Vec<f64> {
    x.iter().zip(dy).map(|(v, g)| v.cos() * g).collect()
}

pub fn cos_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.cos()).collect()
}

pub fn cos_backward(x: &[f64], dy: &[f64]) -> Vec<f64> {
    x.iter().zip(dy).map(|(v, g)| -v.sin() * g).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{dot, finite_difference_gradient};
    use crate::rng::Rng;

    fn random(rng: &mut Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect()
    }

    fn assert_close(analytic: &[f64], fd: &[f64], tol: f64) {
        assert_eq!(analytic.len(), fd.len());
        for (i, (a, f)) in analytic.iter().zip(fd).enumerate() {
            if a.abs().max(f.abs()) <= 1e-8 {
                continue;
            }
            let rel = (a - f).abs() / a.abs().max(f.abs());
            assert!(rel <= tol, "coordinate {i}: analytic {a} vs fd {f} (rel {rel:e})");
        }
    }

    #[test]
    fn linear_gradients() {
        for seed in 0..5 {
            let mut rng = Rng::new(seed);
            let (o, i) = (3 + seed as usize, 7);
            let w = Tensor::new(vec![o, i], random(&mut rng, o * i)).unwrap();
            let b = random(&mut rng, o);
            let x = random(&mut rng, i);
            let dy = random(&mut rng, o);
            let grads = linear_backward(&w, &x, &dy).unwrap();

            let fx = |xv: &[f64]| dot(&linear_forward(&w, &b, xv).unwrap(), &dy);
            assert_close(&grads.input, &finite_difference_gradient(fx, &x, 1e-6).unwrap(), 1e-6);
            let fw = |wv: &[f64]| {
                let wt = Tensor::new(vec![o, i], wv.to_vec()).unwrap();
                dot(&linear_forward(&wt, &b, &x).unwrap(), &dy)
            };
            assert_close(&grads.weight, &finite_difference_gradient(fw, w.data(), 1e-6).unwrap(), 1e-6);
            let fb = |bv: &[f64]| dot(&linear_forward(&w, bv, &x).unwrap(), &dy);
            assert_close(&grads.bias, &finite_difference_gradient(fb, &b, 1e-6).unwrap(), 1e-6);
        }
    }

    #[test]
    fn delta_kernel_is_interior_identity() {
        let mut rng = Rng::new(11);
        let img = Tensor::new(vec![1, 6, 7], random(&mut rng, 42)).unwrap();
        let mut k = vec![0.0; 9];
        k[4] = 1.0;
        let kernel = Tensor::new(vec![1, 1, 3, 3], k).unwrap();
        let out = conv2d_forward(&img, &kernel, &[0.0]).unwrap();
        assert_eq!(out.shape(), &[1, 4, 5]);
        for r in 0..4 {
            for c in 0..5 {
                assert_eq!(out.data()[r * 5 + c], img.data()[(r + 1) * 7 + c + 1]);
            }
        }
    }

    #[test]
    fn conv_gradients() {
        for seed in 0..5 {
            let mut rng = Rng::new(100 + seed);
            let (c, h, w, o, k) = (1 + seed as usize % 2, 6, 5 + seed as usize % 3, 2, 3);
            let x = Tensor::new(vec![c, h, w], random(&mut rng, c * h * w)).unwrap();
            let kern = Tensor::new(vec![o, c, k, k], random(&mut rng, o * c * k * k)).unwrap();
            let b = random(&mut rng, o);
            let out_shape = vec![o, h - k + 1, w - k + 1];
            let n_out: usize = out_shape.iter().product();
            let dout = Tensor::new(out_shape, random(&mut rng, n_out)).unwrap();
            let grads = conv2d_backward(&x, &kern, &dout).unwrap();

            let fx = |xv: &[f64]| {
                let xt = Tensor::new(x.shape().to_vec(), xv.to_vec()).unwrap();
                dot(conv2d_forward(&xt, &kern, &b).unwrap().data(), dout.data())
            };
            assert_close(&grads.input, &finite_difference_gradient(fx, x.data(), 1e-6).unwrap(), 1e-6);
            let fk = |kv: &[f64]| {
                let kt = Tensor::new(kern.shape().to_vec(), kv.to_vec()).unwrap();
                dot(conv2d_forward(&x, &kt, &b).unwrap().data(), dout.data())
            };
            assert_close(&grads.weight, &finite_difference_gradient(fk, kern.data(), 1e-6).unwrap(), 1e-6);
            let fb = |bv: &[f64]| dot(conv2d_forward(&x, &kern, bv).unwrap().data(), dout.data());
            assert_close(&grads.bias, &finite_difference_gradient(fb, &b, 1e-6).unwrap(), 1e-6);
        }
    }

    #[test]
    fn maxpool_routes_to_argmax() {
        let x = Tensor::new(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (out, arg) = maxpool2x2_forward(&x).unwrap();
        assert_eq!(out.data(), &[4.0]);
        assert_eq!(maxpool2x2_backward(4, &arg, &[1.0]).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn maxpool_ties_first_in_scan() {
        let x = Tensor::new(vec![1, 2, 2], vec![5.0, 5.0, 5.0, 5.0]).unwrap();
        let (_, arg) = maxpool2x2_forward(&x).unwrap();
        assert_eq!(arg, vec![0]);
    }

    #[test]
    fn maxpool_gradients() {
        for seed in 0..5 {
            let mut rng = Rng::new(200 + seed);
            let x = Tensor::new(vec![2, 4, 6], random(&mut rng, 48)).unwrap();
            let (out, arg) = maxpool2x2_forward(&x).unwrap();
            let dy = random(&mut rng, out.len());
            let analytic = maxpool2x2_backward(x.len(), &arg, &dy).unwrap();
            let f = |xv: &[f64]| {
                let xt = Tensor::new(x.shape().to_vec(), xv.to_vec()).unwrap();
                dot(maxpool2x2_forward(&xt).unwrap().0.data(), &dy)
            };
            assert_close(&analytic, &finite_difference_gradient(f, x.data(), 1e-6).unwrap(), 1e-6);
        }
    }

    #[test]
    fn elementwise_gradients() {
        for seed in 0..5 {
            let mut rng = Rng::new(300 + seed);
            // keep relu probes away from the kink
            let x: Vec<f64> = random(&mut rng, 20)
                .into_iter()
                .map(|v| if v.abs() < 1e-3 { 0.5 } else { v * 3.0 })
                .collect();
            let dy = random(&mut rng, 20);
            let cases: [(fn(&[f64]) -> Vec<f64>, fn(&[f64], &[f64]) -> Vec<f64>); 3] = [
                (relu_forward, relu_backward),
                (sin_forward, sin_backward),
                (cos_forward, cos_backward),
            ];
            for (fwd, bwd) in cases {
                let analytic = bwd(&x, &dy);
                let fd = finite_difference_gradient(|xv| dot(&fwd(xv), &dy), &x, 1e-6).unwrap();
                assert_close(&analytic, &fd, 1e-6);
            }
        }
    }

    #[test]
    fn shape_errors() {
        let w = Tensor::zeros(vec![2, 3]);
        assert!(linear_forward(&w, &[0.0; 2], &[0.0; 4]).is_err());
        let x = Tensor::zeros(vec![1, 3, 3]);
        let k = Tensor::zeros(vec![1, 2, 3, 3]);
        assert!(conv2d_forward(&x, &k, &[0.0]).is_err());
        assert!(maxpool2x2_forward(&Tensor::zeros(vec![1, 3, 4])).is_err());
    }
}
