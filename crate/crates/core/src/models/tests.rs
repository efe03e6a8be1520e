use std::f64::consts::PI;

use super::*;
use crate::numcore::finite_difference_gradient;

fn random_input(rng: &mut Rng) -> Vec<f64> {
    (0..DIM).map(|_| rng.uniform()).collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

fn assert_close(analytic: &[f64], fd: &[f64], tol: f64, what: &str) {
    for (i, (a, f)) in analytic.iter().zip(fd).enumerate() {
        if a.abs().max(f.abs()) > 1e-7 {
            assert!(rel_err(*a, *f) <= tol, "{what}[{i}]: {a} vs {f}");
        }
    }
}

fn loss_at(model: &Model, x: &[f64], label: usize) -> f64 {
    softmax_cross_entropy(&model.logits(x).unwrap(), label).unwrap().value
}

#[test]
fn parameter_counts() {
    let expected = [
        (ModelKind::ReUp, 1536),
        (ModelKind::AmpEnc, 768),
        (ModelKind::ConvNet, 1024),
        (ModelKind::Fourier, 8484),
    ];
    let mut rng = Rng::new(0);
    for (kind, n) in expected {
        let m = Model::init(kind, &mut rng).unwrap();
        assert_eq!(m.param_count(), n, "{kind}");
        assert_eq!(m.flat_params().len(), n, "{kind}");
        assert_eq!(m.input_dim(), 256);
        assert_eq!(m.num_classes(), 4);
    }
}

#[test]
fn flat_params_round_trip() {
    let mut rng = Rng::new(1);
    for kind in ModelKind::ALL {
        let m = Model::init(kind, &mut rng).unwrap();
        let mut z = Model::zeros(kind).unwrap();
        z.set_flat_params(&m.flat_params()).unwrap();
        assert_eq!(z, m);
        assert!(z.set_flat_params(&[0.0; 3]).is_err());
    }
}

#[test]
fn init_ranges() {
    let mut rng = Rng::new(2);
    let Model::Fourier(f) = Model::init(ModelKind::Fourier, &mut rng).unwrap() else { unreachable!() };
    assert!(f.frequencies.data().iter().all(|w| w.abs() <= 0.5));
    assert!(f.phases.iter().all(|&b| b == 0.0));
    assert!(f.coefficients.data().iter().all(|w| w.abs() <= 0.125));
    let Model::ConvNet(c) = Model::init(ModelKind::ConvNet, &mut rng).unwrap() else { unreachable!() };
    assert!(c.conv_weight.data().iter().all(|w| w.abs() <= 0.2));
    assert!(c.linear_weight.data().iter().all(|w| w.abs() <= 1.0 / 216f64.sqrt()));
}

#[test]
fn kind_names_round_trip() {
    for kind in ModelKind::ALL {
        assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
        assert_eq!(serde_json::to_string(&kind).unwrap(), format!("\"{}\"", kind.name()));
    }
    assert!(matches!("mlp".parse::<ModelKind>(), Err(Error::Config(_))));
}

#[test]
fn classical_gradients_match_finite_differences() {
    for seed in 0..3 {
        for kind in [ModelKind::ConvNet, ModelKind::Fourier] {
            let mut rng = Rng::new(100 + seed);
            let model = Model::init(kind, &mut rng).unwrap();
            let x = random_input(&mut rng);
            let label = seed as usize % 4;

            let (_, gx) = model.loss_input_gradient(&x, label).unwrap();
            let fd = finite_difference_gradient(|v| loss_at(&model, v, label), &x, 1e-6).unwrap();
            assert_close(&gx, &fd, 1e-5, &format!("{kind} input"));

            let (logits, cache) = model.forward(&x).unwrap();
            let ce = softmax_cross_entropy(&logits, label).unwrap();
            let gp = model.backward(&cache, &ce.logits_grad).unwrap().params.unwrap();
            let theta = model.flat_params();
            let f = |p: &[f64]| {
                let mut m = model.clone();
                m.set_flat_params(p).unwrap();
                loss_at(&m, &x, label)
            };
            for i in (0..theta.len()).step_by(theta.len() / 60 + 1) {
                let mut hi = theta.clone();
                let mut lo = theta.clone();
                hi[i] += 1e-6;
                lo[i] -= 1e-6;
                let fd = (f(&hi) - f(&lo)) / 2e-6;
                assert_close(&[gp[i]], &[fd], 1e-5, &format!("{kind} param {i}"));
            }
        }
    }
}

#[test]
fn convnet_matches_dense_oracle() {
    // direct loops, independent of the layer kernels
    let mut rng = Rng::new(7);
    let net = ConvNet::init(&mut rng);
    let x = random_input(&mut rng);
    let k = net.conv_weight.data();
    let mut pooled = vec![0.0; 216];
    for c in 0..6 {
        for pi in 0..6 {
            for pj in 0..6 {
                let mut best = f64::NEG_INFINITY;
                for (di, dj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let (i, j) = (2 * pi + di, 2 * pj + dj);
                    let mut s = net.conv_bias[c];
                    for u in 0..5 {
                        for v in 0..5 {
                            s += k[c * 25 + u * 5 + v] * x[(i + u) * 16 + j + v];
                        }
                    }
                    best = best.max(s.max(0.0));
                }
                pooled[c * 36 + pi * 6 + pj] = best;
            }
        }
    }
    let w = net.linear_weight.data();
    let logits = net.logits(&x).unwrap();
    for o in 0..4 {
        let expect: f64 = net.linear_bias[o] + (0..216).map(|h| w[o * 216 + h] * pooled[h]).sum::<f64>();
        assert!((logits[o] - expect).abs() < 1e-12);
    }
}

#[test]
fn fourier_net_is_periodic_for_integer_frequencies() {
    let mut rng = Rng::new(8);
    let mut net = FourierNet::init(DIM, &mut rng);
    net.frequencies
        .data_mut()
        .iter_mut()
        .for_each(|w| *w = (rng.below(5) as f64) - 2.0);
    net.phases.iter_mut().for_each(|b| *b = rng.uniform_range(-PI, PI));
    let x = random_input(&mut rng);
    let base = net.logits(&x).unwrap();
    for j in [0, 17, 255] {
        let mut shifted = x.clone();
        shifted[j] += 2.0 * PI;
        let y = net.logits(&shifted).unwrap();
        for (a, b) in base.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn fourier_hidden_pairs_share_phase() {
    let mut net = FourierNet::zeros(2);
    net.frequencies.data_mut().copy_from_slice(&[1.0; 64]);
    net.phases[0] = 0.3;
    net.coefficients.data_mut().iter_mut().for_each(|c| *c = 0.0);
    net.coefficients.data_mut()[0] = 1.0;
    net.coefficients.data_mut()[64 + 1] = 1.0;
    let y = net.logits(&[0.2, 0.5]).unwrap();
    assert!((y[0] - 1.0f64.sin()).abs() < 1e-15);
    assert!((y[1] - 1.0f64.cos()).abs() < 1e-15);
}

#[test]
fn batch_gradient_is_mean_plus_penalty() {
    let mut rng = Rng::new(9);
    let model = Model::init(ModelKind::ReUp, &mut rng).unwrap();
    let xs: Vec<Vec<f64>> = (0..3).map(|_| random_input(&mut rng)).collect();
    let inputs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let labels = [0, 3, 1];
    let lambda = 0.2;
    let g = classifier_param_gradient(&model, &inputs, &labels, lambda).unwrap();

    let theta = model.flat_params();
    let objective = |p: &[f64]| {
        let mut m = model.clone();
        m.set_flat_params(p).unwrap();
        let ce: f64 = inputs.iter().zip(&labels).map(|(x, &l)| loss_at(&m, x, l)).sum::<f64>() / 3.0;
        ce + 0.25 * lambda * p[..768].iter().map(|w| w * w).sum::<f64>()
    };
    assert!((g.loss - objective(&theta)).abs() < 1e-12);
    for i in [0, 5, 400, 767, 768, 1000, 1535] {
        let mut hi = theta.clone();
        let mut lo = theta.clone();
        hi[i] += 1e-5;
        lo[i] -= 1e-5;
        let fd = (objective(&hi) - objective(&lo)) / 2e-5;
        assert!((g.grads[i] - fd).abs() <= 1e-8 + 1e-5 * fd.abs(), "{i}: {} vs {fd}", g.grads[i]);
    }

    let single = classifier_param_gradient(&model, &inputs[..1], &labels[..1], 0.0).unwrap();
    let (_, cache) = model.forward(inputs[0]).unwrap();
    let ce = softmax_cross_entropy(&model.logits(inputs[0]).unwrap(), 0).unwrap();
    let direct = model.backward(&cache, &ce.logits_grad).unwrap().params.unwrap();
    assert_eq!(single.grads, direct);
}

#[test]
fn penalty_requires_encoding_weights() {
    let mut rng = Rng::new(10);
    let model = Model::init(ModelKind::ConvNet, &mut rng).unwrap();
    let x = random_input(&mut rng);
    assert!(matches!(
        classifier_param_gradient(&model, &[&x], &[0], 0.1),
        Err(Error::Unsupported(_))
    ));
    assert!(classifier_param_gradient(&model, &[&x], &[0, 1], 0.0).is_err());
}

#[test]
fn mismatched_cache_is_rejected() {
    let mut rng = Rng::new(11);
    let conv = Model::init(ModelKind::ConvNet, &mut rng).unwrap();
    let four = Model::init(ModelKind::Fourier, &mut rng).unwrap();
    let x = random_input(&mut rng);
    let (_, cache) = conv.forward(&x).unwrap();
    assert!(four.backward(&cache, &[0.0; 4]).is_err());
    assert!(conv.forward(&x[..10]).is_err());
}

