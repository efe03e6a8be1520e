use crate::error::{Error, Result};
use crate::numcore::layers::{linear_backward, linear_forward};
use crate::numcore::Tensor;
use crate::rng::Rng;

use super::{Cotangents, ParamSpec};

pub const FREQUENCIES: usize = 32;
pub const HIDDEN: usize = 2 * FREQUENCIES;

/// One hidden layer of paired sine/cosine units sharing a frequency row and
/// a phase: unit `2i` is `sin(w_i·x + b_i)`, unit `2i+1` is `cos(w_i·x + b_i)`.
/// The output layer holds the series coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierNet {
    pub frequencies: Tensor,
    pub phases: Vec<f64>,
    pub coefficients: Tensor,
    pub output_bias: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct FourierCache {
    input: Vec<f64>,
    arguments: Vec<f64>,
    hidden: Vec<f64>,
}

impl FourierNet {
    pub fn zeros(input_dim: usize) -> Self {
        Self {
            frequencies: Tensor::zeros(vec![FREQUENCIES, input_dim]),
            phases: vec![0.0; FREQUENCIES],
            coefficients: Tensor::zeros(vec![4, HIDDEN]),
            output_bias: vec![0.0; 4],
        }
    }

    /// Frequencies `U(-0.5, 0.5)`, zero phases, fan-in uniform output layer.
    pub fn init(input_dim: usize, rng: &mut Rng) -> Self {
        let mut net = Self::zeros(input_dim);
        net.frequencies
            .data_mut()
            .iter_mut()
            .for_each(|w| *w = rng.uniform_range(-0.5, 0.5));
        let bound = 1.0 / (HIDDEN as f64).sqrt();
        net.coefficients
            .data_mut()
            .iter_mut()
            .for_each(|w| *w = rng.uniform_range(-bound, bound));
        net.output_bias
            .iter_mut()
            .for_each(|b| *b = rng.uniform_range(-bound, bound));
        net
    }

    pub fn input_dim(&self) -> usize {
        self.frequencies.shape()[1]
    }

    pub fn layout(input_dim: usize) -> Vec<ParamSpec> {
        vec![
            ParamSpec::new("frequencies", &[FREQUENCIES, input_dim]),
            ParamSpec::new("phases", &[FREQUENCIES]),
            ParamSpec::new("coefficients", &[4, HIDDEN]),
            ParamSpec::new("output_bias", &[4]),
        ]
    }

    /// The frequency matrix with every row repeated, i.e. the first-layer
    /// weight seen by the 64 hidden units.
    pub fn expanded_frequencies(&self) -> Tensor {
        let d = self.input_dim();
        let mut data = Vec::with_capacity(HIDDEN * d);
        for row in self.frequencies.data().chunks(d) {
            data.extend_from_slice(row);
            data.extend_from_slice(row);
        }
        Tensor::new(vec![HIDDEN, d], data).expect("consistent shape")
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut v = self.frequencies.data().to_vec();
        v.extend_from_slice(&self.phases);
        v.extend_from_slice(self.coefficients.data());
        v.extend_from_slice(&self.output_bias);
        v
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let sizes = [self.frequencies.len(), FREQUENCIES, 4 * HIDDEN, 4];
        if flat.len() != sizes.iter().sum::<usize>() {
            return Err(Error::domain(format!(
                "fourier net expects {} parameters, got {}",
                sizes.iter().sum::<usize>(),
                flat.len()
            )));
        }
        let (a, rest) = flat.split_at(sizes[0]);
        let (b, rest) = rest.split_at(sizes[1]);
        let (c, d) = rest.split_at(sizes[2]);
        self.frequencies.data_mut().copy_from_slice(a);
        self.phases.copy_from_slice(b);
        self.coefficients.data_mut().copy_from_slice(c);
        self.output_bias.copy_from_slice(d);
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, FourierCache)> {
        let arguments = linear_forward(&self.frequencies, &self.phases, x)?;
        let mut hidden = Vec::with_capacity(HIDDEN);
        for a in &arguments {
            let (s, c) = a.sin_cos();
            hidden.push(s);
            hidden.push(c);
        }
        let logits = linear_forward(&self.coefficients, &self.output_bias, &hidden)?;
        Ok((
            logits,
            FourierCache {
                input: x.to_vec(),
                arguments,
                hidden,
            },
        ))
    }

    pub fn backward(&self, cache: &FourierCache, cot: &[f64]) -> Result<Cotangents> {
        let out = linear_backward(&self.coefficients, &cache.hidden, cot)?;
        let d_args: Vec<f64> = cache
            .arguments
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let (s, c) = a.sin_cos();
                c * out.input[2 * i] - s * out.input[2 * i + 1]
            })
            .collect();
        let first = linear_backward(&self.frequencies, &cache.input, &d_args)?;
        let mut params = first.weight;
        params.extend(first.bias);
        params.extend(out.weight);
        params.extend(out.bias);
        Ok(Cotangents {
            input: first.input,
            params: Some(params),
        })
    }
}
