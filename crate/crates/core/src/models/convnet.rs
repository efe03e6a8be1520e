use crate::error::{Error, Result};
use crate::numcore::layers::{
    conv2d_backward, conv2d_forward, linear_backward, linear_forward, maxpool2x2_backward,
    maxpool2x2_forward, relu_backward, relu_forward,
};
use crate::numcore::Tensor;
use crate::rng::Rng;

use super::{Cotangents, ParamSpec};

pub const CHANNELS: usize = 6;
pub const KERNEL: usize = 5;
pub const CONV_OUT: usize = 12;
pub const POOLED: usize = 6;
pub const HIDDEN: usize = CHANNELS * POOLED * POOLED;

/// Conv(1→6, 5×5, valid) → ReLU → 2×2 max pool → linear(216→4).
#[derive(Clone, Debug, PartialEq)]
pub struct ConvNet {
    pub conv_weight: Tensor,
    pub conv_bias: Vec<f64>,
    pub linear_weight: Tensor,
    pub linear_bias: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ConvCache {
    input: Tensor,
    pre_activation: Tensor,
    argmax: Vec<usize>,
    pooled: Vec<f64>,
}

impl ConvNet {
    pub fn zeros() -> Self {
        Self {
            conv_weight: Tensor::zeros(vec![CHANNELS, 1, KERNEL, KERNEL]),
            conv_bias: vec![0.0; CHANNELS],
            linear_weight: Tensor::zeros(vec![4, HIDDEN]),
            linear_bias: vec![0.0; 4],
        }
    }

    /// Fan-in uniform initialization `U(-1/√fan_in, 1/√fan_in)`.
    pub fn init(rng: &mut Rng) -> Self {
        let mut net = Self::zeros();
        let conv_bound = 1.0 / ((KERNEL * KERNEL) as f64).sqrt();
        let lin_bound = 1.0 / (HIDDEN as f64).sqrt();
        net.conv_weight
            .data_mut()
            .iter_mut()
            .for_each(|w| *w = rng.uniform_range(-conv_bound, conv_bound));
        net.conv_bias
            .iter_mut()
            .for_each(|b| *b = rng.uniform_range(-conv_bound, conv_bound));
        net.linear_weight
            .data_mut()
            .iter_mut()
            .for_each(|w| *w = rng.uniform_range(-lin_bound, lin_bound));
        net.linear_bias
            .iter_mut()
            .for_each(|b| *b = rng.uniform_range(-lin_bound, lin_bound));
        net
    }

    pub fn layout() -> Vec<ParamSpec> {
        vec![
            ParamSpec::new("conv_weight", &[CHANNELS, 1, KERNEL, KERNEL]),
            ParamSpec::new("conv_bias", &[CHANNELS]),
            ParamSpec::new("linear_weight", &[4, HIDDEN]),
            ParamSpec::new("linear_bias", &[4]),
        ]
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut v = self.conv_weight.data().to_vec();
        v.extend_from_slice(&self.conv_bias);
        v.extend_from_slice(self.linear_weight.data());
        v.extend_from_slice(&self.linear_bias);
        v
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let sizes = [CHANNELS * KERNEL * KERNEL, CHANNELS, 4 * HIDDEN, 4];
        if flat.len() != sizes.iter().sum::<usize>() {
            return Err(Error::domain(format!("convnet expects 1024 parameters, got {}", flat.len())));
        }
        let (a, rest) = flat.split_at(sizes[0]);
        let (b, rest) = rest.split_at(sizes[1]);
        let (c, d) = rest.split_at(sizes[2]);
        self.conv_weight.data_mut().copy_from_slice(a);
        self.conv_bias.copy_from_slice(b);
        self.linear_weight.data_mut().copy_from_slice(c);
        self.linear_bias.copy_from_slice(d);
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ConvCache)> {
        let input = Tensor::new(vec![1, 16, 16], x.to_vec())
            .map_err(|_| Error::domain(format!("convnet expects a 16x16 image, got {} values", x.len())))?;
        let pre_activation = conv2d_forward(&input, &self.conv_weight, &self.conv_bias)?;
        let activated = Tensor::new(
            pre_activation.shape().to_vec(),
            relu_forward(pre_activation.data()),
        )?;
        let (pooled, argmax) = maxpool2x2_forward(&activated)?;
        let pooled = pooled.into_data();
        let logits = linear_forward(&self.linear_weight, &self.linear_bias, &pooled)?;
        Ok((
            logits,
            ConvCache {
                input,
                pre_activation,
                argmax,
                pooled,
            },
        ))
    }

    pub fn backward(&self, cache: &ConvCache, cot: &[f64]) -> Result<Cotangents> {
        let lin = linear_backward(&self.linear_weight, &cache.pooled, cot)?;
        let d_act = maxpool2x2_backward(cache.pre_activation.len(), &cache.argmax, &lin.input)?;
        let d_pre = Tensor::new(
            cache.pre_activation.shape().to_vec(),
            relu_backward(cache.pre_activation.data(), &d_act),
        )?;
        let conv = conv2d_backward(&cache.input, &self.conv_weight, &d_pre)?;
        let mut params = conv.weight;
        params.extend(conv.bias);
        params.extend(lin.weight);
        params.extend(lin.bias);
        Ok(Cotangents {
            input: conv.input,
            params: Some(params),
        })
    }
}
