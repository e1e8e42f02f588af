use super::layer::{Layer, LayerGrad, Network};
use super::ops::{
    leaky_relu, leaky_relu_backward, relu, relu_backward, tanh, tanh_backward, LEAKY_SLOPE,
};
use super::tensor::{Scalar, Tensor};
use super::NnetError;

/// Generator architecture: `n = log2(image_size)` stride-2 encoder layers
/// down to 1x1, then `n` transposed-convolution decoder layers back up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UNetConfig {
    pub image_size: usize,
    pub base_channels: usize,
}

impl UNetConfig {
    pub fn new(image_size: usize, base_channels: usize) -> Result<Self, NnetError> {
        if !image_size.is_power_of_two() || !(2..=128).contains(&image_size) {
            return Err(NnetError::Config(format!(
                "image size must be a power of two in [2, 128], got {image_size}"
            )));
        }
        if base_channels == 0 {
            return Err(NnetError::Config("base_channels must be positive".into()));
        }
        Ok(Self {
            image_size,
            base_channels,
        })
    }

    pub fn depth(&self) -> usize {
        self.image_size.trailing_zeros() as usize
    }

    /// Output channels of encoder layer `i` (1-based), capped at 8x base.
    pub fn channels(&self, i: usize) -> usize {
        (self.base_channels << (i - 1).min(3)).min(8 * self.base_channels)
    }
}

/// Encoder-decoder generator with skip connections between mirrored layers.
///
/// Encoder: `e1 = conv(x)`, `ei = conv(lrelu(e(i-1)))`. Decoder:
/// `d1 = deconv(relu(en))`, `dj = deconv(relu([d(j-1), e(n-j+1)]))`, and the
/// output is `tanh(dn)`.
#[derive(Clone, Debug, PartialEq)]
pub struct UNet<T> {
    cfg: UNetConfig,
    layers: Vec<Layer<T>>,
}

/// Intermediate values of a forward pass, consumed by [`UNet::backward`].
#[derive(Clone, Debug)]
pub struct UNetCache<T> {
    inputs: Vec<Tensor<T>>,
    raw: Vec<Tensor<T>>,
    pub output: Tensor<T>,
}

impl<T: Scalar> UNet<T> {
    /// Zero-initialized generator.
    pub fn new(cfg: UNetConfig) -> Self {
        let n = cfg.depth();
        let mut layers = Vec::with_capacity(2 * n);
        for i in 1..=n {
            let c_in = if i == 1 { 1 } else { cfg.channels(i - 1) };
            layers.push(Layer::conv(format!("enc{i}"), c_in, cfg.channels(i), 2, 1));
        }
        for j in 1..=n {
            let e = n - j + 1;
            let c_in = if j == 1 {
                cfg.channels(n)
            } else {
                2 * cfg.channels(e)
            };
            let c_out = if j == n { 1 } else { cfg.channels(e - 1) };
            layers.push(Layer::deconv(format!("dec{j}"), c_in, c_out));
        }
        Self { cfg, layers }
    }

    pub fn config(&self) -> UNetConfig {
        self.cfg
    }

    pub fn from_layers(cfg: UNetConfig, layers: Vec<Layer<T>>) -> Result<Self, NnetError> {
        let reference = Self::new(cfg);
        check_layout(&reference.layers, &layers)?;
        Ok(Self { cfg, layers })
    }

    pub fn cast<U: Scalar>(&self) -> UNet<U> {
        UNet {
            cfg: self.cfg,
            layers: self.layers.iter().map(Layer::cast).collect(),
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<UNetCache<T>, NnetError> {
        let s = self.cfg.image_size;
        if x.shape() != [1, s, s] {
            return Err(NnetError::Shape(format!(
                "generator expects [1, {s}, {s}], got {:?}",
                x.shape()
            )));
        }
        let n = self.cfg.depth();
        let mut inputs = Vec::with_capacity(2 * n);
        let mut raw: Vec<Tensor<T>> = Vec::with_capacity(2 * n);
        for k in 0..n {
            let input = if k == 0 {
                x.clone()
            } else {
                leaky_relu(&raw[k - 1], LEAKY_SLOPE)
            };
            raw.push(self.layers[k].forward(&input)?);
            inputs.push(input);
        }
        for j in 0..n {
            let joined = if j == 0 {
                raw[n - 1].clone()
            } else {
                Tensor::concat_channels(&raw[n + j - 1], &raw[n - 1 - j])?
            };
            let input = relu(&joined);
            raw.push(self.layers[n + j].forward(&input)?);
            inputs.push(input);
        }
        let output = tanh(&raw[2 * n - 1]);
        Ok(UNetCache {
            inputs,
            raw,
            output,
        })
    }

    /// Parameter gradients given `d_out`, the gradient with respect to the
    /// tanh output.
    pub fn backward(
        &self,
        cache: &UNetCache<T>,
        d_out: &Tensor<T>,
    ) -> Result<Vec<LayerGrad<T>>, NnetError> {
        let n = self.cfg.depth();
        let mut d_raw: Vec<Option<Tensor<T>>> = vec![None; 2 * n];
        let mut grads: Vec<Option<LayerGrad<T>>> = vec![None; 2 * n];
        let accumulate = |slot: &mut Option<Tensor<T>>, g: Tensor<T>| match slot {
            Some(t) => t.add_assign(&g),
            None => *slot = Some(g),
        };
        d_raw[2 * n - 1] = Some(tanh_backward(&cache.output, d_out));
        for j in (0..n).rev() {
            let l = n + j;
            let dy = d_raw[l].take().expect("decoder gradient is set before use");
            let (dx, g) = self.layers[l].backward(&cache.inputs[l], &dy, true)?;
            grads[l] = Some(g);
            let joined = if j == 0 {
                cache.raw[n - 1].clone()
            } else {
                Tensor::concat_channels(&cache.raw[n + j - 1], &cache.raw[n - 1 - j])?
            };
            let d_joined = relu_backward(&joined, &dx.expect("requested"));
            if j == 0 {
                accumulate(&mut d_raw[n - 1], d_joined);
            } else {
                let (d_prev, d_skip) = d_joined.split_channels(cache.raw[n + j - 1].shape()[0]);
                accumulate(&mut d_raw[n + j - 1], d_prev);
                accumulate(&mut d_raw[n - 1 - j], d_skip);
            }
        }
        for k in (0..n).rev() {
            let dy = d_raw[k].take().expect("encoder gradient is set before use");
            let (dx, g) = self.layers[k].backward(&cache.inputs[k], &dy, k > 0)?;
            grads[k] = Some(g);
            if k > 0 {
                let d =
                    leaky_relu_backward(&cache.raw[k - 1], &dx.expect("requested"), LEAKY_SLOPE);
                accumulate(&mut d_raw[k - 1], d);
            }
        }
        Ok(grads
            .into_iter()
            .map(|g| g.expect("every layer visited"))
            .collect())
    }
}

impl<T: Scalar> Network<T> for UNet<T> {
    fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }
    fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }
}

pub(crate) fn check_layout<T: Scalar>(
    reference: &[Layer<T>],
    got: &[Layer<T>],
) -> Result<(), NnetError> {
    if reference.len() != got.len() {
        return Err(NnetError::Shape(format!(
            "expected {} layers, got {}",
            reference.len(),
            got.len()
        )));
    }
    for (r, g) in reference.iter().zip(got) {
        if r.name != g.name
            || r.kind != g.kind
            || r.weight.shape() != g.weight.shape()
            || r.bias.shape() != g.bias.shape()
        {
            return Err(NnetError::Shape(format!(
                "layer {} does not match the architecture",
                r.name
            )));
        }
    }
    Ok(())
}
