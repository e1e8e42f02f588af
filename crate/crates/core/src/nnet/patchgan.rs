use super::layer::{Layer, LayerGrad, Network};
use super::ops::{conv_out_len, leaky_relu, leaky_relu_backward, LEAKY_SLOPE};
use super::tensor::{Scalar, Tensor};
use super::unet::check_layout;
use super::NnetError;

/// Discriminator architecture: `num_down_layers` stride-2 convolutions, one
/// stride-1 convolution, then a stride-1 convolution to a single logit channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchGanConfig {
    pub num_down_layers: usize,
    pub base_channels: usize,
}

impl Default for PatchGanConfig {
    fn default() -> Self {
        Self {
            num_down_layers: 3,
            base_channels: 8,
        }
    }
}

impl PatchGanConfig {
    fn channels(&self, i: usize) -> usize {
        (self.base_channels << (i - 1).min(3)).min(8 * self.base_channels)
    }

    /// Side of the logit map for a square `image_size` input, if positive.
    pub fn map_size(&self, image_size: usize) -> Option<usize> {
        let mut s = image_size;
        for _ in 0..self.num_down_layers {
            s = conv_out_len(s, 4, 2, 1)?;
        }
        for _ in 0..2 {
            s = conv_out_len(s, 4, 1, 1)?;
        }
        (s > 0).then_some(s)
    }
}

/// Conditional patch discriminator over the channel stack `[x, y]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchGan<T> {
    cfg: PatchGanConfig,
    layers: Vec<Layer<T>>,
}

#[derive(Clone, Debug)]
pub struct PatchGanCache<T> {
    inputs: Vec<Tensor<T>>,
    raw: Vec<Tensor<T>>,
    pub logits: Tensor<T>,
}

impl<T: Scalar> PatchGan<T> {
    pub fn new(cfg: PatchGanConfig) -> Result<Self, NnetError> {
        if cfg.num_down_layers == 0 || cfg.base_channels == 0 {
            return Err(NnetError::Config(
                "discriminator needs at least one down layer and one channel".into(),
            ));
        }
        let l = cfg.num_down_layers;
        let mut layers = Vec::with_capacity(l + 2);
        for i in 1..=l {
            let c_in = if i == 1 { 2 } else { cfg.channels(i - 1) };
            layers.push(Layer::conv(format!("down{i}"), c_in, cfg.channels(i), 2, 1));
        }
        layers.push(Layer::conv(
            "patch",
            cfg.channels(l),
            cfg.channels(l + 1),
            1,
            1,
        ));
        layers.push(Layer::conv("logit", cfg.channels(l + 1), 1, 1, 1));
        Ok(Self { cfg, layers })
    }

    pub fn config(&self) -> PatchGanConfig {
        self.cfg
    }

    pub fn from_layers(cfg: PatchGanConfig, layers: Vec<Layer<T>>) -> Result<Self, NnetError> {
        check_layout(&Self::new(cfg)?.layers, &layers)?;
        Ok(Self { cfg, layers })
    }

    pub fn cast<U: Scalar>(&self) -> PatchGan<U> {
        PatchGan {
            cfg: self.cfg,
            layers: self.layers.iter().map(Layer::cast).collect(),
        }
    }

    pub fn forward(
        &self,
        x_cond: &Tensor<T>,
        y: &Tensor<T>,
    ) -> Result<PatchGanCache<T>, NnetError> {
        if x_cond.shape() != y.shape() {
            return Err(NnetError::Shape(format!(
                "condition {:?} and candidate {:?} differ",
                x_cond.shape(),
                y.shape()
            )));
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut raw: Vec<Tensor<T>> = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let input = if k == 0 {
                Tensor::concat_channels(x_cond, y)?
            } else {
                leaky_relu(&raw[k - 1], LEAKY_SLOPE)
            };
            raw.push(layer.forward(&input)?);
            inputs.push(input);
        }
        let logits = raw[last].clone();
        Ok(PatchGanCache {
            inputs,
            raw,
            logits,
        })
    }

    /// Parameter gradients and, if requested, the gradient with respect to `y`.
    pub fn backward(
        &self,
        cache: &PatchGanCache<T>,
        d_logits: &Tensor<T>,
        need_dy: bool,
    ) -> Result<(Vec<LayerGrad<T>>, Option<Tensor<T>>), NnetError> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut d = d_logits.clone();
        let mut d_input = None;
        for k in (0..self.layers.len()).rev() {
            let need = k > 0 || need_dy;
            let (dx, g) = self.layers[k].backward(&cache.inputs[k], &d, need)?;
            grads.push(g);
            if k > 0 {
                d = leaky_relu_backward(&cache.raw[k - 1], &dx.expect("requested"), LEAKY_SLOPE);
            } else {
                d_input = dx;
            }
        }
        grads.reverse();
        let dy = d_input.map(|t| t.split_channels(1).1);
        Ok((grads, dy))
    }
}

impl<T: Scalar> Network<T> for PatchGan<T> {
    fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }
    fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }
}
