use super::ops::{conv2d_backward, conv2d_forward, deconv2d_backward, deconv2d_forward, ConvGrads};
use super::tensor::{Scalar, Tensor};
use super::NnetError;
use crate::image::Rng;

/// Kernel size of every layer.
pub const KERNEL: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    Deconv,
}

/// One learnable (transposed) convolution with its weights and bias.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub name: String,
    pub kind: LayerKind,
    pub stride: usize,
    pub pad: usize,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Weight and bias gradients of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> LayerGrad<T> {
    pub fn zeros_like(layer: &Layer<T>) -> Self {
        Self {
            weight: Tensor::zeros(layer.weight.shape()),
            bias: Tensor::zeros(layer.bias.shape()),
        }
    }
}

impl<T: Scalar> Layer<T> {
    /// Zero-initialized convolution `c_in -> c_out`.
    pub fn conv(
        name: impl Into<String>,
        c_in: usize,
        c_out: usize,
        stride: usize,
        pad: usize,
    ) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::Conv,
            stride,
            pad,
            weight: Tensor::zeros(&[c_out, c_in, KERNEL, KERNEL]),
            bias: Tensor::zeros(&[c_out]),
        }
    }

    /// Zero-initialized transposed convolution `c_in -> c_out` (kernel 4, stride 2, pad 1).
    pub fn deconv(name: impl Into<String>, c_in: usize, c_out: usize) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::Deconv,
            stride: 2,
            pad: 1,
            weight: Tensor::zeros(&[c_in, c_out, KERNEL, KERNEL]),
            bias: Tensor::zeros(&[c_out]),
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnetError> {
        match self.kind {
            LayerKind::Conv => conv2d_forward(x, &self.weight, &self.bias, self.stride, self.pad),
            LayerKind::Deconv => {
                deconv2d_forward(x, &self.weight, &self.bias, self.stride, self.pad)
            }
        }
        .map_err(|e| e.in_layer(&self.name))
    }

    pub fn backward(
        &self,
        x: &Tensor<T>,
        dy: &Tensor<T>,
        need_dx: bool,
    ) -> Result<(Option<Tensor<T>>, LayerGrad<T>), NnetError> {
        let ConvGrads { dx, dw, db } = match self.kind {
            LayerKind::Conv => conv2d_backward(x, &self.weight, dy, self.stride, self.pad, need_dx),
            LayerKind::Deconv => {
                deconv2d_backward(x, &self.weight, dy, self.stride, self.pad, need_dx)
            }
        }
        .map_err(|e| e.in_layer(&self.name))?;
        Ok((
            dx,
            LayerGrad {
                weight: dw,
                bias: db,
            },
        ))
    }

    /// Xavier-uniform weights and zero bias.
    pub fn xavier(&mut self, rng: &mut Rng) {
        self.weight = xavier_init(self.weight.shape(), rng).expect("layer weights are 4-D");
        self.bias.fill(T::zero());
    }

    pub fn cast<U: Scalar>(&self) -> Layer<U> {
        Layer {
            name: self.name.clone(),
            kind: self.kind,
            stride: self.stride,
            pad: self.pad,
            weight: self.weight.cast(),
            bias: self.bias.cast(),
        }
    }
}

/// Xavier-uniform tensor: `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`,
/// where `fan_in = shape[1] * r`, `fan_out = shape[0] * r` and `r` is the
/// product of the remaining extents.
pub fn xavier_init<T: Scalar>(shape: &[usize], rng: &mut Rng) -> Result<Tensor<T>, NnetError> {
    if shape.len() < 2 {
        return Err(NnetError::Shape(format!(
            "Xavier initialization needs at least 2 extents, got {shape:?}"
        )));
    }
    let receptive: usize = shape[2..].iter().product();
    let fan_in = shape[1] * receptive;
    let fan_out = shape[0] * receptive;
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Ok(Tensor::from_fn(shape, |_| {
        T::of(rng.uniform(-bound, bound))
    }))
}

/// A network exposed as an ordered list of layers.
pub trait Network<T: Scalar> {
    fn layers(&self) -> &[Layer<T>];
    fn layers_mut(&mut self) -> &mut [Layer<T>];

    /// `(name, tensor)` for every parameter, weights before biases, in layer order.
    fn named_params(&self) -> Vec<(String, &Tensor<T>)> {
        self.layers()
            .iter()
            .flat_map(|l| {
                [
                    (format!("{}.weight", l.name), &l.weight),
                    (format!("{}.bias", l.name), &l.bias),
                ]
            })
            .collect()
    }

    fn param_count(&self) -> usize {
        self.layers()
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    fn xavier(&mut self, rng: &mut Rng) {
        self.layers_mut().iter_mut().for_each(|l| l.xavier(rng));
    }
}
