use super::layer::{LayerGrad, Network};
use super::tensor::{Scalar, Tensor};
use super::NnetError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update of a flat parameter slice at step `t >= 1`.
pub fn adam_update<T: Scalar>(
    param: &mut [T],
    grad: &[T],
    m: &mut [T],
    v: &mut [T],
    t: u64,
    cfg: &AdamConfig,
) {
    assert!(t >= 1, "Adam steps are counted from 1");
    let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
    let c1 = T::of(1.0 / (1.0 - cfg.beta1.powf(t as f64)));
    let c2 = T::of(1.0 / (1.0 - cfg.beta2.powf(t as f64)));
    let (lr, eps) = (T::of(cfg.lr), T::of(cfg.eps));
    let one = T::one();
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = b1 * m[i] + (one - b1) * g;
        v[i] = b2 * v[i] + (one - b2) * g * g;
        param[i] -= lr * (m[i] * c1) / ((v[i] * c2).sqrt() + eps);
    }
}

/// Adam state for every parameter of a network, weights before biases.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam<T> {
    pub cfg: AdamConfig,
    pub step: u64,
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new<N: Network<T>>(net: &N, cfg: AdamConfig) -> Self {
        let zeros: Vec<Tensor<T>> = net
            .named_params()
            .into_iter()
            .map(|(_, t)| Tensor::zeros(t.shape()))
            .collect();
        Self {
            cfg,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Applies one update. Non-finite gradients abort before anything changes.
    pub fn step<N: Network<T>>(
        &mut self,
        net: &mut N,
        grads: &[LayerGrad<T>],
    ) -> Result<(), NnetError> {
        for (layer, g) in net.layers().iter().zip(grads) {
            if !g.weight.all_finite() {
                return Err(NnetError::NonFiniteGradient(format!(
                    "{}.weight",
                    layer.name
                )));
            }
            if !g.bias.all_finite() {
                return Err(NnetError::NonFiniteGradient(format!("{}.bias", layer.name)));
            }
        }
        self.step += 1;
        for (i, (layer, g)) in net.layers_mut().iter_mut().zip(grads).enumerate() {
            let (wi, bi) = (2 * i, 2 * i + 1);
            adam_update(
                layer.weight.data_mut(),
                g.weight.data(),
                self.m[wi].data_mut(),
                self.v[wi].data_mut(),
                self.step,
                &self.cfg,
            );
            adam_update(
                layer.bias.data_mut(),
                g.bias.data(),
                self.m[bi].data_mut(),
                self.v[bi].data_mut(),
                self.step,
                &self.cfg,
            );
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::unet::{UNet, UNetConfig};

    const CFG: AdamConfig = AdamConfig {
        lr: 1e-3,
        beta1: 0.9,
        beta2: 0.999,
        eps: 1e-8,
    };

    #[test]
    fn first_step_closed_form() {
        let (mut p, mut m, mut v) = ([0.0f64], [0.0], [0.0]);
        adam_update(&mut p, &[1.0], &mut m, &mut v, 1, &CFG);
        assert!((p[0] + 1e-3 / (1.0 + 1e-8)).abs() < 1e-15);
        assert!((p[0] + 9.99999e-4).abs() < 1e-9);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let (mut p, mut m, mut v) = ([0.7f64, -1.0], [0.0; 2], [0.0; 2]);
        adam_update(&mut p, &[0.0, 0.0], &mut m, &mut v, 1, &CFG);
        assert_eq!(p, [0.7, -1.0]);
    }

    #[test]
    fn constant_gradient_moves_monotonically() {
        let (mut p, mut m, mut v) = ([1.0f64], [0.0], [0.0]);
        let mut last = p[0];
        for t in 1..=2 {
            adam_update(&mut p, &[0.5], &mut m, &mut v, t, &CFG);
            assert!(p[0] < last);
            last = p[0];
        }
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut net = UNet::<f32>::new(UNetConfig::new(4, 1).unwrap());
        let mut adam = Adam::new(&net, AdamConfig::default());
        let mut grads: Vec<LayerGrad<f32>> =
            net.layers().iter().map(LayerGrad::zeros_like).collect();
        grads[2].bias.data_mut()[0] = f32::NAN;
        let before = net.clone();
        match adam.step(&mut net, &grads) {
            Err(NnetError::NonFiniteGradient(name)) => assert_eq!(name, "dec1.bias"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(net, before);
        assert_eq!(adam.step, 0);
    }
}
