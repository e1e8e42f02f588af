use super::ops::sigmoid_scalar;
use super::tensor::{Scalar, Tensor};

/// Mean binary cross-entropy of `sigmoid(logits)` against a constant label,
/// `max(z, 0) - z t + ln(1 + e^-|z|)`, and its gradient with respect to the logits.
pub fn bce_with_logits<T: Scalar>(logits: &Tensor<T>, label: f64) -> (f64, Tensor<T>) {
    let n = logits.len() as f64;
    let loss = logits
        .data()
        .iter()
        .map(|z| {
            let z = z.as_f64();
            z.max(0.0) - z * label + (-z.abs()).exp().ln_1p()
        })
        .sum::<f64>()
        / n;
    let t = T::of(label);
    let inv = T::of(1.0 / n);
    (loss, logits.map(|z| (sigmoid_scalar(z) - t) * inv))
}

/// Mean absolute error and its subgradient (zero where the values agree).
pub fn l1_loss<T: Scalar>(output: &Tensor<T>, target: &Tensor<T>) -> (f64, Tensor<T>) {
    let n = output.len() as f64;
    let loss = output
        .data()
        .iter()
        .zip(target.data())
        .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
        .sum::<f64>()
        / n;
    let inv = T::of(1.0 / n);
    let grad = output.zip_map(target, |a, b| {
        if a > b {
            inv
        } else if a < b {
            -inv
        } else {
            T::zero()
        }
    });
    (loss, grad)
}

/// Discriminator and generator objectives for one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GanLosses {
    /// BCE(real -> 1) + BCE(fake -> 0).
    pub loss_d: f64,
    /// `loss_g_adv + lambda * l1`.
    pub loss_g: f64,
    /// BCE(fake -> 1).
    pub loss_g_adv: f64,
    /// Unweighted mean |output - target|.
    pub l1: f64,
}

pub fn gan_losses<T: Scalar>(
    real_logits: &Tensor<T>,
    fake_logits: &Tensor<T>,
    gen_out: &Tensor<T>,
    target: &Tensor<T>,
    lambda_l1: f64,
) -> GanLosses {
    let (real, _) = bce_with_logits(real_logits, 1.0);
    let (fake, _) = bce_with_logits(fake_logits, 0.0);
    let (adv, _) = bce_with_logits(fake_logits, 1.0);
    let (l1, _) = l1_loss(gen_out, target);
    GanLosses {
        loss_d: real + fake,
        loss_g: adv + lambda_l1 * l1,
        loss_g_adv: adv,
        l1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::gradcheck::{max_relative_error, numeric_gradient};

    #[test]
    fn zero_logits_give_ln2() {
        let z = Tensor::<f64>::zeros(&[1, 2, 2]);
        let (l, _) = bce_with_logits(&z, 1.0);
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        let out = Tensor::from_fn(&[1, 4, 4], |i| i as f64 / 16.0);
        let g = gan_losses(&z, &z, &out, &out, 100.0);
        assert!((g.loss_d - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((g.loss_g_adv - 0.6931).abs() < 1e-4);
        assert_eq!(g.l1, 0.0);
        assert_eq!(g.loss_g, g.loss_g_adv);
    }

    #[test]
    fn lambda_zero_is_pure_adversarial() {
        let z = Tensor::from_vec(&[1, 1, 2], vec![0.3, -2.0]).unwrap();
        let a = Tensor::from_vec(&[1, 1, 2], vec![0.5, -0.5]).unwrap();
        let b = Tensor::from_vec(&[1, 1, 2], vec![-0.5, 0.25]).unwrap();
        let g = gan_losses(&z, &z, &a, &b, 0.0);
        assert_eq!(g.loss_g, g.loss_g_adv);
        assert!((g.l1 - 0.875).abs() < 1e-15);
    }

    #[test]
    fn stable_for_large_logits() {
        let z = Tensor::from_vec(&[2], vec![1000.0f32, -1000.0]).unwrap();
        let (l, g) = bce_with_logits(&z, 1.0);
        assert!((l - 500.0).abs() < 1e-9);
        assert!(g.all_finite());
    }

    #[test]
    fn gradients_match_differences() {
        let z = Tensor::from_vec(&[4], vec![-1.5, -0.2, 0.4, 2.0]).unwrap();
        for label in [0.0, 1.0] {
            let (_, g) = bce_with_logits(&z, label);
            let n = numeric_gradient(&z, |t| bce_with_logits(t, label).0);
            assert!(max_relative_error(g.data(), &n) < 1e-6);
        }
        let t = Tensor::from_vec(&[4], vec![0.0, 0.5, -0.3, 1.0]).unwrap();
        let (_, g) = l1_loss(&z, &t);
        let n = numeric_gradient(&z, |x| l1_loss(x, &t).0);
        assert!(max_relative_error(g.data(), &n) < 1e-6);
    }
}
