//! Convolution, transposed convolution and activations, forward and backward.
//!
//! Activations are single-sample `(C, H, W)` tensors. Convolution weights are
//! `(out, in, k, k)`; transposed-convolution weights are `(in, out, k, k)`, so
//! the same weight tensor used by both gives a pair of adjoint operators.

use super::tensor::{Scalar, Tensor};
use super::NnetError;

pub const LEAKY_SLOPE: f64 = 0.2;

/// Gradients of a (transposed) convolution.
#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub dx: Option<Tensor<T>>,
    pub dw: Tensor<T>,
    pub db: Tensor<T>,
}

/// Range of small-grid indices `i` with `i*stride + k - pad` inside `[0, big)`.
fn valid_range(k: usize, pad: usize, stride: usize, big: usize, small: usize) -> (usize, usize) {
    let lo = if k >= pad {
        0
    } else {
        (pad - k).div_ceil(stride)
    };
    let hi = if big + pad > k {
        ((big - 1 + pad - k) / stride + 1).min(small)
    } else {
        0
    };
    (lo, hi.max(lo))
}

fn weight_dims<T: Scalar>(w: &Tensor<T>) -> Result<(usize, usize, usize), NnetError> {
    match w.shape()[..] {
        [a, b, k, k2] if k == k2 => Ok((a, b, k)),
        _ => Err(NnetError::Shape(format!(
            "weights must be (a, b, k, k), got {:?}",
            w.shape()
        ))),
    }
}

fn check_bias<T: Scalar>(b: &Tensor<T>, n: usize) -> Result<(), NnetError> {
    if b.shape() != [n] {
        return Err(NnetError::Shape(format!(
            "bias must be [{n}], got {:?}",
            b.shape()
        )));
    }
    Ok(())
}

/// Output extent of a convolution along one axis.
pub fn conv_out_len(len: usize, k: usize, stride: usize, pad: usize) -> Option<usize> {
    (len + 2 * pad >= k && stride > 0).then(|| (len + 2 * pad - k) / stride + 1)
}

/// Output extent of a transposed convolution along one axis.
pub fn deconv_out_len(len: usize, k: usize, stride: usize, pad: usize) -> Option<usize> {
    let full = (len.checked_sub(1)?) * stride + k;
    (full > 2 * pad && stride > 0).then(|| full - 2 * pad)
}

fn conv_shapes<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Result<((usize, usize, usize), (usize, usize, usize)), NnetError> {
    let (c, h, wd) = x.dims3()?;
    let (o, ci, k) = weight_dims(w)?;
    if ci != c {
        return Err(NnetError::Shape(format!(
            "convolution expects {ci} input channels, got {c}"
        )));
    }
    let oh = conv_out_len(h, k, stride, pad);
    let ow = conv_out_len(wd, k, stride, pad);
    match (oh, ow) {
        (Some(oh), Some(ow)) if oh > 0 && ow > 0 => Ok(((c, h, wd), (o, oh, ow))),
        _ => Err(NnetError::Shape(format!(
            "{h}x{wd} input too small for kernel {k} with padding {pad}"
        ))),
    }
}

/// Cross-correlation with zero padding.
pub fn conv2d_forward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Result<Tensor<T>, NnetError> {
    let ((c, h, wd), (o, oh, ow)) = conv_shapes(x, w, stride, pad)?;
    check_bias(b, o)?;
    let k = w.shape()[2];
    let (xd, wt) = (x.data(), w.data());
    let mut out = Tensor::zeros(&[o, oh, ow]);
    let yd = out.data_mut();
    for oc in 0..o {
        let plane = &mut yd[oc * oh * ow..(oc + 1) * oh * ow];
        plane.fill(b.data()[oc]);
        for ic in 0..c {
            let xp = &xd[ic * h * wd..(ic + 1) * h * wd];
            for ky in 0..k {
                let (y0, y1) = valid_range(ky, pad, stride, h, oh);
                for kx in 0..k {
                    let wv = wt[((oc * c + ic) * k + ky) * k + kx];
                    let (x0, x1) = valid_range(kx, pad, stride, wd, ow);
                    for oy in y0..y1 {
                        let iy = oy * stride + ky - pad;
                        let row = &xp[iy * wd..(iy + 1) * wd];
                        let orow = &mut plane[oy * ow..(oy + 1) * ow];
                        for ox in x0..x1 {
                            orow[ox] += wv * row[ox * stride + kx - pad];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of [`conv2d_forward`] given the upstream gradient `dy`.
pub fn conv2d_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    dy: &Tensor<T>,
    stride: usize,
    pad: usize,
    need_dx: bool,
) -> Result<ConvGrads<T>, NnetError> {
    let ((c, h, wd), (o, oh, ow)) = conv_shapes(x, w, stride, pad)?;
    if dy.shape() != [o, oh, ow] {
        return Err(NnetError::Shape(format!(
            "upstream gradient {:?} does not match output [{o}, {oh}, {ow}]",
            dy.shape()
        )));
    }
    let k = w.shape()[2];
    let (xd, wt, gd) = (x.data(), w.data(), dy.data());
    let mut dw = Tensor::zeros(w.shape());
    let mut dx = need_dx.then(|| Tensor::zeros(x.shape()));
    let db = Tensor::from_fn(&[o], |oc| {
        gd[oc * oh * ow..(oc + 1) * oh * ow].iter().copied().sum()
    });
    let dwd = dw.data_mut();
    for oc in 0..o {
        let gp = &gd[oc * oh * ow..(oc + 1) * oh * ow];
        for ic in 0..c {
            let xp = &xd[ic * h * wd..(ic + 1) * h * wd];
            for ky in 0..k {
                let (y0, y1) = valid_range(ky, pad, stride, h, oh);
                for kx in 0..k {
                    let widx = ((oc * c + ic) * k + ky) * k + kx;
                    let wv = wt[widx];
                    let (x0, x1) = valid_range(kx, pad, stride, wd, ow);
                    let mut acc = T::zero();
                    for oy in y0..y1 {
                        let iy = oy * stride + ky - pad;
                        let row = &xp[iy * wd..(iy + 1) * wd];
                        let grow = &gp[oy * ow..(oy + 1) * ow];
                        for ox in x0..x1 {
                            acc += grow[ox] * row[ox * stride + kx - pad];
                        }
                    }
                    dwd[widx] += acc;
                    if let Some(dx) = dx.as_mut() {
                        let dxp = &mut dx.data_mut()[ic * h * wd..(ic + 1) * h * wd];
                        for oy in y0..y1 {
                            let iy = oy * stride + ky - pad;
                            let grow = &gp[oy * ow..(oy + 1) * ow];
                            let drow = &mut dxp[iy * wd..(iy + 1) * wd];
                            for ox in x0..x1 {
                                drow[ox * stride + kx - pad] += wv * grow[ox];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ConvGrads { dx, dw, db })
}

fn deconv_shapes<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Result<((usize, usize, usize), (usize, usize, usize)), NnetError> {
    let (c, h, wd) = x.dims3()?;
    let (ci, o, k) = weight_dims(w)?;
    if ci != c {
        return Err(NnetError::Shape(format!(
            "transposed convolution expects {ci} input channels, got {c}"
        )));
    }
    match (
        deconv_out_len(h, k, stride, pad),
        deconv_out_len(wd, k, stride, pad),
    ) {
        (Some(oh), Some(ow)) => Ok(((c, h, wd), (o, oh, ow))),
        _ => Err(NnetError::Shape(format!(
            "{h}x{wd} input gives an empty output for kernel {k}, padding {pad}"
        ))),
    }
}

/// Transposed convolution: every input site scatters a weighted kernel into
/// the output, `y[o, iy*s+ky-p, ix*s+kx-p] += x[c, iy, ix] * w[c, o, ky, kx]`.
pub fn deconv2d_forward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Result<Tensor<T>, NnetError> {
    let ((c, h, wd), (o, oh, ow)) = deconv_shapes(x, w, stride, pad)?;
    check_bias(b, o)?;
    let k = w.shape()[2];
    let (xd, wt) = (x.data(), w.data());
    let mut out = Tensor::zeros(&[o, oh, ow]);
    let yd = out.data_mut();
    for oc in 0..o {
        yd[oc * oh * ow..(oc + 1) * oh * ow].fill(b.data()[oc]);
    }
    for ic in 0..c {
        let xp = &xd[ic * h * wd..(ic + 1) * h * wd];
        for oc in 0..o {
            let plane = &mut yd[oc * oh * ow..(oc + 1) * oh * ow];
            for ky in 0..k {
                let (y0, y1) = valid_range(ky, pad, stride, oh, h);
                for kx in 0..k {
                    let wv = wt[((ic * o + oc) * k + ky) * k + kx];
                    let (x0, x1) = valid_range(kx, pad, stride, ow, wd);
                    for iy in y0..y1 {
                        let oy = iy * stride + ky - pad;
                        let row = &xp[iy * wd..(iy + 1) * wd];
                        let orow = &mut plane[oy * ow..(oy + 1) * ow];
                        for ix in x0..x1 {
                            orow[ix * stride + kx - pad] += wv * row[ix];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of [`deconv2d_forward`] given the upstream gradient `dy`.
pub fn deconv2d_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    dy: &Tensor<T>,
    stride: usize,
    pad: usize,
    need_dx: bool,
) -> Result<ConvGrads<T>, NnetError> {
    let ((c, h, wd), (o, oh, ow)) = deconv_shapes(x, w, stride, pad)?;
    if dy.shape() != [o, oh, ow] {
        return Err(NnetError::Shape(format!(
            "upstream gradient {:?} does not match output [{o}, {oh}, {ow}]",
            dy.shape()
        )));
    }
    let k = w.shape()[2];
    let (xd, wt, gd) = (x.data(), w.data(), dy.data());
    let mut dw = Tensor::zeros(w.shape());
    let mut dx = need_dx.then(|| Tensor::zeros(x.shape()));
    let db = Tensor::from_fn(&[o], |oc| {
        gd[oc * oh * ow..(oc + 1) * oh * ow].iter().copied().sum()
    });
    let dwd = dw.data_mut();
    for ic in 0..c {
        let xp = &xd[ic * h * wd..(ic + 1) * h * wd];
        for oc in 0..o {
            let gp = &gd[oc * oh * ow..(oc + 1) * oh * ow];
            for ky in 0..k {
                let (y0, y1) = valid_range(ky, pad, stride, oh, h);
                for kx in 0..k {
                    let widx = ((ic * o + oc) * k + ky) * k + kx;
                    let wv = wt[widx];
                    let (x0, x1) = valid_range(kx, pad, stride, ow, wd);
                    let mut acc = T::zero();
                    for iy in y0..y1 {
                        let oy = iy * stride + ky - pad;
                        let row = &xp[iy * wd..(iy + 1) * wd];
                        let grow = &gp[oy * ow..(oy + 1) * ow];
                        for ix in x0..x1 {
                            acc += row[ix] * grow[ix * stride + kx - pad];
                        }
                    }
                    dwd[widx] += acc;
                    if let Some(dx) = dx.as_mut() {
                        let dxp = &mut dx.data_mut()[ic * h * wd..(ic + 1) * h * wd];
                        for iy in y0..y1 {
                            let oy = iy * stride + ky - pad;
                            let grow = &gp[oy * ow..(oy + 1) * ow];
                            let drow = &mut dxp[iy * wd..(iy + 1) * wd];
                            for ix in x0..x1 {
                                drow[ix] += wv * grow[ix * stride + kx - pad];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ConvGrads { dx, dw, db })
}

pub fn leaky_relu<T: Scalar>(x: &Tensor<T>, slope: f64) -> Tensor<T> {
    let a = T::of(slope);
    x.map(|v| if v >= T::zero() { v } else { a * v })
}

/// Backward of [`leaky_relu`]; `x` is the forward input.
pub fn leaky_relu_backward<T: Scalar>(x: &Tensor<T>, dy: &Tensor<T>, slope: f64) -> Tensor<T> {
    let a = T::of(slope);
    x.zip_map(dy, |v, g| if v >= T::zero() { g } else { a * g })
}

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| v.max(T::zero()))
}

pub fn relu_backward<T: Scalar>(x: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
    x.zip_map(dy, |v, g| if v > T::zero() { g } else { T::zero() })
}

pub fn tanh<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(T::tanh)
}

/// Backward of [`tanh`]; `y` is the forward output.
pub fn tanh_backward<T: Scalar>(y: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
    y.zip_map(dy, |v, g| g * (T::one() - v * v))
}

pub fn sigmoid_scalar<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

pub fn sigmoid<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(sigmoid_scalar)
}

/// Backward of [`sigmoid`]; `y` is the forward output.
pub fn sigmoid_backward<T: Scalar>(y: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
    y.zip_map(dy, |s, g| g * s * (T::one() - s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Rng;
    use crate::nnet::gradcheck::{max_relative_error, numeric_gradient};

    fn random(shape: &[usize], rng: &mut Rng) -> Tensor<f64> {
        Tensor::from_fn(shape, |_| rng.uniform(-1.0, 1.0))
    }

    #[test]
    fn identity_kernel() {
        let mut rng = Rng::new(1);
        let x = random(&[3, 5, 4], &mut rng);
        let w = Tensor::from_fn(&[3, 3, 1, 1], |i| if i / 3 == i % 3 { 1.0 } else { 0.0 });
        let y = conv2d_forward(&x, &w, &Tensor::zeros(&[3]), 1, 0).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn all_ones_hand_convolution() {
        let w = Tensor::from_fn(&[1, 1, 4, 4], |_| 1.0);
        let b = Tensor::zeros(&[1]);
        // 4x4: each 4x4 window at stride 2 with one padded row and column covers 3x3 ones
        let y = conv2d_forward(&Tensor::from_fn(&[1, 4, 4], |_| 1.0), &w, &b, 2, 1).unwrap();
        assert_eq!(y.shape(), &[1, 2, 2]);
        assert_eq!(y.data(), &[9.0; 4]);
        // 6x6: corners 3x3, edges 3x4, centre 4x4
        let y = conv2d_forward(&Tensor::from_fn(&[1, 6, 6], |_| 1.0), &w, &b, 2, 1).unwrap();
        assert_eq!(
            y.data(),
            &[9.0, 12.0, 9.0, 12.0, 16.0, 12.0, 9.0, 12.0, 9.0]
        );
    }

    #[test]
    fn shape_errors() {
        let x = Tensor::<f64>::zeros(&[2, 4, 4]);
        let w = Tensor::zeros(&[1, 3, 4, 4]);
        assert!(conv2d_forward(&x, &w, &Tensor::zeros(&[1]), 2, 1).is_err());
        let w = Tensor::zeros(&[1, 2, 4, 4]);
        assert!(conv2d_forward(&x, &w, &Tensor::zeros(&[2]), 2, 1).is_err());
        assert!(
            conv2d_forward(&Tensor::zeros(&[2, 1, 1]), &w, &Tensor::zeros(&[1]), 2, 1).is_err()
        );
        assert!(deconv2d_forward(
            &x,
            &Tensor::zeros(&[3, 1, 4, 4]),
            &Tensor::zeros(&[1]),
            2,
            1
        )
        .is_err());
    }

    #[test]
    fn deconv_single_site_scatter() {
        let x = Tensor::from_vec(&[1, 1, 1], vec![1.0]).unwrap();
        let w = Tensor::from_fn(&[1, 1, 4, 4], |i| i as f64 + 1.0);
        let b = Tensor::zeros(&[1]);
        let y = deconv2d_forward(&x, &w, &b, 2, 0).unwrap();
        assert_eq!(y.shape(), &[1, 4, 4]);
        assert_eq!(y.data(), w.data());
        // padding 1 trims the outer ring
        let y = deconv2d_forward(&x, &w, &b, 2, 1).unwrap();
        assert_eq!(y.data(), &[6.0, 7.0, 10.0, 11.0]);
    }

    #[test]
    fn deconv_doubles_size() {
        let x = Tensor::<f64>::zeros(&[3, 5, 7]);
        let y = deconv2d_forward(
            &x,
            &Tensor::zeros(&[3, 2, 4, 4]),
            &Tensor::zeros(&[2]),
            2,
            1,
        )
        .unwrap();
        assert_eq!(y.shape(), &[2, 10, 14]);
    }

    #[test]
    fn deconv_is_adjoint_of_conv() {
        let mut rng = Rng::new(7);
        for (c, o, h, wd) in [(1, 1, 4, 4), (3, 5, 8, 6), (4, 2, 16, 16)] {
            let x = random(&[c, h, wd], &mut rng);
            let w = random(&[o, c, 4, 4], &mut rng);
            let y = random(&[o, h / 2, wd / 2], &mut rng);
            let cx = conv2d_forward(&x, &w, &Tensor::zeros(&[o]), 2, 1).unwrap();
            let dy = deconv2d_forward(&y, &w, &Tensor::zeros(&[c]), 2, 1).unwrap();
            assert_eq!(dy.shape(), x.shape());
            assert!((cx.dot(&y) - x.dot(&dy)).abs() < 1e-9);
        }
    }

    /// Checks every input, weight and bias gradient of a layer against central differences.
    fn check_layer(
        fwd: impl Fn(&Tensor<f64>, &Tensor<f64>, &Tensor<f64>) -> Tensor<f64>,
        grads: ConvGrads<f64>,
        x: &Tensor<f64>,
        w: &Tensor<f64>,
        b: &Tensor<f64>,
        r: &Tensor<f64>,
    ) {
        let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| fwd(x, w, b).dot(r);
        let nx = numeric_gradient(x, |t| loss(t, w, b));
        let nw = numeric_gradient(w, |t| loss(x, t, b));
        let nb = numeric_gradient(b, |t| loss(x, w, t));
        assert!(max_relative_error(grads.dx.unwrap().data(), &nx) < 1e-4);
        assert!(max_relative_error(grads.dw.data(), &nw) < 1e-4);
        assert!(max_relative_error(grads.db.data(), &nb) < 1e-4);
    }

    #[test]
    fn conv_gradient_check() {
        let mut rng = Rng::new(3);
        for (stride, pad, h) in [(2, 1, 8), (1, 1, 5), (1, 0, 6)] {
            let x = random(&[2, h, h + 1], &mut rng);
            let w = random(&[3, 2, 4, 4], &mut rng);
            let b = random(&[3], &mut rng);
            let y = conv2d_forward(&x, &w, &b, stride, pad).unwrap();
            let r = random(y.shape(), &mut rng);
            let g = conv2d_backward(&x, &w, &r, stride, pad, true).unwrap();
            check_layer(
                |x, w, b| conv2d_forward(x, w, b, stride, pad).unwrap(),
                g,
                &x,
                &w,
                &b,
                &r,
            );
        }
    }

    #[test]
    fn deconv_gradient_check() {
        let mut rng = Rng::new(4);
        let x = random(&[3, 3, 4], &mut rng);
        let w = random(&[3, 2, 4, 4], &mut rng);
        let b = random(&[2], &mut rng);
        let y = deconv2d_forward(&x, &w, &b, 2, 1).unwrap();
        let r = random(y.shape(), &mut rng);
        let g = deconv2d_backward(&x, &w, &r, 2, 1, true).unwrap();
        check_layer(
            |x, w, b| deconv2d_forward(x, w, b, 2, 1).unwrap(),
            g,
            &x,
            &w,
            &b,
            &r,
        );
    }

    #[test]
    fn activation_values() {
        let x = Tensor::from_vec(&[3], vec![-1.0, 0.0, 2.5]).unwrap();
        assert_eq!(leaky_relu(&x, LEAKY_SLOPE).data(), &[-0.2, 0.0, 2.5]);
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.5]);
        assert_eq!(sigmoid(&x).data()[1], 0.5);
        assert_eq!(tanh(&x).data()[1], 0.0);
        assert!(sigmoid_scalar(-800.0f64) >= 0.0 && sigmoid_scalar(800.0f64) == 1.0);
    }

    #[test]
    fn activation_gradient_check() {
        let x = Tensor::from_vec(&[2], vec![-0.5, 0.5]).unwrap();
        let r = Tensor::from_vec(&[2], vec![0.7, -1.3]).unwrap();
        let cases: [(
            &dyn Fn(&Tensor<f64>) -> Tensor<f64>,
            &dyn Fn(&Tensor<f64>) -> Tensor<f64>,
        ); 4] = [
            (&|x| leaky_relu(x, LEAKY_SLOPE), &|x| {
                leaky_relu_backward(x, &r, LEAKY_SLOPE)
            }),
            (&|x| relu(x), &|x| relu_backward(x, &r)),
            (&|x| tanh(x), &|x| tanh_backward(&tanh(x), &r)),
            (&|x| sigmoid(x), &|x| sigmoid_backward(&sigmoid(x), &r)),
        ];
        for (fwd, bwd) in cases {
            let numeric = numeric_gradient(&x, |t| fwd(t).dot(&r));
            assert!(max_relative_error(bwd(&x).data(), &numeric) < 1e-6);
        }
    }
}
