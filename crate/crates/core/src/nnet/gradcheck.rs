//! Central finite differences for verifying hand-written backward passes.

use super::tensor::Tensor;

/// Step used by [`numeric_gradient`].
pub const STEP: f64 = 1e-5;

/// Magnitude below which [`relative_error`] measures absolute difference instead.
pub const FLOOR: f64 = 1e-6;

/// `(f(t + h e_i) - f(t - h e_i)) / 2h` for every element `i` of `t`.
pub fn numeric_gradient(t: &Tensor<f64>, mut f: impl FnMut(&Tensor<f64>) -> f64) -> Vec<f64> {
    let mut probe = t.clone();
    (0..t.len())
        .map(|i| {
            let v = t.data()[i];
            probe.data_mut()[i] = v + STEP;
            let hi = f(&probe);
            probe.data_mut()[i] = v - STEP;
            let lo = f(&probe);
            probe.data_mut()[i] = v;
            (hi - lo) / (2.0 * STEP)
        })
        .collect()
}

/// `|a - n| / max(|a|, |n|, FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let t = Tensor::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap();
        let g = numeric_gradient(&t, |t| t.data().iter().map(|v| v * v).sum());
        assert!(max_relative_error(&[2.0, -4.0, 1.0], &g) < 1e-9);
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-15);
    }
}
