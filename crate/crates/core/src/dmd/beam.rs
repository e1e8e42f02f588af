use super::eigen::symmetric_eigen;
use super::DmdError;

/// Free-free Euler-Bernoulli beam modes on `n` unit-spaced points.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamModes1D {
    pub n: usize,
    /// Unit vectors, ascending stiffness.
    pub vectors: Vec<Vec<f64>>,
    pub eigvals: Vec<f64>,
}

impl BeamModes1D {
    pub fn count(&self) -> usize {
        self.vectors.len()
    }
}

/// Stiffness operator `D2^T D2`, with `D2` the `(n-2) x n` second-difference map.
pub(crate) fn stiffness_operator(n: usize) -> Vec<f64> {
    let mut a = vec![0.0; n * n];
    let stencil = [1.0, -2.0, 1.0];
    for r in 0..n - 2 {
        for (i, si) in stencil.iter().enumerate() {
            for (j, sj) in stencil.iter().enumerate() {
                a[(r + i) * n + r + j] += si * sj;
            }
        }
    }
    a
}

fn fix_sign(v: &mut [f64]) {
    let peak = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * peak) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lowest `count` free-free beam modes.
///
/// The two rigid modes (translation and rotation) span the null space of the
/// operator; they are set analytically to the normalized constant and
/// centred ramp with eigenvalue exactly zero. Every vector has its first
/// significant entry positive.
pub fn beam_modes_1d(n: usize, count: usize) -> Result<BeamModes1D, DmdError> {
    if n < 8 {
        return Err(DmdError::InvalidDimensions(format!(
            "beam needs at least 8 points, got {n}"
        )));
    }
    if count < 2 || count > n {
        return Err(DmdError::InvalidDimensions(format!(
            "mode count must be in [2, {n}], got {count}"
        )));
    }

    let (vals, mut vecs) = symmetric_eigen(stiffness_operator(n), n)?;

    let piston = vec![1.0 / (n as f64).sqrt(); n];
    let centre = (n as f64 - 1.0) / 2.0;
    let mut ramp: Vec<f64> = (0..n).map(|i| i as f64 - centre).collect();
    let norm = dot(&ramp, &ramp).sqrt();
    ramp.iter_mut().for_each(|x| *x /= norm);

    let mut vectors = Vec::with_capacity(count);
    let mut eigvals = Vec::with_capacity(count);
    vectors.push(piston);
    eigvals.push(0.0);
    fix_sign(&mut ramp);
    vectors.push(ramp);
    eigvals.push(0.0);

    for (val, v) in vals
        .into_iter()
        .zip(vecs.iter_mut())
        .skip(2)
        .take(count - 2)
    {
        // strip round-off leakage into the rigid subspace
        for rigid in &vectors[..2] {
            let c = dot(v, rigid);
            v.iter_mut().zip(rigid).for_each(|(x, r)| *x -= c * r);
        }
        let norm = dot(v, v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        fix_sign(v);
        vectors.push(std::mem::take(v));
        eigvals.push(val.max(0.0));
    }

    Ok(BeamModes1D {
        n,
        vectors,
        eigvals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// First positive root of `cos(x) cosh(x) = 1`, found by bisection.
    fn free_free_root() -> f64 {
        let f = |x: f64| x.cos() * x.cosh() - 1.0;
        let (mut lo, mut hi) = (4.0, 5.0);
        assert!(f(lo) * f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn bisection_oracle() {
        assert!((free_free_root() - 4.730041).abs() < 1e-6);
    }

    #[test]
    fn rigid_modes() {
        let m = beam_modes_1d(20, 6).unwrap();
        let c = 1.0 / 20f64.sqrt();
        assert!(m.vectors[0].iter().all(|v| (v - c).abs() < 1e-15));
        assert_eq!(m.eigvals[0], 0.0);
        assert_eq!(m.eigvals[1], 0.0);
        // decreasing ramp after the sign convention, constant step
        let r = &m.vectors[1];
        assert!(r[0] > 0.0);
        let step = r[1] - r[0];
        assert!(r.windows(2).all(|w| (w[1] - w[0] - step).abs() < 1e-14));
        assert!(r.iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn orthonormal_and_ascending() {
        let m = beam_modes_1d(40, 40).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                let d = dot(&m.vectors[i], &m.vectors[j]);
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((d - e).abs() < 1e-10, "({i},{j}) {d}");
            }
        }
        assert!(m.eigvals.windows(2).all(|w| w[0] <= w[1]));
        for v in &m.vectors {
            let first = v.iter().find(|x| x.abs() > 1e-8).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn eigen_residual() {
        let n = 30;
        let a = stiffness_operator(n);
        let m = beam_modes_1d(n, n).unwrap();
        for (lam, v) in m.eigvals.iter().zip(&m.vectors) {
            for i in 0..n {
                let av: f64 = (0..n).map(|j| a[i * n + j] * v[j]).sum();
                assert!((av - lam * v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn first_bending_root() {
        let n = 200;
        let m = beam_modes_1d(n, 4).unwrap();
        let beta = m.eigvals[2].powf(0.25) * (n as f64 - 1.0);
        let root = free_free_root();
        assert!(((beta - root) / root).abs() < 0.005, "{beta} vs {root}");
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(beam_modes_1d(7, 2).is_err());
        assert!(beam_modes_1d(10, 1).is_err());
        assert!(beam_modes_1d(10, 11).is_err());
    }
}
