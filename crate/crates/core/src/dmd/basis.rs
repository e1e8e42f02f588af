use super::beam::beam_modes_1d;
use super::spectrum::ModalSpectrum;
use super::DmdError;
use crate::image::{FloatField, GrayImage};

/// Orthonormal modal basis of an `h` x `w` plane.
///
/// `modes` is stored mode after mode (column-major for the `(h*w) x K`
/// matrix `Q`); each mode is row-major over the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalBasis {
    h: usize,
    w: usize,
    k: usize,
    eigvals: Vec<f64>,
    modes: Vec<f64>,
}

/// Anything that can be decomposed: real fields directly, 8-bit images in
/// physical units.
pub trait Surface {
    fn dims(&self) -> (usize, usize);
    fn physical_values(&self) -> Vec<f64>;
}

impl Surface for FloatField {
    fn dims(&self) -> (usize, usize) {
        (self.height(), self.width())
    }
    fn physical_values(&self) -> Vec<f64> {
        self.data().to_vec()
    }
}

impl Surface for GrayImage {
    fn dims(&self) -> (usize, usize) {
        (self.height(), self.width())
    }
    fn physical_values(&self) -> Vec<f64> {
        self.to_physical().into_data()
    }
}

impl ModalBasis {
    /// Assembles a basis from raw parts, e.g. after reading a cache file.
    pub fn from_parts(
        h: usize,
        w: usize,
        eigvals: Vec<f64>,
        modes: Vec<f64>,
    ) -> Result<Self, DmdError> {
        let k = eigvals.len();
        if modes.len() != k * h * w {
            return Err(DmdError::Format(format!(
                "expected {} mode values, found {}",
                k * h * w,
                modes.len()
            )));
        }
        Ok(Self {
            h,
            w,
            k,
            eigvals,
            modes,
        })
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn mode(&self, k: usize) -> &[f64] {
        let n = self.h * self.w;
        &self.modes[k * n..(k + 1) * n]
    }

    pub fn modes_raw(&self) -> &[f64] {
        &self.modes
    }

    pub fn mode_field(&self, k: usize) -> FloatField {
        FloatField::new(self.w, self.h, self.mode(k).to_vec()).expect("modes are finite")
    }

    fn check(&self, dims: (usize, usize)) -> Result<(), DmdError> {
        if dims != (self.h, self.w) {
            return Err(DmdError::SizeMismatch {
                expected: (self.h, self.w),
                found: dims,
            });
        }
        Ok(())
    }
}

/// Tensor-product basis from 1-D free-free beam modes, ranked by
/// `lambda_x + lambda_y` with ties broken by `(ix, iy)`.
pub fn build_basis(h: usize, w: usize, k: usize) -> Result<ModalBasis, DmdError> {
    if k == 0 || k > h * w {
        return Err(DmdError::InvalidDimensions(format!(
            "mode count must be in [1, {}], got {k}",
            h * w
        )));
    }
    let bx = beam_modes_1d(w, w)?;
    let by = beam_modes_1d(h, h)?;

    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(w * h);
    for ix in 0..w {
        for iy in 0..h {
            pairs.push((bx.eigvals[ix] + by.eigvals[iy], ix, iy));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    pairs.truncate(k);

    let mut modes = Vec::with_capacity(k * h * w);
    let mut eigvals = Vec::with_capacity(k);
    for &(lam, ix, iy) in &pairs {
        let ux = &bx.vectors[ix];
        let uy = &by.vectors[iy];
        for vy in uy {
            modes.extend(ux.iter().map(|vx| vx * vy));
        }
        eigvals.push(lam);
    }
    Ok(ModalBasis {
        h,
        w,
        k,
        eigvals,
        modes,
    })
}

/// Modal coefficients; the least-squares fit since the basis is orthonormal.
pub fn project<S: Surface + ?Sized>(
    surface: &S,
    basis: &ModalBasis,
) -> Result<ModalSpectrum, DmdError> {
    basis.check(surface.dims())?;
    let values = surface.physical_values();
    let coeffs = (0..basis.k)
        .map(|k| basis.mode(k).iter().zip(&values).map(|(m, v)| m * v).sum())
        .collect();
    Ok(ModalSpectrum::new(coeffs))
}

pub fn reconstruct(spec: &ModalSpectrum, basis: &ModalBasis) -> Result<FloatField, DmdError> {
    if spec.len() != basis.k {
        return Err(DmdError::LengthMismatch {
            expected: basis.k,
            found: spec.len(),
        });
    }
    let n = basis.h * basis.w;
    let mut out = vec![0.0; n];
    for (k, &c) in spec.coeffs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for (o, m) in out.iter_mut().zip(basis.mode(k)) {
            *o += c * m;
        }
    }
    FloatField::new(basis.w, basis.h, out).map_err(|_| DmdError::NonFinite)
}

/// RMS of the part of `surface` the basis does not capture.
pub fn residual_rms<S: Surface + ?Sized>(surface: &S, basis: &ModalBasis) -> Result<f64, DmdError> {
    let spec = project(surface, basis)?;
    let recon = reconstruct(&spec, basis)?;
    let values = surface.physical_values();
    let ss: f64 = values
        .iter()
        .zip(recon.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((ss / values.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Rng;

    fn max_gram_error(b: &ModalBasis) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..b.len() {
            for j in i..b.len() {
                let d: f64 = b.mode(i).iter().zip(b.mode(j)).map(|(x, y)| x * y).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - e).abs());
            }
        }
        worst
    }

    #[test]
    fn first_modes_are_rigid() {
        let b = build_basis(12, 10, 8).unwrap();
        let c = 1.0 / 120f64.sqrt();
        assert!(b.mode(0).iter().all(|v| (v - c).abs() < 1e-10));
        assert_eq!(&b.eigvals()[..4], &[0.0; 4]);
        assert!(b.eigvals()[4] > 0.0);
        // mode 1: constant along x, linear along y
        let m1 = b.mode_field(1);
        assert!((m1.get(0, 3) - m1.get(9, 3)).abs() < 1e-14);
        assert!((m1.get(0, 3) - m1.get(0, 4)).abs() > 1e-3);
        // mode 2: linear along x, constant along y
        let m2 = b.mode_field(2);
        assert!((m2.get(4, 0) - m2.get(4, 11)).abs() < 1e-14);
        // mode 3: twist, antisymmetric about both axes
        let m3 = b.mode_field(3);
        assert!((m3.get(0, 0) + m3.get(9, 0)).abs() < 1e-14);
        assert!((m3.get(0, 0) - m3.get(9, 11)).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_small() {
        let b = build_basis(16, 16, 256).unwrap();
        assert!(max_gram_error(&b) < 1e-8);
        assert!(b.eigvals().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn ordering_matches_enumeration() {
        let (h, w, k) = (32, 32, 10);
        let b = build_basis(h, w, k).unwrap();
        let bx = beam_modes_1d(w, w).unwrap();
        let by = beam_modes_1d(h, h).unwrap();
        // every (ix, iy) pair, ranked by summed eigenvalue then by indices
        let mut all = Vec::new();
        for ix in 0..w {
            for iy in 0..h {
                all.push((bx.eigvals[ix] + by.eigvals[iy], ix, iy));
            }
        }
        for i in 1..all.len() {
            let mut j = i;
            while j > 0 && {
                let (a, c) = (all[j - 1], all[j]);
                a.0 > c.0 || (a.0 == c.0 && (a.1, a.2) > (c.1, c.2))
            } {
                all.swap(j - 1, j);
                j -= 1;
            }
        }
        for (slot, &(lam, ix, iy)) in all.iter().take(k).enumerate() {
            assert_eq!(b.eigvals()[slot], lam);
            let m = b.mode_field(slot);
            for y in 0..h {
                for x in 0..w {
                    let e = bx.vectors[ix][x] * by.vectors[iy][y];
                    assert!((m.get(x, y) - e).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn project_scaled_mode() {
        let b = build_basis(10, 10, 20).unwrap();
        let s = b.mode_field(7);
        let scaled = FloatField::from_fn(10, 10, |x, y| -3.5 * s.get(x, y));
        let spec = project(&scaled, &b).unwrap();
        for (k, c) in spec.coeffs().iter().enumerate() {
            let e = if k == 7 { -3.5 } else { 0.0 };
            assert!((c - e).abs() < 1e-12);
        }
        let zero = project(&FloatField::zeros(10, 10), &b).unwrap();
        assert!(zero.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn round_trip_full_basis() {
        let b = build_basis(8, 8, 64).unwrap();
        let mut rng = Rng::new(1);
        let s = FloatField::from_fn(8, 8, |_, _| rng.uniform(-5.0, 5.0));
        let r = reconstruct(&project(&s, &b).unwrap(), &b).unwrap();
        let num: f64 = s
            .data()
            .iter()
            .zip(r.data())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let den: f64 = s.data().iter().map(|a| a * a).sum();
        assert!((num / den).sqrt() < 1e-10);
    }

    #[test]
    fn reconstruct_unit_and_zero() {
        let b = build_basis(9, 8, 12).unwrap();
        let mut e = vec![0.0; 12];
        e[5] = 1.0;
        let r = reconstruct(&ModalSpectrum::new(e), &b).unwrap();
        assert_eq!(r.data(), b.mode(5));
        let z = reconstruct(&ModalSpectrum::new(vec![0.0; 12]), &b).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
        assert!(matches!(
            reconstruct(&ModalSpectrum::new(vec![0.0; 3]), &b),
            Err(DmdError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn residuals() {
        let full = build_basis(8, 8, 64).unwrap();
        let mut rng = Rng::new(4);
        let s = FloatField::from_fn(8, 8, |_, _| rng.normal());
        assert!(residual_rms(&s, &full).unwrap() < 1e-10);

        let m5 = full.mode_field(5);
        let b6 = build_basis(8, 8, 6).unwrap();
        assert!(residual_rms(&m5, &b6).unwrap() < 1e-12);
        let b3 = build_basis(8, 8, 3).unwrap();
        let rms = residual_rms(&m5, &b3).unwrap();
        assert!((rms - 1.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn gray_images_project_in_physical_units() {
        let b = build_basis(8, 8, 1).unwrap();
        let g = GrayImage::filled(8, 8, 10).with_scale(0.5, 1.0).unwrap();
        // piston coefficient = mean * sqrt(N)
        let spec = project(&g, &b).unwrap();
        assert!((spec.coeffs()[0] - 6.0 * 8.0).abs() < 1e-12);
    }

    #[test]
    fn size_and_count_errors() {
        assert!(build_basis(8, 8, 65).is_err());
        assert!(build_basis(8, 8, 0).is_err());
        assert!(build_basis(4, 8, 2).is_err());
        let b = build_basis(8, 8, 4).unwrap();
        assert!(matches!(
            project(&FloatField::zeros(9, 8), &b),
            Err(DmdError::SizeMismatch { .. })
        ));
    }
}
