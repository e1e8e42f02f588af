use std::fmt::Write as _;

use super::DmdError;

/// Signed modal coefficients of one surface, in its physical units.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalSpectrum {
    coeffs: Vec<f64>,
}

impl ModalSpectrum {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Spectrum CSV: `mode_index,coefficient`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("mode_index,coefficient\n");
        for (i, c) in self.coeffs.iter().enumerate() {
            writeln!(s, "{i},{c}").unwrap();
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, DmdError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "mode_index,coefficient" => {}
            other => {
                return Err(DmdError::Format(format!(
                    "unexpected spectrum header {other:?}"
                )))
            }
        }
        let mut coeffs = Vec::new();
        for (row, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (idx, val) = line
                .split_once(',')
                .ok_or_else(|| DmdError::Format(format!("bad spectrum row {line:?}")))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| DmdError::Format(format!("bad mode index {idx:?}")))?;
            if idx != row {
                return Err(DmdError::Format(format!(
                    "mode index {idx} out of order at row {row}"
                )));
            }
            coeffs.push(
                val.trim()
                    .parse()
                    .map_err(|_| DmdError::Format(format!("bad coefficient {val:?}")))?,
            );
        }
        Ok(Self { coeffs })
    }
}

/// Agreement between two spectra.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumSimilarity {
    pub cosine: f64,
    /// Squared Pearson correlation of the coefficient sequences.
    pub r_squared: f64,
}

pub fn spectrum_similarity(
    a: &ModalSpectrum,
    b: &ModalSpectrum,
) -> Result<SpectrumSimilarity, DmdError> {
    if a.len() != b.len() {
        return Err(DmdError::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let n = a.len();
    if n < 3 {
        return Err(DmdError::UndefinedSimilarity(format!(
            "need at least 3 modes, got {n}"
        )));
    }
    let (x, y) = (a.coeffs(), b.coeffs());
    let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
    let nx = x.iter().map(|p| p * p).sum::<f64>().sqrt();
    let ny = y.iter().map(|q| q * q).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(DmdError::UndefinedSimilarity("zero-norm spectrum".into()));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, q) in x.iter().zip(y) {
        sxy += (p - mx) * (q - my);
        sxx += (p - mx) * (p - mx);
        syy += (q - my) * (q - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(DmdError::UndefinedSimilarity("constant spectrum".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(SpectrumSimilarity {
        cosine: (dot / (nx * ny)).clamp(-1.0, 1.0),
        r_squared: r * r,
    })
}

/// `|a_k - b_k|` for every mode.
pub fn per_mode_error(a: &ModalSpectrum, b: &ModalSpectrum) -> Result<Vec<f64>, DmdError> {
    if a.len() != b.len() {
        return Err(DmdError::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(p, q)| (p - q).abs())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Rng;
    use proptest::prelude::*;

    fn s(v: &[f64]) -> ModalSpectrum {
        ModalSpectrum::new(v.to_vec())
    }

    #[test]
    fn identical_and_proportional() {
        let a = s(&[1.0, -2.0, 0.5, 4.0]);
        let sim = spectrum_similarity(&a, &a).unwrap();
        assert!((sim.cosine - 1.0).abs() < 1e-15 && (sim.r_squared - 1.0).abs() < 1e-15);
        let sim = spectrum_similarity(&s(&[1.0, 2.0, 3.0]), &s(&[2.0, 4.0, 6.0])).unwrap();
        assert!((sim.cosine - 1.0).abs() < 1e-15 && (sim.r_squared - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reversed_sequence() {
        let sim = spectrum_similarity(&s(&[1.0, 2.0, 3.0]), &s(&[3.0, 2.0, 1.0])).unwrap();
        assert!((sim.cosine - 10.0 / 14.0).abs() < 1e-15);
        assert!((sim.r_squared - 1.0).abs() < 1e-15);
    }

    #[test]
    fn undefined_cases() {
        let z = s(&[0.0, 0.0, 0.0]);
        let a = s(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            spectrum_similarity(&z, &a),
            Err(DmdError::UndefinedSimilarity(_))
        ));
        assert!(matches!(
            spectrum_similarity(&s(&[2.0, 2.0, 2.0]), &a),
            Err(DmdError::UndefinedSimilarity(_))
        ));
        assert!(spectrum_similarity(&s(&[1.0, 2.0]), &s(&[1.0, 3.0])).is_err());
        assert!(spectrum_similarity(&a, &s(&[1.0, 2.0, 3.0, 4.0])).is_err());
    }

    #[test]
    fn per_mode() {
        assert_eq!(
            per_mode_error(&s(&[1.0, 0.0]), &s(&[0.0, 1.0])).unwrap(),
            vec![1.0, 1.0]
        );
        let a = s(&[0.3, -1.0, 2.0]);
        assert_eq!(per_mode_error(&a, &a).unwrap(), vec![0.0; 3]);
        let mut rng = Rng::new(8);
        let x: Vec<f64> = (0..40).map(|_| rng.normal()).collect();
        let y: Vec<f64> = (0..40).map(|_| rng.normal()).collect();
        let err = per_mode_error(&s(&x), &s(&y)).unwrap();
        for i in 0..40 {
            let d = if x[i] > y[i] {
                x[i] - y[i]
            } else {
                y[i] - x[i]
            };
            assert_eq!(err[i], d);
        }
        assert!(per_mode_error(&a, &s(&[1.0])).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let a = s(&[1.5, -0.000123, 1e-300, 42.0]);
        assert_eq!(ModalSpectrum::from_csv(&a.to_csv()).unwrap(), a);
        assert!(ModalSpectrum::from_csv("index,value\n0,1\n").is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_scale_invariant(
            v in prop::collection::vec(-10.0f64..10.0, 5..20),
            w in prop::collection::vec(-10.0f64..10.0, 5..20),
            alpha in prop_oneof![0.01f64..100.0, -100.0f64..-0.01],
        ) {
            let n = v.len().min(w.len());
            let a = s(&v[..n]);
            let b = s(&w[..n]);
            if let (Ok(ab), Ok(ba)) = (spectrum_similarity(&a, &b), spectrum_similarity(&b, &a)) {
                prop_assert!((ab.cosine - ba.cosine).abs() < 1e-12);
                prop_assert!((ab.r_squared - ba.r_squared).abs() < 1e-12);
                let scaled = s(&v[..n].iter().map(|x| alpha * x).collect::<Vec<_>>());
                let sc = spectrum_similarity(&scaled, &b).unwrap();
                prop_assert!((sc.cosine - alpha.signum() * ab.cosine).abs() < 1e-9);
                prop_assert!((sc.r_squared - ab.r_squared).abs() < 1e-9);
            }
        }
    }
}
