//! Two-sided Wilcoxon signed-rank test for paired samples.

use statrs::distribution::{ContinuousCDF, Normal};

use super::MetricError;

/// Largest number of non-zero differences handled with the exact null distribution.
pub const EXACT_MAX_N: usize = 25;

/// Two-sided p-value of the signed-rank test on `x - y`.
///
/// Zero differences are dropped and tied magnitudes receive mid-ranks. Up to
/// [`EXACT_MAX_N`] remaining differences the p-value comes from the exact
/// permutation distribution of the positive rank sum; beyond that a
/// tie-corrected normal approximation with continuity correction is used.
/// If every difference is zero the p-value is 1.
pub fn paired_test(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::InvalidInput(format!(
            "paired samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 5 {
        return Err(MetricError::InvalidInput(format!(
            "need at least 5 pairs, got {}",
            x.len()
        )));
    }
    let mut diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(MetricError::InvalidInput("non-finite difference".into()));
    }
    let n = diffs.len();
    if n == 0 {
        return Ok(1.0);
    }
    diffs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

    // doubled mid-ranks are integers
    let mut rank2 = vec![0usize; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[j + 1].abs() == diffs[i].abs() {
            j += 1;
        }
        // ranks i+1 ..= j+1 share (i + j + 2) / 2
        for r in &mut rank2[i..=j] {
            *r = i + j + 2;
        }
        tie_sizes.push(j - i + 1);
        i = j + 1;
    }
    let w2: usize = diffs
        .iter()
        .zip(&rank2)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    let p = if n <= EXACT_MAX_N {
        let total: usize = rank2.iter().sum();
        let mut counts = vec![0.0f64; total + 1];
        counts[0] = 1.0;
        let mut reach = 0;
        for &r in &rank2 {
            for s in (0..=reach).rev() {
                if counts[s] != 0.0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let all = 2f64.powi(n as i32);
        let lower: f64 = counts[..=w2].iter().sum::<f64>() / all;
        let upper: f64 = counts[w2..].iter().sum::<f64>() / all;
        2.0 * lower.min(upper)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let ties: f64 = tie_sizes
            .iter()
            .map(|&t| {
                let t = t as f64;
                t * t * t - t
            })
            .sum();
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
        let w = w2 as f64 / 2.0;
        let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::standard();
        2.0 * (1.0 - normal.cdf(z))
    };
    Ok(p.min(1.0))
}
