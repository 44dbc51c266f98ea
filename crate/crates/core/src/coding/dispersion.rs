//! Extra dispersion that models channel-estimation error as Cauchy noise.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Unbiased sample variance `sum |e - mean|^2 / (n - 1)` of a complex batch.
pub fn complex_sample_variance(samples: &[Complex64]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<Complex64>() / n as f64;
    samples.iter().map(|e| (e - mean).norm_sqr()).sum::<f64>() / (n - 1) as f64
}

/// `gamma_tilde = sum_k sqrt(p_k) gamma_k + gamma` where `gamma_k` is a
/// quarter of the empirical variance of user `k`'s estimation errors.
///
/// `errors[k]` holds user `k`'s error samples `h - h_hat`.
pub fn adjust_dispersion(errors: &[Vec<Complex64>], powers: &[f64], gamma: f64) -> Result<f64> {
    if errors.len() != powers.len() {
        return Err(Error::DimensionMismatch {
            context: "adjust_dispersion users",
            expected: powers.len(),
            found: errors.len(),
        });
    }
    let mut gamma_tilde = gamma;
    for (k, (batch, p)) in errors.iter().zip(powers).enumerate() {
        if batch.is_empty() {
            return Err(Error::EmptyBatch(k));
        }
        gamma_tilde += p.sqrt() * complex_sample_variance(batch) / 4.0;
    }
    Ok(gamma_tilde)
}
