//! Independent reference computations for the integration tests.
#![allow(dead_code)]

use cauchy_mimo::num_complex::Complex64;
use cauchy_mimo::{ComplexMatrix, ComplexVector, SymbolAlphabet};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `sum_i ln(gamma^2 + |r_i - sum_k sqrt(p_k) h[i,k] s_k|^2)`, written out
/// element by element.
pub fn cauchy_cost(s: &[Complex64], r: &ComplexVector, h: &ComplexMatrix, powers: &[f64], gamma: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..r.len() {
        let mut re = r[i].re;
        let mut im = r[i].im;
        for k in 0..s.len() {
            let a = h[(i, k)] * s[k] * powers[k].sqrt();
            re -= a.re;
            im -= a.im;
        }
        total += (gamma * gamma + re * re + im * im).ln();
    }
    total
}

/// Every vector of `users` alphabet indices, lexicographic.
pub fn all_index_vectors(alphabet_len: usize, users: usize) -> Vec<Vec<usize>> {
    let count = alphabet_len.pow(users as u32);
    (0..count)
        .map(|mut n| {
            (0..users)
                .map(|_| {
                    let d = n % alphabet_len;
                    n /= alphabet_len;
                    d
                })
                .collect()
        })
        .collect()
}

/// Exhaustive Cauchy ML decision and its cost.
pub fn exhaustive_ml(
    r: &ComplexVector,
    h: &ComplexMatrix,
    powers: &[f64],
    gamma: f64,
    alphabet: &SymbolAlphabet,
) -> (Vec<usize>, f64) {
    let mut best = (Vec::new(), f64::INFINITY);
    for idx in all_index_vectors(alphabet.len(), h.ncols()) {
        let s: Vec<Complex64> = idx.iter().map(|&i| alphabet.point(i)).collect();
        let cost = cauchy_cost(&s, r, h, powers, gamma);
        if cost < best.1 {
            best = (idx, cost);
        }
    }
    best
}

/// Exact max-log LLR of bit `bit` of user `k` by enumeration of all `S^K`
/// symbol vectors under the isotropic Cauchy density.
pub fn exhaustive_max_log_llr(
    r: &ComplexVector,
    h: &ComplexMatrix,
    powers: &[f64],
    gamma: f64,
    alphabet: &SymbolAlphabet,
    k: usize,
    bit: usize,
) -> f64 {
    let mut best = [f64::INFINITY; 2];
    for idx in all_index_vectors(alphabet.len(), h.ncols()) {
        let s: Vec<Complex64> = idx.iter().map(|&i| alphabet.point(i)).collect();
        let cost = cauchy_cost(&s, r, h, powers, gamma);
        let b = alphabet.bit(idx[k], bit) as usize;
        best[b] = best[b].min(cost);
    }
    1.5 * (best[1] - best[0])
}

/// Mutual information of QPSK over complex Gaussian noise with variance
/// `noise_var` (total), by quadrature. The two quadratures separate into
/// BPSK channels of amplitude `sqrt(p / 2)` and real noise variance
/// `noise_var / 2`.
pub fn qpsk_gaussian_mi(p: f64, noise_var: f64) -> f64 {
    let a = (p / 2.0).sqrt();
    let s2 = noise_var / 2.0;
    let sigma = s2.sqrt();
    let lo = -a - 12.0 * sigma;
    let hi = a + 12.0 * sigma;
    let n = 200_000;
    let dx = (hi - lo) / n as f64;
    let pdf = |y: f64, m: f64| (-(y - m).powi(2) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt();
    let mut h_y = 0.0;
    for i in 0..=n {
        let y = lo + i as f64 * dx;
        let f = 0.5 * (pdf(y, a) + pdf(y, -a));
        if f > 0.0 {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            h_y -= w * f * f.log2() * dx;
        }
    }
    let h_n = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * s2).log2();
    2.0 * (h_y - h_n)
}

/// Quantile of the real Cauchy law with scale `gamma`.
pub fn cauchy_quantile(q: f64, gamma: f64) -> f64 {
    gamma * (std::f64::consts::PI * (q - 0.5)).tan()
}

/// Least-squares slope through the origin of sorted samples against the
/// unit-Cauchy quantiles at probabilities in `[lo, hi]`.
pub fn quantile_regression_scale(samples: &mut [f64], lo: f64, hi: f64) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, x) in samples.iter().enumerate() {
        let q = (i as f64 + 0.5) / n as f64;
        if q < lo || q > hi {
            continue;
        }
        let t = cauchy_quantile(q, 1.0);
        num += t * x;
        den += t * t;
    }
    num / den
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], step: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += step;
            down[i] -= step;
            (f(&up) - f(&down)) / (2.0 * step)
        })
        .collect()
}
