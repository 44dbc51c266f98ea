//! Symmetric alpha-stable noise.
//!
//! A real SαS variable with dispersion `gamma` has characteristic function
//! `exp(-gamma |t|^alpha)`; an isotropic complex one has
//! `E[exp(j Re(w X*))] = exp(-gamma |w|^alpha)`. At `alpha = 1` the latter has
//! the closed-form density [`iso_cauchy_pdf`], at `alpha = 2` it is a circular
//! Gaussian whose components each have variance `2 gamma`.
//!
//! Real variates use the Chambers–Mallows–Stuck transform. Isotropic complex
//! variates are sub-Gaussian: `X = sqrt(A) (G_R + j G_I)` with `A` a positive
//! `(alpha/2)`-stable variate (Kanter's representation, Laplace transform
//! `exp(-s^(alpha/2))`) and `G_*` independent Gaussians of variance
//! `2 gamma^(2/alpha)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma;

/// Real-valued or isotropic complex noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    RealSas,
    IsotropicComplex,
}

impl NoiseKind {
    fn name(self) -> &'static str {
        match self {
            NoiseKind::RealSas => "real_sas",
            NoiseKind::IsotropicComplex => "isotropic_complex",
        }
    }
}

/// Law of an additive noise term: characteristic exponent, dispersion and
/// kind. The location parameter is always zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableNoiseSpec {
    pub alpha: f64,
    pub gamma: f64,
    pub kind: NoiseKind,
}

impl StableNoiseSpec {
    pub fn new(alpha: f64, gamma: f64, kind: NoiseKind) -> Result<Self> {
        let spec = Self { alpha, gamma, kind };
        spec.validate()?;
        Ok(spec)
    }

    /// Isotropic complex Cauchy noise.
    pub fn complex_cauchy(gamma: f64) -> Result<Self> {
        Self::new(1.0, gamma, NoiseKind::IsotropicComplex)
    }

    /// Circular complex Gaussian noise (`alpha = 2`), per-component variance `2 gamma`.
    pub fn complex_gaussian(gamma: f64) -> Result<Self> {
        Self::new(2.0, gamma, NoiseKind::IsotropicComplex)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidDispersion(self.gamma));
        }
        Ok(())
    }

    fn expect_kind(&self, kind: NoiseKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::NoiseKindMismatch {
                expected: kind.name(),
                found: self.kind.name(),
            });
        }
        Ok(())
    }

    /// One isotropic complex variate. The spec must already be validated.
    pub(crate) fn draw_complex<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let sigma = (2.0 * self.gamma.powf(2.0 / self.alpha)).sqrt();
        let mixing = positive_stable(self.alpha / 2.0, rng).sqrt() * sigma;
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(mixing * re, mixing * im)
    }

    /// One real SαS variate. The spec must already be validated.
    pub(crate) fn draw_real<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        standard_sas(self.alpha, rng) * self.gamma.powf(1.0 / self.alpha)
    }
}

/// Standard symmetric stable variate (`gamma = 1`) by Chambers–Mallows–Stuck.
fn standard_sas<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// Positive stable variate with `E[exp(-s A)] = exp(-s^beta)`, `0 < beta <= 1`.
fn positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    if beta >= 1.0 {
        return 1.0;
    }
    // Kanter (1975): uniform angle on (0, pi), unit exponential.
    let u = loop {
        let u = PI * rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let e: f64 = Exp1.sample(rng);
    let a = ((1.0 - beta) * u).sin() * (beta * u).sin().powf(beta / (1.0 - beta))
        / u.sin().powf(1.0 / (1.0 - beta));
    (a / e).powf((1.0 - beta) / beta)
}

/// `n` i.i.d. real SαS samples.
pub fn sample_real_sas<R: Rng + ?Sized>(
    spec: &StableNoiseSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    spec.validate()?;
    spec.expect_kind(NoiseKind::RealSas)?;
    Ok((0..n).map(|_| spec.draw_real(rng)).collect())
}

/// `n` i.i.d. isotropic complex SαS samples.
pub fn sample_isotropic_complex<R: Rng + ?Sized>(
    spec: &StableNoiseSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    spec.validate()?;
    spec.expect_kind(NoiseKind::IsotropicComplex)?;
    Ok((0..n).map(|_| spec.draw_complex(rng)).collect())
}

/// Density of the isotropic complex Cauchy law, `gamma / (2 pi (|x|^2 + gamma^2)^(3/2))`.
pub fn iso_cauchy_pdf(x: Complex64, gamma: f64) -> f64 {
    gamma / (2.0 * PI * (x.norm_sqr() + gamma * gamma).powf(1.5))
}

/// Natural log of [`iso_cauchy_pdf`].
pub fn iso_cauchy_log_pdf(x: Complex64, gamma: f64) -> f64 {
    (gamma / (2.0 * PI)).ln() - 1.5 * (x.norm_sqr() + gamma * gamma).ln()
}

/// `E|X|^p` for real SαS `X` with `1 < alpha < 2`, valid for `0 < p < alpha`.
pub fn real_sas_abs_moment(alpha: f64, gamma_disp: f64, p: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::AlphaOutsideOneTwo(alpha));
    }
    if !(gamma_disp > 0.0) {
        return Err(Error::InvalidDispersion(gamma_disp));
    }
    if !(p > 0.0 && p < alpha) {
        return Err(Error::InfiniteMoment { p, alpha });
    }
    let numerator = 2f64.powf(p + 1.0) * gamma((p + 1.0) / 2.0) * gamma(-p / alpha);
    let denominator = alpha * PI.sqrt() * gamma(-p / 2.0);
    Ok(gamma_disp.powf(p / alpha) * numerator / denominator)
}

/// Half-width of the arctangent Cauchy quantile: `P(|X| <= q) = prob`.
#[cfg(test)]
fn cauchy_abs_quantile(prob: f64, gamma: f64) -> f64 {
    gamma * (std::f64::consts::FRAC_PI_2 * prob).tan()
}
