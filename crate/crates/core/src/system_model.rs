//! Pilot books, Rayleigh channels and received signals.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stable_noise::{NoiseKind, StableNoiseSpec};
use crate::{ComplexMatrix, ComplexVector};

/// Which unitary matrix the pilot columns are taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotKind {
    Dft,
    Identity,
}

impl PilotKind {
    pub fn name(self) -> &'static str {
        match self {
            PilotKind::Dft => "dft",
            PilotKind::Identity => "identity",
        }
    }
}

/// `tau x K` matrix of orthonormal pilot columns plus their l1 norms.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    pub kind: PilotKind,
    pub columns: ComplexMatrix,
    pub l1_norms: Vec<f64>,
}

impl PilotBook {
    pub fn tau(&self) -> usize {
        self.columns.nrows()
    }

    pub fn users(&self) -> usize {
        self.columns.ncols()
    }

    /// Pilot vector of user `k`.
    pub fn pilot(&self, k: usize) -> ComplexVector {
        self.columns.column(k).into_owned()
    }
}

/// First `users` columns of the `tau x tau` normalized DFT or identity matrix.
pub fn make_pilots(tau: usize, users: usize, kind: PilotKind) -> Result<PilotBook> {
    if users > tau || tau == 0 {
        return Err(Error::TooManyUsers { users, tau });
    }
    let columns = match kind {
        PilotKind::Dft => {
            let scale = 1.0 / (tau as f64).sqrt();
            DMatrix::from_fn(tau, users, |i, k| {
                let angle = -2.0 * PI * (i * k % tau) as f64 / tau as f64;
                Complex64::from_polar(scale, angle)
            })
        }
        PilotKind::Identity => DMatrix::from_fn(tau, users, |i, k| {
            if i == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
    };
    let l1_norms = columns
        .column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum())
        .collect();
    Ok(PilotBook {
        kind,
        columns,
        l1_norms,
    })
}

/// Channel matrix `H` (`M x K`), one column per user.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: ComplexMatrix,
}

impl ChannelRealization {
    /// i.i.d. `CN(0, 1)` entries: real and imaginary parts each `N(0, 1/2)`.
    pub fn draw<R: Rng + ?Sized>(antennas: usize, users: usize, rng: &mut R) -> Self {
        let h = DMatrix::from_fn(antennas, users, |_, _| complex_normal(rng));
        Self { h }
    }

    pub fn antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }
}

/// Unit-variance circularly symmetric complex Gaussian variate.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Uplink,
    Downlink,
}

/// Linear-scale signal-to-dispersion ratio per user.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    pub p: Vec<f64>,
    pub direction: Direction,
}

impl PowerProfile {
    pub fn new(p: Vec<f64>, direction: Direction) -> Result<Self> {
        if let Some(bad) = p.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Config {
                field: "powers".into(),
                reason: format!("power {bad} must be positive"),
            });
        }
        Ok(Self { p, direction })
    }

    /// `users - 1` users at fixed dB levels (cycled from `fixed_db`) and the
    /// last user at `swept_db`.
    pub fn swept_last(
        users: usize,
        fixed_db: &[f64],
        swept_db: f64,
        direction: Direction,
    ) -> Result<Self> {
        if users > 1 && fixed_db.is_empty() {
            return Err(Error::Config {
                field: "fixed_powers_db".into(),
                reason: "needs at least one entry when K > 1".into(),
            });
        }
        let p = (0..users)
            .map(|k| {
                if k + 1 == users {
                    db_to_linear(swept_db)
                } else {
                    db_to_linear(fixed_db[k % fixed_db.len()])
                }
            })
            .collect();
        Self::new(p, direction)
    }

    pub fn users(&self) -> usize {
        self.p.len()
    }
}

/// Coherence block of `t` samples, the first `tau` of which carry pilots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoherenceBlock {
    pub t: usize,
    pub tau: usize,
}

impl CoherenceBlock {
    pub fn new(t: usize, tau: usize) -> Result<Self> {
        if tau == 0 || tau >= t {
            return Err(Error::Config {
                field: "tau".into(),
                reason: format!("need 0 < tau < T, got tau = {tau}, T = {t}"),
            });
        }
        Ok(Self { t, tau })
    }

    /// Pilot overhead penalty `1 - tau / T`.
    pub fn prelog(&self) -> f64 {
        1.0 - self.tau as f64 / self.t as f64
    }

    pub fn data_symbols(&self) -> usize {
        self.t - self.tau
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

fn draw_noise<R: Rng + ?Sized>(noise: Option<&StableNoiseSpec>, rng: &mut R) -> Complex64 {
    match noise {
        Some(spec) => spec.draw_complex(rng),
        None => Complex64::new(0.0, 0.0),
    }
}

fn check_noise(noise: Option<&StableNoiseSpec>) -> Result<()> {
    if let Some(spec) = noise {
        spec.validate()?;
        if spec.kind != NoiseKind::IsotropicComplex {
            return Err(Error::NoiseKindMismatch {
                expected: "isotropic_complex",
                found: "real_sas",
            });
        }
    }
    Ok(())
}

fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

/// `Y = sum_k sqrt(tau p_k) h_k phi_k^T + N` (`M x tau`). `noise = None`
/// disables the noise term.
pub fn received_pilots<R: Rng + ?Sized>(
    channel: &ChannelRealization,
    pilots: &PilotBook,
    powers: &PowerProfile,
    noise: Option<&StableNoiseSpec>,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    check_noise(noise)?;
    check_dim("received_pilots users", channel.users(), pilots.users())?;
    check_dim("received_pilots powers", channel.users(), powers.users())?;
    let tau = pilots.tau();
    let mut scaled = channel.h.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= Complex64::from((tau as f64 * powers.p[k]).sqrt());
    }
    let mut y = scaled * pilots.columns.transpose();
    for v in y.iter_mut() {
        *v += draw_noise(noise, rng);
    }
    Ok(y)
}

/// Uplink data sample `r = sum_k sqrt(p_k) h_k s_k + n` (length `M`).
pub fn received_data_uplink<R: Rng + ?Sized>(
    channel: &ChannelRealization,
    powers: &PowerProfile,
    symbols: &[Complex64],
    noise: Option<&StableNoiseSpec>,
    rng: &mut R,
) -> Result<ComplexVector> {
    check_noise(noise)?;
    check_dim("received_data_uplink symbols", channel.users(), symbols.len())?;
    check_dim("received_data_uplink powers", channel.users(), powers.users())?;
    let mut r = DVector::zeros(channel.antennas());
    for (k, s) in symbols.iter().enumerate() {
        let weight = *s * powers.p[k].sqrt();
        r.axpy(weight, &channel.h.column(k), Complex64::new(1.0, 0.0));
    }
    for v in r.iter_mut() {
        *v += draw_noise(noise, rng);
    }
    Ok(r)
}

/// Downlink samples `y_k = sum_l sqrt(p_l) h_k^T a_l s_l + n_k` (length `K`).
///
/// Every precoder column must have unit norm (tolerance `1e-9`).
pub fn received_data_downlink<R: Rng + ?Sized>(
    channel: &ChannelRealization,
    precoder: &ComplexMatrix,
    powers: &PowerProfile,
    symbols: &[Complex64],
    noise: Option<&StableNoiseSpec>,
    rng: &mut R,
) -> Result<ComplexVector> {
    check_noise(noise)?;
    check_dim("received_data_downlink antennas", channel.antennas(), precoder.nrows())?;
    check_dim("received_data_downlink streams", channel.users(), precoder.ncols())?;
    check_dim("received_data_downlink symbols", channel.users(), symbols.len())?;
    check_dim("received_data_downlink powers", channel.users(), powers.users())?;
    for (column, a) in precoder.column_iter().enumerate() {
        let norm = a.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NonUnitPrecoder { column, norm });
        }
    }
    let weighted = DVector::from_iterator(
        symbols.len(),
        symbols.iter().zip(&powers.p).map(|(s, p)| *s * p.sqrt()),
    );
    let mut y = channel.h.transpose() * (precoder * weighted);
    for v in y.iter_mut() {
        *v += draw_noise(noise, rng);
    }
    Ok(y)
}
