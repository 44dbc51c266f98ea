//! Monte-Carlo achievable rates for finite constellations, the SαS capacity
//! lower bound, and the mismatched rate of a Cauchy decoder.
//!
//! Every estimator draws its trials in fixed-size chunks, each from its own
//! seeded substream, so results do not depend on the thread count.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::chan_est::Estimator;
use crate::coding::adjust_dispersion;
use crate::detect::SymbolAlphabet;
use crate::error::{Error, Result};
use crate::rng::{stream_id, substream, SimRng};
use crate::stable_noise::{real_sas_abs_moment, NoiseKind, StableNoiseSpec};
use crate::system_model::{
    complex_normal, make_pilots, received_pilots, ChannelRealization, CoherenceBlock, Direction,
    PilotKind, PowerProfile,
};

/// Trials per seeded chunk.
const CHUNK: usize = 1000;

/// A rate in bits per channel use with its Monte-Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub bpcu: f64,
    pub n_trials: usize,
    pub std_error: f64,
    pub prelog: f64,
}

/// Monte-Carlo budget: trial count and base seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McBudget {
    pub n_trials: usize,
    pub seed: u64,
}

impl McBudget {
    pub fn new(n_trials: usize, seed: u64) -> Self {
        Self { n_trials, seed }
    }
}

/// Mean and standard error of the mean.
fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `log2 sum_x exp(ll(x) - ll(sent))`, the per-trial penalty term.
fn log_ratio(log_likelihoods: &[f64], sent: usize) -> f64 {
    let max = log_likelihoods.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_likelihoods.iter().map(|l| (l - max).exp()).sum();
    (max - log_likelihoods[sent] + sum.ln()) / std::f64::consts::LN_2
}

/// Turns per-trial penalty terms into a rate. `groups` are averaged first
/// when trials inside a group share a channel draw.
fn rate_from_groups(alphabet: &SymbolAlphabet, groups: &[Vec<f64>], prelog: f64) -> RateEstimate {
    let n_trials: usize = groups.iter().map(Vec::len).sum();
    let (mean, se) = if groups.len() > 1 {
        let means: Vec<f64> = groups
            .iter()
            .map(|g| g.iter().sum::<f64>() / g.len() as f64)
            .collect();
        mean_and_se(&means)
    } else {
        mean_and_se(&groups[0])
    };
    let log_s = (alphabet.len() as f64).log2();
    RateEstimate {
        bpcu: prelog * (log_s - mean),
        n_trials,
        std_error: prelog * se,
        prelog,
    }
}

fn chunked<F>(budget: McBudget, trial: F) -> Vec<f64>
where
    F: Fn(&mut SimRng) -> f64 + Sync,
{
    let chunks = budget.n_trials.div_ceil(CHUNK);
    let per_chunk: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(budget.seed, c as u64);
            let len = CHUNK.min(budget.n_trials - c * CHUNK);
            (0..len).map(|_| trial(&mut rng)).collect()
        })
        .collect();
    per_chunk.concat()
}

/// Generic estimate of `log2 S - E[log2 sum_x p(Y|x) / p(Y|X)]` with `X`
/// uniform on the alphabet.
///
/// `draw` returns the sent index and an observation; `log_likelihood`
/// evaluates `log p(observation | x)` up to an additive constant shared by
/// all `x`.
pub fn mutual_info_siso_mc<O, D, L>(
    alphabet: &SymbolAlphabet,
    log_likelihood: L,
    draw: D,
    budget: McBudget,
) -> RateEstimate
where
    D: Fn(&mut SimRng) -> (usize, O) + Sync,
    L: Fn(&O, Complex64) -> f64 + Sync,
{
    let penalties = chunked(budget, |rng| {
        let (sent, obs) = draw(rng);
        let lls: Vec<f64> = alphabet.points().iter().map(|&x| log_likelihood(&obs, x)).collect();
        log_ratio(&lls, sent)
    });
    rate_from_groups(alphabet, &[penalties], 1.0)
}

/// `-1.5 log(gamma^2 + |e|^2)`: isotropic Cauchy log density up to a constant.
fn cauchy_ll(e: Complex64, gamma_sq: f64) -> f64 {
    -1.5 * (gamma_sq + e.norm_sqr()).ln()
}

fn check_noise(noise: &StableNoiseSpec) -> Result<()> {
    noise.validate()?;
    if noise.kind != NoiseKind::IsotropicComplex {
        return Err(Error::NoiseKindMismatch {
            expected: "isotropic_complex",
            found: "real_sas",
        });
    }
    Ok(())
}

/// Perfect-CSI single-user uplink rate with `M` antennas. The receiver
/// scores hypotheses with the Cauchy density of dispersion `metric_gamma`.
pub fn uplink_rate_perfect_csi(
    antennas: usize,
    alphabet: &SymbolAlphabet,
    power: f64,
    noise: &StableNoiseSpec,
    metric_gamma: f64,
    budget: McBudget,
) -> Result<RateEstimate> {
    check_noise(noise)?;
    let amp = power.sqrt();
    let gamma_sq = metric_gamma * metric_gamma;
    Ok(mutual_info_siso_mc(
        alphabet,
        |(h, y): &(Vec<Complex64>, Vec<Complex64>), x| {
            h.iter().zip(y).map(|(h, y)| cauchy_ll(y - h * amp * x, gamma_sq)).sum()
        },
        |rng| {
            let sent = rng.random_range(0..alphabet.len());
            let x = alphabet.point(sent);
            let h: Vec<Complex64> = (0..antennas).map(|_| complex_normal(rng)).collect();
            let y = h.iter().map(|h| h * amp * x + noise.draw_complex(rng)).collect();
            (sent, (h, y))
        },
        budget,
    ))
}

/// How the receiver sets the likelihood dispersion under imperfect CSI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionMode {
    /// Use the noise dispersion.
    Ignore,
    /// Use `gamma_tilde` from a calibration batch of estimation errors.
    Consider,
}

/// Pilot phase and estimator for imperfect-CSI rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ImperfectCsi {
    pub coherence: CoherenceBlock,
    pub pilot_kind: PilotKind,
    pub estimator: Estimator,
    pub mode: DispersionMode,
    /// Data trials drawn per channel realization.
    pub symbols_per_block: usize,
    /// Coherence blocks used to calibrate `gamma_tilde`.
    pub calibration_blocks: usize,
    /// Drop the pilot noise, which makes the estimate exact.
    pub noiseless_pilots: bool,
}

impl ImperfectCsi {
    pub fn new(coherence: CoherenceBlock, estimator: Estimator) -> Self {
        Self {
            coherence,
            pilot_kind: PilotKind::Dft,
            estimator,
            mode: DispersionMode::Ignore,
            symbols_per_block: 200,
            calibration_blocks: 50,
            noiseless_pilots: false,
        }
    }

    /// Single-user channel estimate for one block.
    fn estimate(
        &self,
        h: &ChannelRealization,
        power: f64,
        noise: &StableNoiseSpec,
        rng: &mut SimRng,
    ) -> Result<Vec<Complex64>> {
        let pilots = make_pilots(self.coherence.tau, 1, self.pilot_kind)?;
        let powers = PowerProfile::new(vec![power], Direction::Uplink)?;
        let y = received_pilots(h, &pilots, &powers, (!self.noiseless_pilots).then_some(noise), rng)?;
        let est = self.estimator.estimate(&y, &pilots, &powers, noise.gamma)?;
        Ok(est.h_hat.column(0).iter().copied().collect())
    }

    /// Likelihood dispersion for this power.
    fn metric_gamma(
        &self,
        antennas: usize,
        power: f64,
        noise: &StableNoiseSpec,
        seed: u64,
    ) -> Result<f64> {
        match self.mode {
            DispersionMode::Ignore => Ok(noise.gamma),
            DispersionMode::Consider => {
                let mut rng = substream(seed, u64::MAX);
                let mut errors = Vec::new();
                for _ in 0..self.calibration_blocks.max(1) {
                    let h = ChannelRealization::draw(antennas, 1, &mut rng);
                    let h_hat = self.estimate(&h, power, noise, &mut rng)?;
                    errors.extend(h.h.column(0).iter().zip(&h_hat).map(|(a, b)| a - b));
                }
                adjust_dispersion(&[errors], &[power], noise.gamma)
            }
        }
    }

    /// Runs `block` once per coherence block, each with its own substream,
    /// and returns the per-block penalty vectors in block order.
    fn blocks<F>(&self, budget: McBudget, block: F) -> Result<Vec<Vec<f64>>>
    where
        F: Fn(&mut SimRng) -> Result<Vec<f64>> + Sync,
    {
        let per_block = self.symbols_per_block.max(1);
        let n_blocks = budget.n_trials.div_ceil(per_block);
        (0..n_blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = substream(budget.seed, stream_id(1, b as u64));
                block(&mut rng)
            })
            .collect()
    }
}

/// Single-user uplink rate when the receiver treats the estimate as the channel.
pub fn uplink_rate_imperfect_csi(
    antennas: usize,
    alphabet: &SymbolAlphabet,
    power: f64,
    noise: &StableNoiseSpec,
    csi: &ImperfectCsi,
    budget: McBudget,
) -> Result<RateEstimate> {
    check_noise(noise)?;
    let gamma_eff = csi.metric_gamma(antennas, power, noise, budget.seed)?;
    let gamma_sq = gamma_eff * gamma_eff;
    let amp = power.sqrt();
    let groups = csi.blocks(budget, |rng| {
        let h = ChannelRealization::draw(antennas, 1, rng);
        let h_hat = csi.estimate(&h, power, noise, rng)?;
        let truth: Vec<Complex64> = h.h.column(0).iter().copied().collect();
        let mut penalties = Vec::with_capacity(csi.symbols_per_block);
        let mut lls = vec![0.0; alphabet.len()];
        for _ in 0..csi.symbols_per_block.max(1) {
            let sent = rng.random_range(0..alphabet.len());
            let x = alphabet.point(sent);
            let y: Vec<Complex64> = truth.iter().map(|h| h * amp * x + noise.draw_complex(rng)).collect();
            for (ll, &cand) in lls.iter_mut().zip(alphabet.points()) {
                *ll = h_hat.iter().zip(&y).map(|(h, y)| cauchy_ll(y - h * amp * cand, gamma_sq)).sum();
            }
            penalties.push(log_ratio(&lls, sent));
        }
        Ok(penalties)
    })?;
    Ok(rate_from_groups(alphabet, &groups, csi.coherence.prelog()))
}

/// Channel knowledge for the downlink rate.
#[derive(Debug, Clone, PartialEq)]
pub enum DownlinkCsi {
    Perfect,
    Imperfect(ImperfectCsi),
}

/// Single-user downlink rate with a matched precoder. With perfect CSI the
/// user sees `sqrt(p) ||h|| s + n`; otherwise the precoder is
/// `h_hat^* / ||h_hat||`, the true gain is `h^T h_hat^* / ||h_hat||`, and
/// the user decodes with the gain `||h_hat||`.
pub fn downlink_rate(
    antennas: usize,
    alphabet: &SymbolAlphabet,
    power: f64,
    noise: &StableNoiseSpec,
    metric_gamma: f64,
    csi: &DownlinkCsi,
    budget: McBudget,
) -> Result<RateEstimate> {
    check_noise(noise)?;
    let amp = power.sqrt();
    let gamma_sq = metric_gamma * metric_gamma;
    match csi {
        DownlinkCsi::Perfect => Ok(mutual_info_siso_mc(
            alphabet,
            |(g, y): &(f64, Complex64), x| cauchy_ll(y - x * g * amp, gamma_sq),
            |rng| {
                let sent = rng.random_range(0..alphabet.len());
                let g = (0..antennas).map(|_| complex_normal(rng).norm_sqr()).sum::<f64>().sqrt();
                let y = alphabet.point(sent) * g * amp + noise.draw_complex(rng);
                (sent, (g, y))
            },
            budget,
        )),
        DownlinkCsi::Imperfect(imperfect) => {
            let groups = imperfect.blocks(budget, |rng| {
                let h = ChannelRealization::draw(antennas, 1, rng);
                let h_hat = imperfect.estimate(&h, power, noise, rng)?;
                let norm = h_hat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let true_gain = if norm > 0.0 {
                    h.h.column(0).iter().zip(&h_hat).map(|(a, b)| a * b.conj()).sum::<Complex64>() / norm
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let mut penalties = Vec::with_capacity(imperfect.symbols_per_block);
                let mut lls = vec![0.0; alphabet.len()];
                for _ in 0..imperfect.symbols_per_block.max(1) {
                    let sent = rng.random_range(0..alphabet.len());
                    let y = alphabet.point(sent) * true_gain * amp + noise.draw_complex(rng);
                    for (ll, &cand) in lls.iter_mut().zip(alphabet.points()) {
                        *ll = cauchy_ll(y - cand * norm * amp, gamma_sq);
                    }
                    penalties.push(log_ratio(&lls, sent));
                }
                Ok(penalties)
            })?;
            Ok(rate_from_groups(alphabet, &groups, imperfect.coherence.prelog()))
        }
    }
}

fn check_alpha_open(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::AlphaOutsideOneTwo(alpha));
    }
    Ok(())
}

/// `(2 / alpha) log2(1 + (sqrt(p) c / E|N^R|)^alpha)`, a lower bound on the
/// capacity of `Y = sqrt(p) X + N` with SαS noise and `E|X^R| <= c`.
pub fn capacity_lower_bound_sas(alpha: f64, gamma: f64, power: f64, c: f64) -> Result<f64> {
    check_alpha_open(alpha)?;
    let moment = real_sas_abs_moment(alpha, gamma, 1.0)?;
    let ratio = power.max(0.0).sqrt() * c / moment;
    Ok(2.0 / alpha * (1.0 + ratio.powf(alpha)).log2())
}

/// Power at which [`capacity_lower_bound_sas`] equals `rate`.
pub fn capacity_bound_power(alpha: f64, gamma: f64, rate: f64, c: f64) -> Result<f64> {
    check_alpha_open(alpha)?;
    let moment = real_sas_abs_moment(alpha, gamma, 1.0)?;
    let ratio = (2f64.powf(rate * alpha / 2.0) - 1.0).powf(1.0 / alpha);
    Ok((ratio * moment / c).powi(2))
}

/// Mismatched rate of `Y = sqrt(p) X + N` with isotropic SαS noise of
/// exponent `alpha` and dispersion `gamma`, decoded with the Cauchy density
/// of the same dispersion.
pub fn mismatched_rate_cauchy_decoder(
    alpha: f64,
    gamma: f64,
    alphabet: &SymbolAlphabet,
    power: f64,
    budget: McBudget,
) -> Result<RateEstimate> {
    let noise = StableNoiseSpec::new(alpha, gamma, NoiseKind::IsotropicComplex)?;
    let amp = power.sqrt();
    let gamma_sq = gamma * gamma;
    Ok(mutual_info_siso_mc(
        alphabet,
        |y: &Complex64, x| cauchy_ll(y - x * amp, gamma_sq),
        |rng| {
            let sent = rng.random_range(0..alphabet.len());
            (sent, alphabet.point(sent) * amp + noise.draw_complex(rng))
        },
        budget,
    ))
}
