//! Bit log-likelihood ratios for the uplink (relaxed max-log) and the
//! downlink (exact sum over the constellation).

use std::cell::Cell;

use num_complex::Complex64;

use crate::detect::{nearest_symbol, RelaxedCauchy, SymbolAlphabet};
use crate::error::{Error, Result};
use crate::optim::BacktrackingOptions;
use crate::{ComplexMatrix, ComplexVector};

/// Exponent of the isotropic complex Cauchy density `(gamma^2 + |e|^2)^{-3/2}`.
const CAUCHY_EXPONENT: f64 = 1.5;

/// Per-bit LLRs of one user's packet.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFrame {
    pub llrs: Vec<f64>,
    pub dispersion_used: f64,
    pub user: usize,
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Uplink soft demapper for one received vector.
///
/// For user `k` and bit `i`, each of the `S/2` symbols with that bit equal to
/// `b` is fixed in turn, the other users' symbols are found by the relaxed
/// Cauchy minimization from zero and hardened, and the Cauchy likelihood is
/// evaluated at the hardened vector. The LLR is the log ratio of the best
/// bit-0 and bit-1 likelihoods.
pub struct UplinkDemapper<'a> {
    r: &'a ComplexVector,
    h_hat: &'a ComplexMatrix,
    powers: &'a [f64],
    gamma: f64,
    alphabet: &'a SymbolAlphabet,
    opts: BacktrackingOptions,
    inner_solves: Cell<usize>,
}

impl<'a> UplinkDemapper<'a> {
    pub fn new(
        r: &'a ComplexVector,
        h_hat: &'a ComplexMatrix,
        powers: &'a [f64],
        gamma: f64,
        alphabet: &'a SymbolAlphabet,
        opts: BacktrackingOptions,
    ) -> Result<Self> {
        if r.len() != h_hat.nrows() || powers.len() != h_hat.ncols() {
            return Err(Error::DimensionMismatch {
                context: "uplink demapper",
                expected: h_hat.nrows() * h_hat.ncols(),
                found: r.len() * powers.len(),
            });
        }
        Ok(Self {
            r,
            h_hat,
            powers,
            gamma,
            alphabet,
            opts,
            inner_solves: Cell::new(0),
        })
    }

    /// Relaxed minimizations run so far.
    pub fn inner_solves(&self) -> usize {
        self.inner_solves.get()
    }

    /// `sum_i log(gamma^2 + |residual_i|^2)` at user `k`'s symbol `index`
    /// with the others chosen by relaxation and rounding.
    fn hypothesis_cost(&self, k: usize, index: usize) -> f64 {
        let users = self.h_hat.ncols();
        let fixed = self.alphabet.point(index);
        let mut symbols = vec![Complex64::new(0.0, 0.0); users];
        symbols[k] = fixed;
        if users > 1 {
            let free: Vec<usize> = (0..users).filter(|&j| j != k).collect();
            let problem =
                RelaxedCauchy::new(self.r, self.h_hat, self.powers, self.gamma, &free, &[(k, fixed)]);
            let soft = problem.solve(&self.opts);
            self.inner_solves.set(self.inner_solves.get() + 1);
            for (j, z) in free.iter().zip(soft) {
                symbols[*j] = self.alphabet.point(nearest_symbol(z, self.alphabet));
            }
        }
        crate::detect::cauchy_detection_objective(&symbols, self.r, self.h_hat, self.powers, self.gamma)
    }

    fn llr_from_costs(&self, costs: &[f64], bit: usize) -> f64 {
        let best = |value: u8| {
            self.alphabet
                .indices_with_bit(bit, value)
                .into_iter()
                .map(|t| costs[t])
                .fold(f64::INFINITY, f64::min)
        };
        CAUCHY_EXPONENT * (best(1) - best(0))
    }

    /// LLR of bit `bit` of user `k`, solving `S/2` problems per bit value.
    pub fn llr(&self, k: usize, bit: usize) -> f64 {
        let mut costs = vec![f64::INFINITY; self.alphabet.len()];
        for value in [0, 1] {
            for t in self.alphabet.indices_with_bit(bit, value) {
                costs[t] = self.hypothesis_cost(k, t);
            }
        }
        self.llr_from_costs(&costs, bit)
    }

    /// All bit LLRs of user `k`. Each candidate symbol is solved once and
    /// shared between the bits, which gives the same values as calling
    /// [`UplinkDemapper::llr`] per bit with `S` instead of `S log2 S` solves.
    pub fn symbol_llrs(&self, k: usize) -> Vec<f64> {
        let costs: Vec<f64> = (0..self.alphabet.len()).map(|t| self.hypothesis_cost(k, t)).collect();
        (0..self.alphabet.bits_per_symbol())
            .map(|bit| self.llr_from_costs(&costs, bit))
            .collect()
    }
}

/// Downlink LLR from the scalar model `y = sqrt(p) g s + n`:
/// `log sum_{s: b=0} p(y|s) - log sum_{s: b=1} p(y|s)` with the isotropic
/// Cauchy density.
pub fn llr_downlink(
    y: Complex64,
    gain: f64,
    power: f64,
    gamma: f64,
    alphabet: &SymbolAlphabet,
    bit: usize,
) -> f64 {
    let amplitude = power.sqrt() * gain;
    let gamma_sq = gamma * gamma;
    let side = |value: u8| {
        let terms: Vec<f64> = alphabet
            .indices_with_bit(bit, value)
            .into_iter()
            .map(|t| -CAUCHY_EXPONENT * (gamma_sq + (y - alphabet.point(t) * amplitude).norm_sqr()).ln())
            .collect();
        log_sum_exp(&terms)
    };
    side(0) - side(1)
}
