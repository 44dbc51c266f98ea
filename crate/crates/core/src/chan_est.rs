//! Channel estimation from received pilots.
//!
//! Two estimators are provided. The de-spread estimator correlates the pilot
//! matrix with each user's pilot and scales the result; under Cauchy noise
//! the de-spread noise is again isotropic Cauchy, with dispersion
//! `gamma * ||phi_k||_1`. The raw-signal estimator maximizes the Cauchy
//! likelihood of the whole `M x tau` pilot matrix by coordinate descent over
//! users, solving each user's `M` per-antenna problems by gradient descent.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{minimize, BacktrackingOptions, Objective};
use crate::system_model::{PilotBook, PowerProfile};
use crate::{ComplexMatrix, ComplexVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationMethod {
    DespreadMl,
    RawMl,
}

/// Starting point of the raw-signal coordinate descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Despread,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RawMlOptions {
    pub max_outer_iterations: usize,
    /// Relative change of `||H_hat||_F` between rounds that ends the descent.
    pub tolerance: f64,
    /// Per-antenna gradient descent, run in coordinates where the Hessian
    /// at zero residual is the identity.
    pub inner: BacktrackingOptions,
}

impl Default for RawMlOptions {
    fn default() -> Self {
        Self {
            max_outer_iterations: 50,
            tolerance: 1e-4,
            inner: BacktrackingOptions::default(),
        }
    }
}

/// Estimator selection used by the experiment layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    DespreadMl,
    RawMl { init: Init, options: RawMlOptions },
}

impl Estimator {
    pub fn estimate(
        &self,
        y: &ComplexMatrix,
        pilots: &PilotBook,
        powers: &PowerProfile,
        gamma: f64,
    ) -> Result<EstimationResult> {
        match self {
            Estimator::DespreadMl => despread_ml(y, pilots, powers, gamma),
            Estimator::RawMl { init, options } => {
                raw_ml_estimate(y, pilots, powers, gamma, *init, options)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Estimator::DespreadMl => "despread_ml".into(),
            Estimator::RawMl { init, .. } => match init {
                Init::Despread => "raw_ml/despread_init".into(),
                Init::Zero => "raw_ml/zero_init".into(),
            },
        }
    }
}

/// Channel estimates with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub h_hat: ComplexMatrix,
    pub method: EstimationMethod,
    /// Full negative log-likelihood objective: the initial value, then one
    /// entry per user update. Empty for the de-spread estimator.
    pub objective_trace: Vec<f64>,
    pub outer_iterations: usize,
    /// Noise dispersion seen by the estimator, per user.
    pub effective_dispersion: Vec<f64>,
}

fn check_dims(y: &ComplexMatrix, pilots: &PilotBook, powers: &PowerProfile) -> Result<()> {
    if y.ncols() != pilots.tau() {
        return Err(Error::DimensionMismatch {
            context: "pilot length",
            expected: pilots.tau(),
            found: y.ncols(),
        });
    }
    if powers.users() != pilots.users() {
        return Err(Error::DimensionMismatch {
            context: "user count",
            expected: pilots.users(),
            found: powers.users(),
        });
    }
    Ok(())
}

/// `y_k = Y phi_k^*`.
pub fn despread(y: &ComplexMatrix, pilot: &ComplexVector) -> Result<ComplexVector> {
    if y.ncols() != pilot.len() {
        return Err(Error::DimensionMismatch {
            context: "despread",
            expected: y.ncols(),
            found: pilot.len(),
        });
    }
    Ok(y * pilot.map(|z| z.conj()))
}

/// `y_k / sqrt(tau p_k)`, the maximizer of the de-spread Cauchy likelihood.
pub fn despread_ml_estimate(y_k: &ComplexVector, tau: usize, p_k: f64) -> ComplexVector {
    y_k / Complex64::from((tau as f64 * p_k).sqrt())
}

/// De-spread ML estimates for every user.
pub fn despread_ml(
    y: &ComplexMatrix,
    pilots: &PilotBook,
    powers: &PowerProfile,
    gamma: f64,
) -> Result<EstimationResult> {
    check_dims(y, pilots, powers)?;
    let tau = pilots.tau();
    let mut h_hat = ComplexMatrix::zeros(y.nrows(), pilots.users());
    for k in 0..pilots.users() {
        let y_k = despread(y, &pilots.pilot(k))?;
        h_hat.set_column(k, &despread_ml_estimate(&y_k, tau, powers.p[k]));
    }
    Ok(EstimationResult {
        h_hat,
        method: EstimationMethod::DespreadMl,
        objective_trace: Vec::new(),
        outer_iterations: 0,
        effective_dispersion: pilots.l1_norms.iter().map(|n| gamma * n).collect(),
    })
}

/// `sum_{l,i} log(gamma^2 + |Y[l,i] - sum_k sqrt(tau p_k) H[l,k] phi_k[i]|^2)`.
pub fn raw_objective(
    h_cand: &ComplexMatrix,
    y: &ComplexMatrix,
    pilots: &PilotBook,
    powers: &PowerProfile,
    gamma: f64,
) -> Result<f64> {
    check_dims(y, pilots, powers)?;
    if h_cand.nrows() != y.nrows() || h_cand.ncols() != pilots.users() {
        return Err(Error::DimensionMismatch {
            context: "raw_objective candidate",
            expected: y.nrows() * pilots.users(),
            found: h_cand.nrows() * h_cand.ncols(),
        });
    }
    let residual = Residual::new(y, h_cand, pilots, powers);
    Ok(residual.objective(gamma * gamma))
}

/// Value and gradient of one antenna's objective
/// `f(h) = sum_i log(gamma^2 + |row_i - c h phi_i|^2)` with `c = sqrt(tau p)`,
/// the gradient taken with respect to `(Re h, Im h)`.
fn antenna_value_and_gradient(
    h: Complex64,
    row: &[Complex64],
    pilot: &[Complex64],
    c: f64,
    gamma_sq: f64,
) -> (f64, [f64; 2]) {
    let mut value = 0.0;
    let mut g_re = 0.0;
    let mut g_im = 0.0;
    for (y, phi) in row.iter().zip(pilot) {
        // p(.) and r(.): real and imaginary parts of the residual.
        let p = y.re - c * (h.re * phi.re - h.im * phi.im);
        let r = y.im - c * (h.im * phi.re + h.re * phi.im);
        let denom = gamma_sq + p * p + r * r;
        value += denom.ln();
        g_re += (phi.re * p + phi.im * r) / denom;
        g_im += (-phi.im * p + phi.re * r) / denom;
    }
    (value, [-2.0 * c * g_re, -2.0 * c * g_im])
}

/// Gradient of one antenna's objective with respect to `(Re h, Im h)`.
///
/// `row` is the interference-cancelled row `Y'[l, :]` and `tau_p` the product
/// `tau * p_k`.
pub fn raw_objective_gradient(
    h: Complex64,
    row: &[Complex64],
    pilot: &[Complex64],
    tau_p: f64,
    gamma: f64,
) -> [f64; 2] {
    antenna_value_and_gradient(h, row, pilot, tau_p.sqrt(), gamma * gamma).1
}

/// Per-antenna subproblem in a rescaled copy of `h`.
struct AntennaProblem<'a> {
    row: &'a [Complex64],
    pilot: &'a [Complex64],
    c: f64,
    /// `u = scale h`; chosen so the Hessian at zero residual is the identity.
    scale: f64,
    gamma_sq: f64,
}

impl AntennaProblem<'_> {
    fn new<'a>(row: &'a [Complex64], pilot: &'a [Complex64], c: f64, gamma_sq: f64) -> AntennaProblem<'a> {
        let energy: f64 = pilot.iter().map(|z| z.norm_sqr()).sum();
        let scale = c * (2.0 * energy / gamma_sq).sqrt();
        AntennaProblem {
            row,
            pilot,
            c,
            scale: if scale > 0.0 { scale } else { 1.0 },
            gamma_sq,
        }
    }

    fn h_of(&self, u: &[f64]) -> Complex64 {
        Complex64::new(u[0], u[1]) / self.scale
    }
}

impl Objective for AntennaProblem<'_> {
    fn value(&self, u: &[f64]) -> f64 {
        let w = self.h_of(u) * self.c;
        self.row
            .iter()
            .zip(self.pilot)
            .map(|(y, phi)| (self.gamma_sq + (y - w * phi).norm_sqr()).ln())
            .sum()
    }

    fn value_and_gradient(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        let (value, g) =
            antenna_value_and_gradient(self.h_of(u), self.row, self.pilot, self.c, self.gamma_sq);
        grad[0] = g[0] / self.scale;
        grad[1] = g[1] / self.scale;
        value
    }
}

/// Row-major residual `E = Y - sum_k c_k h_k phi_k^T` kept in sync with the estimates.
struct Residual {
    antennas: usize,
    tau: usize,
    data: Vec<Complex64>,
    pilots: Vec<Vec<Complex64>>,
    scales: Vec<f64>,
}

impl Residual {
    fn new(y: &ComplexMatrix, h: &ComplexMatrix, pilots: &PilotBook, powers: &PowerProfile) -> Self {
        let (antennas, tau) = (y.nrows(), y.ncols());
        let pilot_cols: Vec<Vec<Complex64>> = (0..pilots.users())
            .map(|k| pilots.columns.column(k).iter().copied().collect())
            .collect();
        let scales: Vec<f64> = powers.p.iter().map(|p| (tau as f64 * p).sqrt()).collect();
        let mut data = Vec::with_capacity(antennas * tau);
        for l in 0..antennas {
            for i in 0..tau {
                let mut e = y[(l, i)];
                for k in 0..pilot_cols.len() {
                    e -= h[(l, k)] * scales[k] * pilot_cols[k][i];
                }
                data.push(e);
            }
        }
        Self {
            antennas,
            tau,
            data,
            pilots: pilot_cols,
            scales,
        }
    }

    fn objective(&self, gamma_sq: f64) -> f64 {
        self.data.iter().map(|e| (gamma_sq + e.norm_sqr()).ln()).sum()
    }

    fn row_mut(&mut self, l: usize) -> &mut [Complex64] {
        &mut self.data[l * self.tau..(l + 1) * self.tau]
    }
}

/// Raw-signal ML estimate by coordinate descent over users.
///
/// Each round visits users in order; for user `k` every antenna solves
/// `min_h sum_i log(gamma^2 + |Y'[l,i] - sqrt(tau p_k) h phi_k[i]|^2)` from the
/// current estimate, where `Y'` removes the other users' current
/// contributions. Rounds stop when `||H_hat||_F` changes by less than
/// `tolerance` (relative) or after `max_outer_iterations`.
pub fn raw_ml_estimate(
    y: &ComplexMatrix,
    pilots: &PilotBook,
    powers: &PowerProfile,
    gamma: f64,
    init: Init,
    opts: &RawMlOptions,
) -> Result<EstimationResult> {
    check_dims(y, pilots, powers)?;
    let users = pilots.users();
    let mut h_hat = match init {
        Init::Zero => ComplexMatrix::zeros(y.nrows(), users),
        Init::Despread => despread_ml(y, pilots, powers, gamma)?.h_hat,
    };
    let gamma_sq = gamma * gamma;
    let mut residual = Residual::new(y, &h_hat, pilots, powers);
    let mut trace = vec![residual.objective(gamma_sq)];
    let mut previous_norm = h_hat.norm();
    let mut outer_iterations = 0;
    let mut row = vec![Complex64::new(0.0, 0.0); pilots.tau()];

    for round in 1..=opts.max_outer_iterations {
        outer_iterations = round;
        for k in 0..users {
            let c = residual.scales[k];
            let pilot = residual.pilots[k].clone();
            for l in 0..residual.antennas {
                let current = h_hat[(l, k)] * c;
                for ((dst, e), phi) in row.iter_mut().zip(residual.row_mut(l).iter()).zip(&pilot) {
                    *dst = e + current * phi;
                }
                let problem = AntennaProblem::new(&row, &pilot, c, gamma_sq);
                let start = h_hat[(l, k)] * problem.scale;
                let best = minimize(&problem, vec![start.re, start.im], &opts.inner);
                let h = problem.h_of(&best.x);
                h_hat[(l, k)] = h;
                let w = h * c;
                for ((e, y_row), phi) in residual.row_mut(l).iter_mut().zip(&row).zip(&pilot) {
                    *e = y_row - w * phi;
                }
            }
            trace.push(residual.objective(gamma_sq));
        }
        let norm = h_hat.norm();
        let converged = if previous_norm > 0.0 {
            ((norm - previous_norm) / previous_norm).abs() < opts.tolerance
        } else {
            norm == 0.0
        };
        previous_norm = norm;
        if converged {
            break;
        }
    }

    Ok(EstimationResult {
        h_hat,
        method: EstimationMethod::RawMl,
        objective_trace: trace,
        outer_iterations,
        effective_dispersion: vec![gamma; users],
    })
}
