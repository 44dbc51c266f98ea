//! Gradient descent with backtracking (Armijo) line search.
//!
//! Shared by the raw-signal channel estimator, the relaxed Cauchy detector
//! and the uplink soft demapper.

use serde::{Deserialize, Serialize};

/// Line-search and stopping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BacktrackingOptions {
    /// First trial step of every iteration.
    pub initial_step: f64,
    /// Step multiplier after a rejected trial.
    pub shrink: f64,
    /// Sufficient-decrease constant `c` in `f(x - t g) <= f(x) - c t |g|^2`.
    pub sufficient_decrease: f64,
    pub max_iterations: usize,
    /// Trials per iteration before the search gives up.
    pub max_backtracks: usize,
    /// Stop once `|g| <= gradient_tolerance`.
    pub gradient_tolerance: f64,
    /// Stop once an accepted step improves `f` by less than this, relative to `1 + |f|`.
    pub value_tolerance: f64,
}

impl Default for BacktrackingOptions {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_iterations: 100,
            max_backtracks: 60,
            gradient_tolerance: 1e-10,
            value_tolerance: 1e-15,
        }
    }
}

/// A smooth function of a real vector.
pub trait Objective {
    fn value(&self, x: &[f64]) -> f64;

    /// Writes the gradient into `grad` and returns the value.
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

/// Outcome of [`minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Minimizes `objective` from `x0`. The returned value never exceeds `f(x0)`.
pub fn minimize<O: Objective + ?Sized>(
    objective: &O,
    x0: Vec<f64>,
    opts: &BacktrackingOptions,
) -> Minimum {
    let n = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut value = objective.value_and_gradient(&x, &mut grad);
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
        if grad_sq.sqrt() <= opts.gradient_tolerance || !grad_sq.is_finite() {
            break;
        }
        iterations += 1;

        let mut step = opts.initial_step;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            for ((t, xi), gi) in trial.iter_mut().zip(&x).zip(&grad) {
                *t = xi - step * gi;
            }
            let candidate = objective.value(&trial);
            if candidate <= value - opts.sufficient_decrease * step * grad_sq {
                accepted = Some(candidate);
                break;
            }
            step *= opts.shrink;
        }
        let Some(candidate) = accepted else { break };

        let improvement = value - candidate;
        std::mem::swap(&mut x, &mut trial);
        value = objective.value_and_gradient(&x, &mut grad);
        if improvement <= opts.value_tolerance * (1.0 + value.abs()) {
            break;
        }
    }

    Minimum {
        x,
        value,
        iterations,
    }
}
