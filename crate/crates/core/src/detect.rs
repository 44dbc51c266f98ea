//! Uplink hard symbol detection.
//!
//! The Gaussian detector is zero forcing followed by per-user rounding. The
//! Cauchy detector drops the constellation constraint, minimizes
//! `sum_i log(gamma^2 + |r_i - sum_k sqrt(p_k) h_hat[i,k] s_k|^2)` by gradient
//! descent from the zero vector, and rounds the relaxed solution.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::optim::{minimize, BacktrackingOptions, Objective};
use crate::{ComplexMatrix, ComplexVector};

/// Finite constellation with a bit label per point.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolAlphabet {
    points: Vec<Complex64>,
    labels: Vec<u32>,
    bits_per_symbol: usize,
}

impl SymbolAlphabet {
    /// Builds an alphabet from points and their bit labels. The size must be
    /// a power of two, the labels a permutation of `0..S`, and the average
    /// energy one.
    pub fn new(points: Vec<Complex64>, labels: Vec<u32>) -> Result<Self> {
        let size = points.len();
        if size < 2 || !size.is_power_of_two() || labels.len() != size {
            return Err(Error::Config {
                field: "alphabet".into(),
                reason: format!("{size} points with {} labels", labels.len()),
            });
        }
        let mut seen = vec![false; size];
        for &l in &labels {
            if l as usize >= size || std::mem::replace(&mut seen[l as usize], true) {
                return Err(Error::Config {
                    field: "alphabet".into(),
                    reason: "labels must be a permutation of 0..S".into(),
                });
            }
        }
        let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / size as f64;
        if (energy - 1.0).abs() > 1e-9 {
            return Err(Error::Config {
                field: "alphabet".into(),
                reason: format!("average energy {energy} is not 1"),
            });
        }
        Ok(Self {
            points,
            labels,
            bits_per_symbol: size.trailing_zeros() as usize,
        })
    }

    /// Gray-mapped QPSK: bit 0 selects the sign of the real part, bit 1 the
    /// sign of the imaginary part (bit value 0 is the positive half plane).
    /// Point `i` carries label `i`.
    pub fn qpsk() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let points = (0..4u32)
            .map(|i| {
                let re = if i & 1 == 0 { a } else { -a };
                let im = if i & 2 == 0 { a } else { -a };
                Complex64::new(re, im)
            })
            .collect();
        Self::new(points, vec![0, 1, 2, 3]).expect("QPSK is valid")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Value of bit `bit` (0 = least significant) in the label of `index`.
    pub fn bit(&self, index: usize, bit: usize) -> u8 {
        ((self.labels[index] >> bit) & 1) as u8
    }

    /// Indices whose label has `bit` equal to `value`, in index order.
    pub fn indices_with_bit(&self, bit: usize, value: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.bit(i, bit) == value).collect()
    }

    /// Maps consecutive groups of `bits_per_symbol` bits (least significant
    /// bit first) to symbol indices.
    pub fn map_bits(&self, bits: &[u8]) -> Vec<usize> {
        let b = self.bits_per_symbol;
        assert_eq!(bits.len() % b, 0, "bit count must be a multiple of {b}");
        bits.chunks(b)
            .map(|chunk| {
                let label = chunk
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (j, &v)| acc | (u32::from(v & 1) << j));
                self.labels.iter().position(|&l| l == label).expect("label exists")
            })
            .collect()
    }
}

/// Index of the alphabet point closest to `z`; ties go to the lowest index.
pub fn nearest_symbol(z: Complex64, alphabet: &SymbolAlphabet) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, p) in alphabet.points().iter().enumerate() {
        let d = (z - p).norm_sqr();
        if d < best_dist {
            best = i;
            best_dist = d;
        }
    }
    best
}

fn check_dims(r: &ComplexVector, h_hat: &ComplexMatrix, powers: &[f64]) -> Result<()> {
    if r.len() != h_hat.nrows() {
        return Err(Error::DimensionMismatch {
            context: "received vector",
            expected: h_hat.nrows(),
            found: r.len(),
        });
    }
    if powers.len() != h_hat.ncols() {
        return Err(Error::DimensionMismatch {
            context: "powers",
            expected: h_hat.ncols(),
            found: powers.len(),
        });
    }
    Ok(())
}

/// `sum_i log(gamma^2 + |r_i - sum_k sqrt(p_k) h_hat[i,k] s_k|^2)`.
pub fn cauchy_detection_objective(
    s: &[Complex64],
    r: &ComplexVector,
    h_hat: &ComplexMatrix,
    powers: &[f64],
    gamma: f64,
) -> f64 {
    let gamma_sq = gamma * gamma;
    (0..r.len())
        .map(|i| {
            let mut e = r[i];
            for (k, sk) in s.iter().enumerate() {
                e -= h_hat[(i, k)] * powers[k].sqrt() * sk;
            }
            (gamma_sq + e.norm_sqr()).ln()
        })
        .sum()
}

/// Zero-forcing detection `(G^H G)^{-1} G^H r` with `G[:,k] = sqrt(p_k) h_hat_k`,
/// rounded per user.
pub fn detect_gaussian_zf(
    r: &ComplexVector,
    h_hat: &ComplexMatrix,
    powers: &[f64],
    alphabet: &SymbolAlphabet,
) -> Result<Vec<usize>> {
    let soft = zero_forcing_soft(r, h_hat, powers)?;
    Ok(soft.iter().map(|z| nearest_symbol(*z, alphabet)).collect())
}

/// Unrounded zero-forcing estimate.
pub fn zero_forcing_soft(
    r: &ComplexVector,
    h_hat: &ComplexMatrix,
    powers: &[f64],
) -> Result<ComplexVector> {
    check_dims(r, h_hat, powers)?;
    if h_hat.nrows() < h_hat.ncols() {
        return Err(Error::RankDeficient("fewer antennas than users"));
    }
    let mut g = h_hat.clone();
    for (k, mut col) in g.column_iter_mut().enumerate() {
        col *= Complex64::from(powers[k].sqrt());
    }
    let chol = checked_cholesky(g.adjoint() * &g, "Gram matrix is singular")?;
    Ok(chol.solve(&(g.adjoint() * r)))
}

/// Cholesky factor of a Hermitian Gram matrix, rejecting factors whose
/// diagonal spread exceeds `1e6` (condition number above about `1e12`).
pub(crate) fn checked_cholesky(
    gram: ComplexMatrix,
    what: &'static str,
) -> Result<nalgebra::linalg::Cholesky<Complex64, nalgebra::Dyn>> {
    let n = gram.nrows();
    let chol = gram.cholesky().ok_or(Error::RankDeficient(what))?;
    let diag: Vec<f64> = (0..n).map(|i| chol.l_dirty()[(i, i)].re).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 1e-6 * max) {
        return Err(Error::RankDeficient(what));
    }
    Ok(chol)
}

/// Relaxed Cauchy likelihood over the free users, in per-user coordinates
/// `u_k = sqrt(2) ||g_k|| s_k / gamma` with `g_k = sqrt(p_k) h_hat_k`, which
/// makes the Hessian at zero residual the identity.
pub(crate) struct RelaxedCauchy {
    target: Vec<Complex64>,
    directions: Vec<Vec<Complex64>>,
    scales: Vec<f64>,
    gamma_sq: f64,
}

impl RelaxedCauchy {
    /// Problem over the users in `free`, with `fixed` contributions already
    /// removed from `r`.
    pub(crate) fn new(
        r: &ComplexVector,
        h_hat: &ComplexMatrix,
        powers: &[f64],
        gamma: f64,
        free: &[usize],
        fixed: &[(usize, Complex64)],
    ) -> Self {
        let mut target: Vec<Complex64> = r.iter().copied().collect();
        for &(k, s) in fixed {
            let w = s * powers[k].sqrt();
            for (i, t) in target.iter_mut().enumerate() {
                *t -= h_hat[(i, k)] * w;
            }
        }
        let mut directions = Vec::with_capacity(free.len());
        let mut scales = Vec::with_capacity(free.len());
        for &k in free {
            let col: Vec<Complex64> = h_hat.column(k).iter().map(|h| h * powers[k].sqrt()).collect();
            let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let scale = if norm > 0.0 { norm * std::f64::consts::SQRT_2 / gamma } else { 1.0 };
            directions.push(col.iter().map(|z| z / scale).collect());
            scales.push(scale);
        }
        Self {
            target,
            directions,
            scales,
            gamma_sq: gamma * gamma,
        }
    }

    fn residual(&self, u: &[f64], out: &mut Vec<Complex64>) {
        out.clear();
        out.extend_from_slice(&self.target);
        for (k, dir) in self.directions.iter().enumerate() {
            let uk = Complex64::new(u[2 * k], u[2 * k + 1]);
            for (e, d) in out.iter_mut().zip(dir) {
                *e -= d * uk;
            }
        }
    }

    /// Minimizes from the zero vector and returns relaxed symbols `s_k`.
    pub(crate) fn solve(&self, opts: &BacktrackingOptions) -> Vec<Complex64> {
        let x0 = vec![0.0; 2 * self.directions.len()];
        let best = minimize(self, x0, opts);
        self.scales
            .iter()
            .enumerate()
            .map(|(k, s)| Complex64::new(best.x[2 * k], best.x[2 * k + 1]) / s)
            .collect()
    }
}

impl Objective for RelaxedCauchy {
    fn value(&self, u: &[f64]) -> f64 {
        let mut e = Vec::with_capacity(self.target.len());
        self.residual(u, &mut e);
        e.iter().map(|z| (self.gamma_sq + z.norm_sqr()).ln()).sum()
    }

    fn value_and_gradient(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        let mut e = Vec::with_capacity(self.target.len());
        self.residual(u, &mut e);
        let mut value = 0.0;
        let weights: Vec<f64> = e
            .iter()
            .map(|z| {
                let d = self.gamma_sq + z.norm_sqr();
                value += d.ln();
                2.0 / d
            })
            .collect();
        for (k, dir) in self.directions.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for ((z, d), w) in e.iter().zip(dir).zip(&weights) {
                acc += z.conj() * d * w;
            }
            grad[2 * k] = -acc.re;
            grad[2 * k + 1] = acc.im;
        }
        value
    }
}

/// Relaxed (unconstrained) Cauchy ML solution from the zero vector.
pub fn cauchy_relaxed_soft(
    r: &ComplexVector,
    h_hat: &ComplexMatrix,
    powers: &[f64],
    gamma: f64,
    opts: &BacktrackingOptions,
) -> Result<Vec<Complex64>> {
    check_dims(r, h_hat, powers)?;
    let free: Vec<usize> = (0..h_hat.ncols()).collect();
    Ok(RelaxedCauchy::new(r, h_hat, powers, gamma, &free, &[]).solve(opts))
}

/// Cauchy ML detection: relaxed gradient descent from zero, then rounding.
pub fn detect_cauchy_ml(
    r: &ComplexVector,
    h_hat: &ComplexMatrix,
    powers: &[f64],
    gamma: f64,
    alphabet: &SymbolAlphabet,
    opts: &BacktrackingOptions,
) -> Result<Vec<usize>> {
    let soft = cauchy_relaxed_soft(r, h_hat, powers, gamma, opts)?;
    Ok(soft.iter().map(|z| nearest_symbol(*z, alphabet)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::stable_noise::StableNoiseSpec;
    use crate::system_model::{received_data_uplink, ChannelRealization, Direction, PowerProfile};
    use nalgebra::DMatrix;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn qpsk_layout() {
        let q = SymbolAlphabet::qpsk();
        assert_eq!(q.len(), 4);
        assert_eq!(q.bits_per_symbol(), 2);
        let energy: f64 = q.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 4.0;
        assert!((energy - 1.0).abs() < 1e-15);
        // Gray: nearest neighbours differ in exactly one bit.
        for i in 0..4 {
            for j in 0..4 {
                let d = (q.point(i) - q.point(j)).norm();
                if (d - 2f64.sqrt()).abs() < 1e-12 {
                    assert_eq!((i ^ j).count_ones(), 1);
                }
            }
        }
        assert_eq!(q.indices_with_bit(0, 0), vec![0, 2]);
        assert_eq!(q.map_bits(&[1, 0, 1, 1]), vec![1, 3]);
    }

    #[test]
    fn alphabet_validation() {
        let pts = vec![c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0)];
        assert!(SymbolAlphabet::new(pts, vec![0, 1, 2]).is_err());
        let pts = vec![c(1.0, 0.0), c(-1.0, 0.0)];
        assert!(SymbolAlphabet::new(pts.clone(), vec![0, 0]).is_err());
        assert!(SymbolAlphabet::new(pts.clone(), vec![1, 0]).is_ok());
        let loud = vec![c(2.0, 0.0), c(-2.0, 0.0)];
        assert!(SymbolAlphabet::new(loud, vec![0, 1]).is_err());
    }

    #[test]
    fn nearest_symbol_rules() {
        let q = SymbolAlphabet::qpsk();
        for i in 0..4 {
            assert_eq!(nearest_symbol(q.point(i), &q), i);
        }
        assert_eq!(nearest_symbol(c(0.0, 0.0), &q), 0);
        assert_eq!(nearest_symbol(c(10.0, 10.0), &q), 0);
        assert_eq!(nearest_symbol(c(-3.0, 0.1), &q), 1);
    }

    fn instance(m: usize, k: usize, seed: u64, noisy: bool) -> (ComplexVector, ComplexMatrix, Vec<f64>, Vec<usize>) {
        let mut rng = substream(seed, 0);
        let q = SymbolAlphabet::qpsk();
        let channel = ChannelRealization::draw(m, k, &mut rng);
        let powers: Vec<f64> = (0..k).map(|i| 2.0 + i as f64).collect();
        let tx: Vec<usize> = (0..k).map(|_| rng.random_range(0..4)).collect();
        let symbols: Vec<Complex64> = tx.iter().map(|&i| q.point(i)).collect();
        let profile = PowerProfile::new(powers.clone(), Direction::Uplink).unwrap();
        let noise = StableNoiseSpec::complex_cauchy(1.0).unwrap();
        let r = received_data_uplink(&channel, &profile, &symbols, noisy.then_some(&noise), &mut rng)
            .unwrap();
        (r, channel.h, powers, tx)
    }

    #[test]
    fn noise_free_detection_is_exact() {
        let q = SymbolAlphabet::qpsk();
        let opts = BacktrackingOptions::default();
        for seed in 0..20 {
            let (r, h, p, tx) = instance(8, 3, seed, false);
            assert_eq!(detect_gaussian_zf(&r, &h, &p, &q).unwrap(), tx);
            assert_eq!(detect_cauchy_ml(&r, &h, &p, 1.0, &q, &opts).unwrap(), tx);
        }
    }

    #[test]
    fn zf_single_user_is_matched_filter() {
        let q = SymbolAlphabet::qpsk();
        for seed in 0..10 {
            let (r, h, p, _) = instance(5, 1, 100 + seed, true);
            let hk = h.column(0);
            let mf = hk.dotc(&r) / (hk.norm_squared() * p[0].sqrt());
            let soft = zero_forcing_soft(&r, &h, &p).unwrap();
            assert!((soft[0] - mf).norm() < 1e-10 * (1.0 + mf.norm()));
            assert_eq!(detect_gaussian_zf(&r, &h, &p, &q).unwrap()[0], nearest_symbol(mf, &q));
        }
    }

    #[test]
    fn zf_orthogonal_columns_decouple() {
        let q = SymbolAlphabet::qpsk();
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 2.0)]);
        let p = vec![1.0, 1.0];
        let r = ComplexVector::from_vec(vec![q.point(3), q.point(1) * c(0.0, 2.0)]);
        assert_eq!(detect_gaussian_zf(&r, &h, &p, &q).unwrap(), vec![3, 1]);
    }

    #[test]
    fn zf_rank_deficiency() {
        let q = SymbolAlphabet::qpsk();
        let h = DMatrix::from_element(3, 2, c(1.0, 1.0));
        let r = ComplexVector::zeros(3);
        assert!(matches!(
            detect_gaussian_zf(&r, &h, &[1.0, 1.0], &q),
            Err(Error::RankDeficient(_))
        ));
        let h = DMatrix::from_element(1, 2, c(1.0, 0.0));
        assert!(detect_gaussian_zf(&ComplexVector::zeros(1), &h, &[1.0, 1.0], &q).is_err());
    }

    #[test]
    fn scalar_cauchy_detection_rounds_the_ratio() {
        let q = SymbolAlphabet::qpsk();
        let opts = BacktrackingOptions::default();
        for seed in 0..20 {
            let (r, h, p, _) = instance(1, 1, 200 + seed, true);
            let ratio = r[0] / (h[(0, 0)] * p[0].sqrt());
            let got = detect_cauchy_ml(&r, &h, &p, 1.0, &q, &opts).unwrap();
            assert_eq!(got[0], nearest_symbol(ratio, &q));
        }
    }

    #[test]
    fn relaxed_gradient_matches_finite_differences() {
        let (r, h, p, _) = instance(6, 3, 300, true);
        let free = [0, 2];
        let problem = RelaxedCauchy::new(&r, &h, &p, 0.8, &free, &[(1, c(0.3, -0.2))]);
        let u = [0.4, -1.1, 2.0, 0.3];
        let mut grad = [0.0; 4];
        problem.value_and_gradient(&u, &mut grad);
        for j in 0..4 {
            let (mut up, mut dn) = (u, u);
            up[j] += 1e-6;
            dn[j] -= 1e-6;
            let fd = (problem.value(&up) - problem.value(&dn)) / 2e-6;
            assert!((fd - grad[j]).abs() < 1e-6 * (1.0 + fd.abs()), "{j}: {fd} vs {}", grad[j]);
        }
    }
}
