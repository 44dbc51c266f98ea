//! Maximum-ratio and zero-forcing downlink precoders with unit-norm columns.

use num_complex::Complex64;

use crate::detect::checked_cholesky;
use crate::error::{Error, Result};
use crate::ComplexMatrix;

/// Both precoders for one channel estimate, with the gains each user assumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoders {
    /// `A_mr = H_hat^* D_mr`.
    pub mr: ComplexMatrix,
    /// `A_zf = H_hat^* (H_hat^T H_hat^*)^{-1} D_zf`.
    pub zf: ComplexMatrix,
    /// `||h_hat_k||`.
    pub mr_gains: Vec<f64>,
    /// `D_zf[k, k]`.
    pub zf_gains: Vec<f64>,
}

fn normalize_columns(mut a: ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>)> {
    let mut scales = Vec::with_capacity(a.ncols());
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::RankDeficient("precoder column has zero norm"));
        }
        col /= Complex64::from(norm);
        scales.push(1.0 / norm);
    }
    Ok((a, scales))
}

/// Builds the MR and ZF precoders from `h_hat` (`M x K`).
pub fn make_precoders(h_hat: &ComplexMatrix) -> Result<Precoders> {
    if h_hat.nrows() < h_hat.ncols() {
        return Err(Error::RankDeficient("fewer antennas than users"));
    }
    let conj = h_hat.conjugate();
    let mr_gains: Vec<f64> = h_hat.column_iter().map(|c| c.norm()).collect();
    let (mr, _) = normalize_columns(conj.clone())?;

    let gram = h_hat.transpose() * &conj;
    let chol = checked_cholesky(gram, "H^T H^* is singular")?;
    let inverse = chol.inverse();
    let (zf, zf_gains) = normalize_columns(conj * inverse)?;
    Ok(Precoders {
        mr,
        zf,
        mr_gains,
        zf_gains,
    })
}
