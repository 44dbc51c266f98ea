//! Operating-point extraction from measured curves.

use crate::error::{Error, Result};

fn sorted(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0));
    p
}

/// SDR where a decreasing error-rate curve first falls to `target`, by
/// linear interpolation of `log10(rate)` between the bracketing grid points.
/// Rates below `floor` (for example zero counts) are raised to `floor`.
pub fn extract_threshold(points: &[(f64, f64)], target: f64, floor: f64) -> Result<f64> {
    let p: Vec<(f64, f64)> = sorted(points)
        .into_iter()
        .map(|(x, y)| (x, y.max(floor)))
        .collect();
    for w in p.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 >= target && y1 <= target && y0 > y1 {
            let (l0, l1, lt) = (y0.log10(), y1.log10(), target.log10());
            return Ok(x0 + (l0 - lt) / (l0 - l1) * (x1 - x0));
        }
    }
    Err(Error::NotBracketed { target })
}

/// SDR where an increasing curve first reaches `target`, by linear
/// interpolation.
pub fn extract_crossing(points: &[(f64, f64)], target: f64) -> Result<f64> {
    let p = sorted(points);
    for w in p.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 <= target && y1 >= target && y1 > y0 {
            return Ok(x0 + (target - y0) / (y1 - y0) * (x1 - x0));
        }
    }
    Err(Error::NotBracketed { target })
}

/// Value of a curve at `x` by linear interpolation of `log10(y)`; `None`
/// outside the grid.
pub fn log_interpolate(points: &[(f64, f64)], x: f64, floor: f64) -> Option<f64> {
    let p = sorted(points);
    p.windows(2).find(|w| w[0].0 <= x && x <= w[1].0).map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        let (l0, l1) = (y0.max(floor).log10(), y1.max(floor).log10());
        let f = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
        10f64.powf(l0 + f * (l1 - l0))
    })
}
