use serde::Serialize;

use crate::error::{invalid, Result};

/// `24 log 2 / π²`, the slope of the signed count in one dimension with sup norms.
pub const LEVY_KHINTCHINE_1D: f64 = 24.0 * std::f64::consts::LN_2 / (std::f64::consts::PI * std::f64::consts::PI);

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GammaEstimate {
    pub gamma: f64,
    pub stderr: f64,
    /// All `T` were equal, so the mean of `N/T` was used.
    pub degenerate_design: bool,
}

/// Least-squares slope of `N` on `T` through the origin, with a
/// heteroskedasticity-consistent (HC0) standard error.
pub fn estimate_gamma(samples: &[(f64, f64)]) -> Result<GammaEstimate> {
    if samples.len() < 2 {
        return Err(invalid("need at least two samples"));
    }
    if samples.iter().any(|&(t, n)| !(t > 0.0) || !n.is_finite() || !t.is_finite()) {
        return Err(invalid("T must be positive and N finite"));
    }
    let t0 = samples[0].0;
    if samples.iter().all(|&(t, _)| t == t0) {
        let ratios: Vec<f64> = samples.iter().map(|&(t, n)| n / t).collect();
        let g = super::mean(&ratios);
        let sd = super::sample_sd(&ratios);
        return Ok(GammaEstimate { gamma: g, stderr: sd / (ratios.len() as f64).sqrt(), degenerate_design: true });
    }
    let stt: f64 = samples.iter().map(|&(t, _)| t * t).sum();
    let stn: f64 = samples.iter().map(|&(t, n)| t * n).sum();
    let g = stn / stt;
    let meat: f64 = samples.iter().map(|&(t, n)| (t * (n - g * t)).powi(2)).sum();
    Ok(GammaEstimate { gamma: g, stderr: meat.sqrt() / stt, degenerate_design: false })
}
