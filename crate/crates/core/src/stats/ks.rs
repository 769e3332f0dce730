use serde::Serialize;

use super::normal::{normal_cdf, NormalModel};
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KsResult {
    pub d: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Kolmogorov–Smirnov distance between the sample and a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // Jacobi theta form converges fast for small λ.
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            s += (-j * j * c).exp();
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * s;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// KS test against `N(0, σ²)` with the asymptotic p-value at `λ = √n D`.
pub fn ks_test(deviations: &[f64], model: &NormalModel) -> Result<KsResult> {
    if deviations.len() < 20 {
        return Err(invalid("KS test needs at least 20 samples"));
    }
    if deviations.iter().any(|x| !x.is_finite()) {
        return Err(invalid("non-finite sample"));
    }
    let d = ks_statistic(deviations, |x| normal_cdf(x, model));
    let n = deviations.len();
    Ok(KsResult { d, p_value: kolmogorov_sf((n as f64).sqrt() * d), n })
}
