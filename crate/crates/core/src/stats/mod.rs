//! Estimators and tests for the counting experiments.

mod clt;
mod cumulant;
mod fit;
mod gamma;
mod ks;
mod normal;

pub use clt::{clt_suite, CltOptions, CltReport};
pub use cumulant::{bootstrap_cumulant, cumulant_from_moments, joint_cumulant, sample_cumulant, BootstrapSpec, CumulantReport};
pub use fit::{error_exponent_fit, ExponentFit};
pub use gamma::{estimate_gamma, GammaEstimate, LEVY_KHINTCHINE_1D};
pub use ks::{kolmogorov_sf, ks_statistic, ks_test, KsResult};
pub use normal::{normal_cdf, NormalModel};

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (divisor `n − 1`).
pub(crate) fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}
