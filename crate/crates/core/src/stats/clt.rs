use serde::Serialize;

use super::cumulant::{bootstrap_cumulant, BootstrapSpec, CumulantReport};
use super::ks::{ks_test, KsResult};
use super::normal::NormalModel;
use crate::error::{invalid, Result};

#[derive(Clone, Debug, Default)]
pub struct CltOptions {
    pub bootstrap: BootstrapSpec,
}

#[derive(Clone, Debug, Serialize)]
pub struct CltReport {
    pub n: usize,
    pub mean: f64,
    pub sigma_hat: f64,
    /// KS of `(x − mean)/σ̂` against the standard normal.
    pub ks: KsResult,
    /// Standardized cumulants `κ_r / κ_2^{r/2}`.
    pub cum3: CumulantReport,
    pub cum4: CumulantReport,
    /// Unstandardized `κ_3`, `κ_4`.
    pub cum3_raw: f64,
    pub cum4_raw: f64,
}

/// Normality diagnostics for a sample of normalized deviations.
pub fn clt_suite(deviations: &[f64], opts: &CltOptions) -> Result<CltReport> {
    if deviations.len() < 500 {
        return Err(invalid("CLT suite needs at least 500 deviations"));
    }
    let mean = super::mean(deviations);
    let sigma_hat = super::sample_sd(deviations);
    let model = NormalModel::new(sigma_hat)?;
    let centered: Vec<f64> = deviations.iter().map(|x| (x - mean) / model.sigma).collect();
    let ks = ks_test(&centered, &NormalModel::standard())?;
    let cum3 = bootstrap_cumulant(deviations, 3, true, &opts.bootstrap)?;
    let cum4 = bootstrap_cumulant(deviations, 4, true, &opts.bootstrap)?;
    Ok(CltReport {
        n: deviations.len(),
        mean,
        sigma_hat,
        ks,
        cum3,
        cum4,
        cum3_raw: super::cumulant::sample_cumulant(deviations, 3),
        cum4_raw: super::cumulant::sample_cumulant(deviations, 4),
    })
}
