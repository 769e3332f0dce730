use rug::Float;
use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormalModel {
    pub sigma: f64,
}

impl NormalModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma must be positive"));
        }
        Ok(NormalModel { sigma })
    }

    pub fn standard() -> Self {
        NormalModel { sigma: 1.0 }
    }
}

/// `P(X <= x)` for `X ~ N(0, σ²)`, via MPFR `erfc` at 128 bits.
pub fn normal_cdf(x: f64, model: &NormalModel) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let mut z = Float::with_val(128, -x);
    z /= model.sigma;
    z /= Float::with_val(128, 2).sqrt();
    z.erfc_mut();
    z /= 2;
    z.to_f64()
}
