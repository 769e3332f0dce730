//! Best approximations `(p, q)` of a rational matrix `θ`.
//!
//! `(p, q)` with `q ≠ 0` is a best approximation when no other integer pair
//! `(p', q') ∉ {±(p, q)}`, `q' ≠ 0`, has both `‖p' + θq'‖ <= ‖p + θq‖` and
//! `‖q'‖ <= ‖q‖`. Ties disqualify every tied candidate.

mod cf;
mod enumerate;
mod target;

use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::norms::NormValue;

pub use cf::{cf_expand, cf_fast_count, CFExpansion};
pub use enumerate::{enumerate_best_approximations, nearest_residual};
pub use target::{parse_rational, Horizon, Provenance, TargetMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignMode {
    /// `(p, q)` and `(−p, −q)` are counted separately.
    Signed,
    Unsigned,
}

impl SignMode {
    pub fn parse(s: &str) -> crate::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "signed" => Ok(SignMode::Signed),
            "unsigned" => Ok(SignMode::Unsigned),
            other => Err(crate::error::invalid(format!("unknown sign mode `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SignMode::Signed => "signed",
            SignMode::Unsigned => "unsigned",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BestApproxRecord {
    pub p: Vec<Integer>,
    pub q: Vec<i64>,
    pub qnorm: NormValue,
    pub err: NormValue,
    /// `M` with `e^M <= ‖q‖ < e^{M+1}`.
    pub shell_index: i64,
}

impl BestApproxRecord {
    pub fn negated(&self) -> Self {
        BestApproxRecord {
            p: self.p.iter().map(|x| Integer::from(-x)).collect(),
            q: self.q.iter().map(|x| -x).collect(),
            qnorm: self.qnorm.clone(),
            err: self.err.clone(),
            shell_index: self.shell_index,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BestApproxSequence {
    pub theta: TargetMatrix,
    /// Increasing in `qnorm`; in signed mode each record is followed by its negative.
    pub records: Vec<BestApproxRecord>,
    pub sign_mode: SignMode,
    pub horizon: Horizon,
    /// A zero-error record ended the sequence.
    pub exhausted_rational: bool,
}

impl BestApproxSequence {
    /// `N(θ, T)` in this sequence's sign mode.
    pub fn count(&self) -> u64 {
        self.records.len() as u64
    }

    /// Records with `shell_index == m`.
    pub fn shell_count(&self, m: i64) -> u64 {
        self.records.iter().filter(|r| r.shell_index == m).count() as u64
    }
}
