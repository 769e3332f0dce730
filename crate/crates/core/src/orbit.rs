//! Birkhoff series of `f` along `a_i u(θ) Γ`, the shell-by-shell
//! correspondence with best approximations, and autocovariance estimates.

use rug::Rational;
use serde::Serialize;

use crate::bestapprox::{enumerate_best_approximations, Horizon, SignMode, TargetMatrix};
use crate::error::{invalid, Result};
use crate::lattice::{f_eval_with, FValue, GuardPolicy, LatticeBasis};
use crate::norms::ProductNormSpec;

#[derive(Clone, Debug)]
pub struct OrbitSeries {
    pub theta_id: u64,
    /// `f(a_i u(θ) Γ)` for `i = 0, 1, …`
    pub values: Vec<FValue>,
    pub margins: Vec<f64>,
    pub precision_used: u32,
    pub indeterminate_count: usize,
    /// Set when an evaluation failed and the series stops early.
    pub truncated: Option<String>,
}

impl OrbitSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ_{i<k} f_i`, or `None` if an indeterminate value is involved.
    pub fn partial_sum(&self, k: usize) -> Option<u64> {
        self.values.iter().take(k).map(|v| v.conclusive().map(u64::from)).sum()
    }
}

#[derive(Clone, Debug)]
pub struct OrbitOptions {
    pub prec: u32,
    pub policy: GuardPolicy,
    /// Retry indeterminate values once at twice the precision.
    pub retry: bool,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions { prec: crate::lattice::DEFAULT_PRECISION, policy: GuardPolicy::Exact, retry: true }
    }
}

/// `f` along the orbit at integer times `0..len`.
pub fn birkhoff_series(theta: &TargetMatrix, len: usize, norms: &ProductNormSpec, prec: u32) -> Result<OrbitSeries> {
    birkhoff_series_with(theta, 0, len, norms, &OrbitOptions { prec, ..Default::default() })
}

pub fn birkhoff_series_with(
    theta: &TargetMatrix,
    theta_id: u64,
    len: usize,
    norms: &ProductNormSpec,
    opts: &OrbitOptions,
) -> Result<OrbitSeries> {
    if len == 0 {
        return Err(invalid("series length must be at least 1"));
    }
    let mut s = OrbitSeries {
        theta_id,
        values: Vec::with_capacity(len),
        margins: Vec::with_capacity(len),
        precision_used: opts.prec,
        indeterminate_count: 0,
        truncated: None,
    };
    let mut l = LatticeBasis::make_unipotent(theta, norms, opts.prec)?;
    let one = Rational::from(1);
    for i in 0..len {
        if i > 0 {
            l = match l.apply_flow(&one) {
                Ok(x) => x,
                Err(e) => {
                    s.truncated = Some(format!("flow to t = {i}: {e}"));
                    break;
                }
            };
        }
        let mut r = match f_eval_with(&l, opts.policy) {
            Ok(r) => r,
            Err(e) => {
                s.truncated = Some(format!("f at t = {i}: {e}"));
                break;
            }
        };
        if r.value == FValue::Indeterminate && opts.retry {
            let hi = l.with_precision(2 * opts.prec).and_then(|h| f_eval_with(&h, opts.policy));
            if let Ok(r2) = hi {
                if r2.value != FValue::Indeterminate {
                    s.precision_used = s.precision_used.max(2 * opts.prec);
                    r = r2;
                }
            }
        }
        if r.value == FValue::Indeterminate {
            s.indeterminate_count += 1;
        }
        s.values.push(r.value);
        s.margins.push(r.margin);
    }
    Ok(s)
}

/// Signed number of best approximations with `e^M <= ‖q‖ < e^{M+1}`.
pub fn shell_counts_via_bestapprox(theta: &TargetMatrix, m: i64, norms: &ProductNormSpec) -> Result<u64> {
    if m < 0 {
        return Err(invalid("shell index must be nonnegative"));
    }
    let seq = enumerate_best_approximations(theta, &Horizon::Time(Rational::from(m + 1)), norms, SignMode::Signed)?;
    Ok(seq.shell_count(m))
}

#[derive(Clone, Debug, Serialize)]
pub struct ShellReport {
    pub m: i64,
    pub count_ba: u64,
    pub f_value: Option<u32>,
    pub margin: f64,
    /// Both sides conclusive and equal.
    pub matches: bool,
    /// Shell lies past the zero-error record of a rational target.
    pub degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct CorrespondenceReport {
    pub shells: Vec<ShellReport>,
    pub indeterminate_rate: f64,
    pub mismatches: usize,
    pub pass: bool,
}

/// Compares best-approximation shell counts with `f(a_M u(θ) Γ)` for
/// `M = 0..T`.
pub fn verify_correspondence(
    theta: &TargetMatrix,
    t: u32,
    norms: &ProductNormSpec,
    opts: &OrbitOptions,
    max_indeterminate_rate: f64,
) -> Result<CorrespondenceReport> {
    verify_correspondence_for(theta, 0, t, norms, opts, max_indeterminate_rate, |_, v| v)
}

/// As [`verify_correspondence`], with a hook that may alter each `f` value
/// before comparison (used to exercise the failure path).
pub fn verify_correspondence_for(
    theta: &TargetMatrix,
    theta_id: u64,
    t: u32,
    norms: &ProductNormSpec,
    opts: &OrbitOptions,
    max_indeterminate_rate: f64,
    tamper: impl Fn(i64, FValue) -> FValue,
) -> Result<CorrespondenceReport> {
    if t < 1 {
        return Err(invalid("T must be at least 1"));
    }
    let seq = enumerate_best_approximations(theta, &Horizon::Time(Rational::from(t)), norms, SignMode::Signed)?;
    let last_shell = seq.records.last().map(|r| r.shell_index).unwrap_or(-1);
    let series = birkhoff_series_with(theta, theta_id, t as usize, norms, opts)?;
    if let Some(msg) = &series.truncated {
        return Err(crate::Error::Precision(msg.clone()));
    }
    let mut shells = Vec::with_capacity(t as usize);
    let mut undecided = 0;
    let mut mismatches = 0;
    for (i, (&v, &margin)) in series.values.iter().zip(&series.margins).enumerate() {
        let m = i as i64;
        let v = tamper(m, v);
        let count_ba = seq.shell_count(m);
        let f_value = v.conclusive();
        let matches = f_value == Some(count_ba as u32);
        match f_value {
            None => undecided += 1,
            Some(_) if !matches => mismatches += 1,
            _ => {}
        }
        shells.push(ShellReport {
            m,
            count_ba,
            f_value,
            margin,
            matches,
            degenerate: seq.exhausted_rational && m > last_shell,
        });
    }
    let rate = undecided as f64 / t as f64;
    Ok(CorrespondenceReport {
        shells,
        indeterminate_rate: rate,
        mismatches,
        pass: mismatches == 0 && rate <= max_indeterminate_rate,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct XiEstimate {
    pub s: usize,
    pub xi_hat: f64,
    pub stderr: f64,
    pub n_pairs: u64,
    pub low_confidence: bool,
}

/// Minimum pairs per lag below which an estimate is flagged.
const MIN_PAIRS: u64 = 100;

/// `Ξ̂(s)` for `s = 0..=s_max`: centered lag-`s` products averaged over time
/// `i >= burn_in` and over the ensemble. The standard error treats the
/// per-series means as independent batches.
pub fn autocovariance(ensemble: &[OrbitSeries], s_max: usize, burn_in: usize) -> Result<Vec<XiEstimate>> {
    let need = burn_in + s_max + 30;
    if let Some(short) = ensemble.iter().find(|s| s.len() < need) {
        return Err(invalid(format!(
            "series for theta {} has length {}, need at least {need}",
            short.theta_id,
            short.len()
        )));
    }
    let mut total = 0.0;
    let mut count = 0u64;
    for s in ensemble {
        for v in s.values.iter().skip(burn_in).filter_map(|v| v.conclusive()) {
            total += v as f64;
            count += 1;
        }
    }
    let mean = if count > 0 { total / count as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(s_max + 1);
    for lag in 0..=s_max {
        let mut sum = 0.0;
        let mut pairs = 0u64;
        let mut batch = Vec::with_capacity(ensemble.len());
        for s in ensemble {
            let mut bs = 0.0;
            let mut bn = 0u64;
            for i in burn_in..s.len().saturating_sub(lag) {
                if let (Some(a), Some(b)) = (s.values[i].conclusive(), s.values[i + lag].conclusive()) {
                    bs += (a as f64 - mean) * (b as f64 - mean);
                    bn += 1;
                }
            }
            if bn > 0 {
                batch.push(bs / bn as f64);
            }
            sum += bs;
            pairs += bn;
        }
        let xi = if pairs > 0 { sum / pairs as f64 } else { 0.0 };
        let k = batch.len();
        let stderr = if k >= 2 {
            let bm = batch.iter().sum::<f64>() / k as f64;
            let var = batch.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        } else {
            0.0
        };
        out.push(XiEstimate { s: lag, xi_hat: xi, stderr, n_pairs: pairs, low_confidence: pairs < MIN_PAIRS || k < 2 });
    }
    Ok(out)
}

/// `Ξ̂(0) + 2 Σ_{s=1}^{s_max} Ξ̂(s)`
pub fn long_run_variance(xi: &[XiEstimate]) -> f64 {
    xi.iter().map(|x| if x.s == 0 { x.xi_hat } else { 2.0 * x.xi_hat }).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(vals: &[u32]) -> OrbitSeries {
        OrbitSeries {
            theta_id: 0,
            values: vals.iter().map(|&v| FValue::Value(v)).collect(),
            margins: vec![1.0; vals.len()],
            precision_used: 128,
            indeterminate_count: 0,
            truncated: None,
        }
    }

    #[test]
    fn zero_target_series() {
        // t = 0: (0, ±1). t >= 1: the only primitive points with ‖y‖ < e have
        // q = ±1, ‖y‖ = e^{-t} < 1, so nothing is counted.
        let s = birkhoff_series(&TargetMatrix::zero(1, 1), 3, &ProductNormSpec::sup(1, 1), 128).unwrap();
        let v: Vec<Option<u32>> = s.values.iter().map(|v| v.conclusive()).collect();
        assert_eq!(v, vec![Some(2), Some(0), Some(0)]);
    }

    #[test]
    fn first_value_matches_standalone() {
        let th = TargetMatrix::parse("7/19, 4/19").unwrap();
        let norms = ProductNormSpec::sup(1, 2);
        let s = birkhoff_series(&th, 1, &norms, 128).unwrap();
        let l = LatticeBasis::make_unipotent(&th, &norms, 128).unwrap();
        assert_eq!(s.values[0], crate::lattice::f_eval(&l).unwrap().value);
    }

    #[test]
    fn half_shells() {
        let th = TargetMatrix::scalar(Rational::from((1, 2)));
        let norms = ProductNormSpec::sup(1, 1);
        assert_eq!(shell_counts_via_bestapprox(&th, 0, &norms).unwrap(), 2);
        assert_eq!(shell_counts_via_bestapprox(&th, 1, &norms).unwrap(), 0);
    }

    #[test]
    fn correspondence_on_rationals() {
        let norms = ProductNormSpec::sup(1, 1);
        for th in ["17/50", "1/2", "355/1131"] {
            let th = TargetMatrix::parse(th).unwrap();
            let r = verify_correspondence(&th, 6, &norms, &OrbitOptions::default(), 0.05).unwrap();
            assert!(r.pass, "{th}: {:?}", r.shells);
        }
    }

    #[test]
    fn single_shell() {
        let th = TargetMatrix::parse("3/7").unwrap();
        let r = verify_correspondence(&th, 1, &ProductNormSpec::sup(1, 1), &OrbitOptions::default(), 0.0).unwrap();
        assert_eq!(r.shells.len(), 1);
        assert_eq!(r.shells[0].m, 0);
    }

    #[test]
    fn tampering_is_caught() {
        let th = TargetMatrix::parse("17/50").unwrap();
        let r = verify_correspondence_for(&th, 0, 4, &ProductNormSpec::sup(1, 1), &OrbitOptions::default(), 0.05, |m, v| {
            if m == 1 {
                FValue::Value(v.conclusive().unwrap() + 2)
            } else {
                v
            }
        })
        .unwrap();
        assert!(!r.pass);
        assert_eq!(r.mismatches, 1);
    }

    #[test]
    fn constant_series_has_zero_autocovariance() {
        let ens: Vec<OrbitSeries> = (0..3).map(|_| series(&[2; 50])).collect();
        for x in autocovariance(&ens, 5, 5).unwrap() {
            assert_eq!(x.xi_hat, 0.0);
        }
    }

    #[test]
    fn alternating_series() {
        let vals: Vec<u32> = (0..60).map(|i| if i % 2 == 0 { 2 } else { 0 }).collect();
        let ens = vec![series(&vals), series(&vals)];
        let xi = autocovariance(&ens, 3, 0).unwrap();
        assert!((xi[0].xi_hat - 1.0).abs() < 1e-12);
        assert!((xi[1].xi_hat + 1.0).abs() < 1e-12);
        assert!((xi[2].xi_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn short_series_rejected() {
        let ens = vec![series(&[1; 20])];
        assert!(autocovariance(&ens, 5, 10).is_err());
    }

    #[test]
    fn indeterminate_values_are_skipped_pairwise() {
        let mut s = series(&[2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0]);
        s.values[4] = FValue::Indeterminate;
        let xi = autocovariance(&[s], 1, 0).unwrap();
        assert_eq!(xi[0].n_pairs, 31);
        assert_eq!(xi[1].n_pairs, 29);
    }
}
