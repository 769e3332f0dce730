use std::ops::Range;

use rand_distr::{Distribution, Exp1, StandardNormal};
use rug::Rational;
use serde::Serialize;

use super::config::{ExperimentConfig, Synthetic};
use super::sampling::{aux_rng, sample_theta};
use super::store::{fmt_f64, Failure, ResultStore};
use crate::bestapprox::{cf_fast_count, enumerate_best_approximations, Horizon, SignMode, TargetMatrix};
use crate::error::{Error, Result};
use crate::lattice::FValue;
use crate::norms::ProductNormSpec;
use crate::orbit::{
    autocovariance, birkhoff_series_with, long_run_variance, verify_correspondence_for, OrbitOptions, OrbitSeries,
    ShellReport, XiEstimate,
};
use crate::par::{map_indexed, with_workers, ExecMode};
use crate::stats::{
    clt_suite, error_exponent_fit, estimate_gamma, BootstrapSpec, CltOptions, CltReport, ExponentFit, GammaEstimate,
    LEVY_KHINTCHINE_1D,
};

/// Signed and unsigned `N(θ, T)` for every `T` in `grid`.
///
/// The continued-fraction path is used for the classical 1D setting; otherwise
/// one enumeration at the largest `T` is bucketed by horizon.
pub fn counts_on_grid(theta: &TargetMatrix, grid: &[Rational], norms: &ProductNormSpec) -> Result<Vec<(u64, u64)>> {
    if norms.is_classical_1d() {
        return grid
            .iter()
            .map(|t| {
                let h = Horizon::Time(t.clone());
                Ok((
                    cf_fast_count(theta, &h, norms, SignMode::Signed)?,
                    cf_fast_count(theta, &h, norms, SignMode::Unsigned)?,
                ))
            })
            .collect();
    }
    let t_max = grid.last().ok_or_else(|| Error::Config("empty T grid".into()))?;
    let seq = enumerate_best_approximations(theta, &Horizon::Time(t_max.clone()), norms, SignMode::Signed)?;
    let mut out = Vec::with_capacity(grid.len());
    for t in grid {
        let h = Horizon::Time(t.clone());
        let mut signed = 0u64;
        for r in &seq.records {
            match h.contains(&r.qnorm) {
                Some(true) => signed += 1,
                Some(false) => {}
                None => return Err(Error::Precision(format!("|q| = {} against e^{t} undecided", r.qnorm))),
            }
        }
        // Signed records come in ± pairs.
        out.push((signed, signed / 2));
    }
    Ok(out)
}

fn theta_for(cfg: &ExperimentConfig, index: u64) -> Result<TargetMatrix> {
    sample_theta(cfg.seed, index, cfg.m, cfg.n, cfg.dyadic_bits)
}

fn in_pool<T: Send>(cfg: &ExperimentConfig, mode: ExecMode, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    with_workers(cfg.worker_count, || map_indexed(mode, n, f))
}

/// Counts for sample indices in `range`, with per-sample failures split out.
fn count_ensemble(
    cfg: &ExperimentConfig,
    norms: &ProductNormSpec,
    range: Range<u64>,
    mode: ExecMode,
    task: &str,
) -> (Vec<(u64, Vec<(u64, u64)>)>, Vec<Failure>) {
    let start = range.start;
    let n = (range.end - range.start) as usize;
    let res = in_pool(cfg, mode, n, |i| {
        let id = start + i as u64;
        (id, theta_for(cfg, id).and_then(|th| counts_on_grid(&th, &cfg.t_grid, norms)))
    });
    let mut ok = Vec::with_capacity(n);
    let mut failures = Vec::new();
    for (id, r) in res {
        match r {
            Ok(c) => ok.push((id, c)),
            Err(e) => failures.push(Failure { theta_id: id, task: task.into(), message: e.to_string() }),
        }
    }
    (ok, failures)
}

/// The known slope for the classical 1D signed count, if it applies.
fn known_gamma(cfg: &ExperimentConfig, norms: &ProductNormSpec, sign: SignMode) -> Option<f64> {
    norms.is_classical_1d().then(|| match sign {
        SignMode::Signed => LEVY_KHINTCHINE_1D,
        SignMode::Unsigned => LEVY_KHINTCHINE_1D / 2.0,
    })
    .filter(|_| cfg.m == 1 && cfg.n == 1)
}

#[derive(Clone, Debug, Serialize)]
pub struct LkRow {
    pub theta_id: u64,
    pub t: f64,
    pub n_signed: u64,
    pub n_unsigned: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LkSummaryRow {
    pub t: f64,
    pub samples: usize,
    pub mean_n: f64,
    /// `sqrt(mean (N − γT)²)` with the reference `γ`.
    pub rms_dev: f64,
}

#[derive(Clone, Debug)]
pub struct LkOutcome {
    pub rows: Vec<LkRow>,
    pub failures: Vec<Failure>,
    /// Slope of `N` on `T` in the configured sign mode.
    pub gamma: Option<GammaEstimate>,
    /// The known constant when it applies, otherwise the fitted slope.
    pub gamma_ref: Option<f64>,
    pub per_t: Vec<LkSummaryRow>,
    /// Log-log fit of `rms_dev` against `T`, when the grid allows it.
    pub exponent: Option<ExponentFit>,
}

pub fn run_lk(cfg: &ExperimentConfig) -> Result<LkOutcome> {
    run_lk_with(cfg, ExecMode::default())
}

/// Writes `lk.csv` and `lk_summary.csv`.
pub fn run_lk_with(cfg: &ExperimentConfig, mode: ExecMode) -> Result<LkOutcome> {
    cfg.validate()?;
    let norms = cfg.norms()?;
    let mut store = ResultStore::create(&cfg.output_dir, "lk", cfg.echo())?;
    let (ok, failures) = count_ensemble(cfg, &norms, 0..cfg.samples as u64, mode, "lk");
    let grid: Vec<f64> = cfg.t_grid.iter().map(|t| t.to_f64()).collect();

    let mut rows = Vec::new();
    for (id, counts) in &ok {
        for (t, &(s, u)) in grid.iter().zip(counts) {
            rows.push(LkRow { theta_id: *id, t: *t, n_signed: s, n_unsigned: u });
        }
    }
    let pick = |r: &LkRow| match cfg.sign_mode {
        SignMode::Signed => r.n_signed as f64,
        SignMode::Unsigned => r.n_unsigned as f64,
    };
    let positive: Vec<(f64, f64)> = rows.iter().filter(|r| r.t > 0.0).map(|r| (r.t, pick(r))).collect();
    let gamma = estimate_gamma(&positive).ok();
    let gamma_ref = known_gamma(cfg, &norms, cfg.sign_mode).or(gamma.map(|g| g.gamma));

    let mut per_t = Vec::new();
    for (k, &t) in grid.iter().enumerate() {
        let ns: Vec<f64> = rows.iter().skip(k).step_by(grid.len()).map(pick).collect();
        if ns.is_empty() {
            continue;
        }
        let mean_n = ns.iter().sum::<f64>() / ns.len() as f64;
        let rms_dev = gamma_ref
            .map(|g| (ns.iter().map(|n| (n - g * t).powi(2)).sum::<f64>() / ns.len() as f64).sqrt())
            .unwrap_or(f64::NAN);
        per_t.push(LkSummaryRow { t, samples: ns.len(), mean_n, rms_dev });
    }
    let exponent = error_exponent_fit(&per_t.iter().map(|r| (r.t, r.rms_dev)).collect::<Vec<_>>()).ok();

    let text_t: Vec<String> = cfg.t_grid.iter().map(|t| t.to_string()).collect();
    store.write_table(
        "lk.csv",
        &["theta_id", "T", "N_signed", "N_unsigned"],
        rows.iter().enumerate().map(|(i, r)| {
            [r.theta_id.to_string(), text_t[i % grid.len()].clone(), r.n_signed.to_string(), r.n_unsigned.to_string()]
        }),
    )?;
    store.write_table(
        "lk_summary.csv",
        &["T", "samples", "mean_N", "gamma_hat", "rms_dev"],
        per_t.iter().map(|r| {
            [
                fmt_f64(r.t),
                r.samples.to_string(),
                fmt_f64(r.mean_n),
                fmt_f64(if r.t > 0.0 { r.mean_n / r.t } else { f64::NAN }),
                fmt_f64(r.rms_dev),
            ]
        }),
    )?;
    store.note("gamma", gamma);
    store.note("gamma_ref", gamma_ref);
    store.note("exponent_fit", &exponent);
    for f in &failures {
        store.fail(f.clone());
    }
    store.finish()?;
    Ok(LkOutcome { rows, failures, gamma, gamma_ref, per_t, exponent })
}

/// Tallies for the boundedness check on `f`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FStats {
    pub evaluations: u64,
    pub conclusive: u64,
    pub max: Option<u32>,
    pub odd: u64,
    pub negative: u64,
    pub over_ceiling: u64,
}

impl FStats {
    pub fn add(&mut self, v: FValue, ceiling: u32) {
        self.evaluations += 1;
        if let Some(x) = v.conclusive() {
            self.conclusive += 1;
            self.max = Some(self.max.map_or(x, |m| m.max(x)));
            if x % 2 == 1 {
                self.odd += 1;
            }
            if x > ceiling {
                self.over_ceiling += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &FStats) {
        self.evaluations += other.evaluations;
        self.conclusive += other.conclusive;
        self.max = match (self.max, other.max) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self.odd += other.odd;
        self.negative += other.negative;
        self.over_ceiling += other.over_ceiling;
    }

    /// Values are unsigned, so nonnegativity holds by construction.
    pub fn holds(&self) -> bool {
        self.odd == 0 && self.negative == 0 && self.over_ceiling == 0
    }
}

#[derive(Clone, Debug)]
pub struct CorrespondenceOutcome {
    pub rows: Vec<(u64, ShellReport)>,
    pub failures: Vec<Failure>,
    pub samples_ok: usize,
    pub shells: usize,
    pub conclusive: usize,
    pub mismatches: usize,
    pub indeterminate_rate: f64,
    pub f_stats: FStats,
    /// No conclusive mismatch, no failures, indeterminate rate within bound.
    pub pass: bool,
}

impl CorrespondenceOutcome {
    /// Rows of conclusive shells where `count_ba != f`.
    pub fn mismatch_rows(&self) -> impl Iterator<Item = &(u64, ShellReport)> {
        self.rows.iter().filter(|(_, s)| s.f_value.is_some() && !s.matches)
    }
}

pub(crate) fn integer_horizon(cfg: &ExperimentConfig) -> Result<u32> {
    let t = cfg.t_grid.last().expect("validated grid");
    if !t.denom().eq(&1) || *t < 1 {
        return Err(Error::Config(format!("correspondence needs a positive integer T, got {t}")));
    }
    t.numer().to_u32().ok_or_else(|| Error::Config("T too large".into()))
}

pub(crate) fn orbit_options(cfg: &ExperimentConfig) -> OrbitOptions {
    OrbitOptions { prec: cfg.precision, policy: cfg.guard_policy, retry: true }
}

/// Shell-by-shell comparison on samples `range` at horizon `t`.
pub(crate) fn correspondence_on(
    cfg: &ExperimentConfig,
    range: Range<u64>,
    t: u32,
    mode: ExecMode,
) -> Result<CorrespondenceOutcome> {
    let norms = cfg.norms()?;
    let opts = orbit_options(cfg);
    let corrupt = cfg.corrupt_f;
    let start = range.start;
    let res = in_pool(cfg, mode, (range.end - range.start) as usize, |i| {
        let id = start + i as u64;
        let rep = theta_for(cfg, id).and_then(|th| {
            verify_correspondence_for(&th, id, t, &norms, &opts, 1.0, |m, v| match (corrupt, m, v) {
                (true, 0, FValue::Value(x)) => FValue::Value(x + 1),
                _ => v,
            })
        });
        (id, rep)
    });
    let mut out = CorrespondenceOutcome {
        rows: Vec::new(),
        failures: Vec::new(),
        samples_ok: 0,
        shells: 0,
        conclusive: 0,
        mismatches: 0,
        indeterminate_rate: 0.0,
        f_stats: FStats::default(),
        pass: false,
    };
    for (id, r) in res {
        match r {
            Ok(rep) => {
                out.samples_ok += 1;
                out.mismatches += rep.mismatches;
                for s in rep.shells {
                    out.shells += 1;
                    let v = s.f_value.map_or(FValue::Indeterminate, FValue::Value);
                    out.f_stats.add(v, cfg.m_max);
                    if s.f_value.is_some() {
                        out.conclusive += 1;
                    }
                    out.rows.push((id, s));
                }
            }
            Err(e) => out.failures.push(Failure { theta_id: id, task: "correspondence".into(), message: e.to_string() }),
        }
    }
    out.indeterminate_rate =
        if out.shells > 0 { (out.shells - out.conclusive) as f64 / out.shells as f64 } else { 0.0 };
    out.pass = out.mismatches == 0
        && out.failures.is_empty()
        && out.samples_ok > 0
        && out.indeterminate_rate <= cfg.max_indeterminate_rate;
    Ok(out)
}

pub fn run_correspondence(cfg: &ExperimentConfig) -> Result<CorrespondenceOutcome> {
    run_correspondence_with(cfg, ExecMode::default())
}

/// Writes `shells.csv` and `correspondence_summary.csv` for `T = max(t_grid)`.
pub fn run_correspondence_with(cfg: &ExperimentConfig, mode: ExecMode) -> Result<CorrespondenceOutcome> {
    cfg.validate()?;
    let t = integer_horizon(cfg)?;
    let mut store = ResultStore::create(&cfg.output_dir, "correspondence", cfg.echo())?;
    let out = correspondence_on(cfg, 0..cfg.samples as u64, t, mode)?;
    store.write_table(
        "shells.csv",
        &["theta_id", "M", "count_ba", "f_value", "match", "margin"],
        out.rows.iter().map(|(id, s)| {
            [
                id.to_string(),
                s.m.to_string(),
                s.count_ba.to_string(),
                s.f_value.map_or("NA".to_string(), |v| v.to_string()),
                s.matches.to_string(),
                fmt_f64(s.margin),
            ]
        }),
    )?;
    let match_rate = if out.conclusive > 0 { (out.conclusive - out.mismatches) as f64 / out.conclusive as f64 } else { f64::NAN };
    store.write_table(
        "correspondence_summary.csv",
        &["samples", "shells", "conclusive", "mismatches", "match_rate", "indeterminate_rate", "max_f", "pass"],
        [[
            out.samples_ok.to_string(),
            out.shells.to_string(),
            out.conclusive.to_string(),
            out.mismatches.to_string(),
            fmt_f64(match_rate),
            fmt_f64(out.indeterminate_rate),
            out.f_stats.max.map_or("NA".to_string(), |v| v.to_string()),
            out.pass.to_string(),
        ]],
    )?;
    store.note("f_stats", &out.f_stats);
    for f in &out.failures {
        store.fail(f.clone());
    }
    store.finish()?;
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviationRow {
    pub theta_id: u64,
    pub t: f64,
    pub n_signed: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug)]
pub struct CltOutcome {
    pub gamma: f64,
    /// `known`, `calibrated`, or `synthetic`.
    pub gamma_source: &'static str,
    pub rows: Vec<DeviationRow>,
    /// Suite on the deviations at the largest `T`; absent below 500 samples.
    pub report: Option<CltReport>,
    pub sigma_hat: Option<f64>,
    pub xi: Option<Vec<XiEstimate>>,
    pub long_run_variance: Option<f64>,
    /// `σ̂² / (Ξ̂(0) + 2 Σ Ξ̂(s))`
    pub var_ratio: Option<f64>,
    pub f_stats: FStats,
    pub failures: Vec<Failure>,
}

pub fn run_clt(cfg: &ExperimentConfig) -> Result<CltOutcome> {
    run_clt_with(cfg, ExecMode::default())
}

/// Orbit series for samples `0..orbit_samples`.
pub(crate) fn orbit_ensemble(cfg: &ExperimentConfig, mode: ExecMode) -> Result<(Vec<OrbitSeries>, Vec<Failure>)> {
    let norms = cfg.norms()?;
    let opts = orbit_options(cfg);
    let res = in_pool(cfg, mode, cfg.orbit_samples, |i| {
        let id = i as u64;
        (id, theta_for(cfg, id).and_then(|th| birkhoff_series_with(&th, id, cfg.orbit_length, &norms, &opts)))
    });
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in res {
        match r {
            Ok(s) if s.truncated.is_none() => ok.push(s),
            Ok(s) => failures.push(Failure { theta_id: id, task: "orbit".into(), message: s.truncated.unwrap() }),
            Err(e) => failures.push(Failure { theta_id: id, task: "orbit".into(), message: e.to_string() }),
        }
    }
    Ok((ok, failures))
}

/// Writes `deviations.csv`, `xi.csv`, and, with at least 500 samples,
/// `clt_summary.csv` and `cumulants.csv`.
pub fn run_clt_with(cfg: &ExperimentConfig, mode: ExecMode) -> Result<CltOutcome> {
    cfg.validate()?;
    cfg.validate_orbits()?;
    let norms = cfg.norms()?;
    let mut store = ResultStore::create(&cfg.output_dir, "clt", cfg.echo())?;
    let grid: Vec<f64> = cfg.t_grid.iter().map(|t| t.to_f64()).collect();
    let mut failures = Vec::new();

    // (theta_id, N per T)
    let mut ensemble: Vec<(u64, Vec<f64>)> = Vec::new();
    let (gamma, gamma_source) = if cfg.synthetic != Synthetic::None {
        let g = LEVY_KHINTCHINE_1D;
        for id in 0..cfg.samples as u64 {
            let mut rng = aux_rng(cfg.seed, id);
            let ns = grid
                .iter()
                .map(|&t| {
                    let z: f64 = match cfg.synthetic {
                        Synthetic::Normal => StandardNormal.sample(&mut rng),
                        _ => {
                            let e: f64 = Exp1.sample(&mut rng);
                            e - 1.0
                        }
                    };
                    g * t + t.sqrt() * cfg.synthetic_sigma * z
                })
                .collect();
            ensemble.push((id, ns));
        }
        (g, "synthetic")
    } else {
        let (ok, f) = count_ensemble(cfg, &norms, 0..cfg.samples as u64, mode, "count");
        failures.extend(f);
        ensemble = ok.into_iter().map(|(id, c)| (id, c.into_iter().map(|(s, _)| s as f64).collect())).collect();
        match known_gamma(cfg, &norms, SignMode::Signed) {
            Some(g) => (g, "known"),
            None => {
                // Disjoint calibration samples keep γ̂ independent of the deviations.
                let lo = cfg.samples as u64;
                let (cal, f) = count_ensemble(cfg, &norms, lo..lo + cfg.calibration_count() as u64, mode, "calibration");
                failures.extend(f);
                let pts: Vec<(f64, f64)> = cal
                    .iter()
                    .flat_map(|(_, c)| grid.iter().zip(c).map(|(&t, &(s, _))| (t, s as f64)))
                    .filter(|p| p.0 > 0.0)
                    .collect();
                let est = estimate_gamma(&pts)?;
                store.note("gamma_calibration", est);
                (est.gamma, "calibrated")
            }
        }
    };

    let mut rows = Vec::new();
    for (id, ns) in &ensemble {
        for (&t, &n) in grid.iter().zip(ns) {
            let deviation = if t > 0.0 { (n - gamma * t) / t.sqrt() } else { f64::NAN };
            rows.push(DeviationRow { theta_id: *id, t, n_signed: n, deviation });
        }
    }
    let text_t: Vec<String> = cfg.t_grid.iter().map(|t| t.to_string()).collect();
    store.write_table(
        "deviations.csv",
        &["theta_id", "T", "N_signed", "deviation"],
        rows.iter().enumerate().map(|(i, r)| {
            [r.theta_id.to_string(), text_t[i % grid.len()].clone(), fmt_f64(r.n_signed), fmt_f64(r.deviation)]
        }),
    )?;

    let last: Vec<f64> = rows
        .iter()
        .skip(grid.len() - 1)
        .step_by(grid.len())
        .map(|r| r.deviation)
        .filter(|d| d.is_finite())
        .collect();
    let sigma_hat = (last.len() >= 2).then(|| crate::stats::sample_sd(&last));
    let report = if last.len() >= 500 {
        let opts = CltOptions {
            bootstrap: BootstrapSpec { resamples: cfg.bootstrap_resamples, seed: cfg.seed, mode, ..Default::default() },
        };
        Some(clt_suite(&last, &opts)?)
    } else {
        None
    };

    let mut f_stats = FStats::default();
    let (xi, lrv) = if cfg.orbit_samples > 0 {
        let (series, f) = orbit_ensemble(cfg, mode)?;
        failures.extend(f);
        for s in &series {
            for &v in &s.values {
                f_stats.add(v, cfg.m_max);
            }
        }
        let xi = autocovariance(&series, cfg.s_max, cfg.burn_in)?;
        store.write_table(
            "xi.csv",
            &["s", "xi_hat", "stderr", "n_pairs"],
            xi.iter().map(|x| [x.s.to_string(), fmt_f64(x.xi_hat), fmt_f64(x.stderr), x.n_pairs.to_string()]),
        )?;
        let lrv = long_run_variance(&xi);
        (Some(xi), Some(lrv))
    } else {
        (None, None)
    };
    let var_ratio = match (sigma_hat, lrv) {
        (Some(s), Some(v)) if v > 0.0 => Some(s * s / v),
        _ => None,
    };

    if let Some(r) = &report {
        store.write_table(
            "clt_summary.csv",
            &["sigma_hat", "ks_D", "ks_p", "cum3", "cum4", "var_consistency_ratio"],
            [[
                fmt_f64(r.sigma_hat),
                fmt_f64(r.ks.d),
                fmt_f64(r.ks.p_value),
                fmt_f64(r.cum3.estimate),
                fmt_f64(r.cum4.estimate),
                var_ratio.map_or("NA".to_string(), fmt_f64),
            ]],
        )?;
        store.write_table(
            "cumulants.csv",
            &["r", "estimate", "ci_lo", "ci_hi", "resamples"],
            [&r.cum3, &r.cum4].iter().map(|c| {
                [c.r.to_string(), fmt_f64(c.estimate), fmt_f64(c.ci_lo), fmt_f64(c.ci_hi), c.resamples.to_string()]
            }),
        )?;
        store.note("clt", r);
    }
    store.note("gamma", gamma);
    store.note("gamma_source", gamma_source);
    store.note("sigma_hat", sigma_hat);
    store.note("long_run_variance", lrv);
    store.note("var_consistency_ratio", var_ratio);
    store.note("f_stats", &f_stats);
    for f in &failures {
        store.fail(f.clone());
    }
    store.finish()?;
    Ok(CltOutcome {
        gamma,
        gamma_source,
        rows,
        report,
        sigma_hat,
        xi,
        long_run_variance: lrv,
        var_ratio,
        f_stats,
        failures,
    })
}
