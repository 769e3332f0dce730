use std::collections::BTreeSet;

use rand::Rng;
use rug::{Integer, Rational};
use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiments::{correspondence_on, integer_horizon, FStats};
use super::sampling::{aux_rng, sample_theta};
use super::store::ResultStore;
use crate::bestapprox::{cf_fast_count, enumerate_best_approximations, Horizon, SignMode, TargetMatrix};
use crate::error::{invalid, Result};
use crate::lattice::{perturbation_check, random_perturbation, LatticeBasis};
use crate::norms::{norm_eval, NormValue, ProductNormSpec};
use crate::par::{map_indexed, with_workers, ExecMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    /// Soft: outside a target, but no contradiction.
    Warn,
    Fail,
    Skip,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Warn => "warn",
            Status::Fail => "fail",
            Status::Skip => "skip",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyRow {
    pub suite: String,
    pub case: String,
    pub status: Status,
    pub detail: String,
}

fn row(suite: &str, case: impl Into<String>, status: Status, detail: impl Into<String>) -> VerifyRow {
    VerifyRow { suite: suite.into(), case: case.into(), status, detail: detail.into() }
}

#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    pub rows: Vec<VerifyRow>,
    pub hard_failures: usize,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.hard_failures == 0
    }
}

/// Best approximations with `‖q‖ <= bound` straight from the definition.
///
/// Every `q` in the box is paired with its nearest `p` candidates; `(p, q)`
/// is kept when `p` is the unique minimiser for `q` and every other `q'` with
/// `‖q'‖ <= ‖q‖`, `q' ≠ ±q`, has a strictly larger minimal error. Signed: both
/// `(p, q)` and `(−p, −q)` are returned. Quadratic in the number of `q`.
pub fn definitional_best_approximations(
    theta: &TargetMatrix,
    bound: &Rational,
    norms: &ProductNormSpec,
) -> Result<BTreeSet<(Vec<Integer>, Vec<i64>)>> {
    let (m, n) = (theta.m, theta.n);
    if norms.m != m || norms.n != n {
        return Err(invalid("norm dimensions do not match θ"));
    }
    let r = Rational::from(bound / &norms.norm_n.scale).floor().numer().to_i64().unwrap_or(0);
    if r < 1 {
        return Ok(BTreeSet::new());
    }
    let side = (2 * r + 1) as u64;
    let total = side.checked_pow(n as u32).filter(|&t| t <= 200_000).ok_or_else(|| invalid("oracle box too large"))?;

    struct Cand {
        q: Vec<i64>,
        qn: NormValue,
        err: NormValue,
        /// Minimisers of the error for this `q`.
        ps: Vec<Vec<Integer>>,
    }
    let mut cands = Vec::new();
    for code in 0..total {
        let mut c = code;
        let q: Vec<i64> = (0..n)
            .map(|_| {
                let d = (c % side) as i64 - r;
                c /= side;
                d
            })
            .collect();
        if q.iter().all(|&x| x == 0) {
            continue;
        }
        let qr: Vec<Rational> = q.iter().map(|&x| Rational::from(x)).collect();
        let qn = norm_eval(&qr, &norms.norm_n)?;
        if qn.cmp_rational(bound) == std::cmp::Ordering::Greater {
            continue;
        }
        let tq = theta.apply(&q);
        // Per coordinate, p_i ranges over floor(−θq_i) − 1 ..= floor(−θq_i) + 2.
        let base: Vec<Integer> = tq.iter().map(|x| Rational::from(-x).floor().numer().clone()).collect();
        let mut best: Option<NormValue> = None;
        let mut ps: Vec<Vec<Integer>> = Vec::new();
        for code in 0..4u32.pow(m as u32) {
            let mut c = code;
            let p: Vec<Integer> = base
                .iter()
                .map(|b| {
                    let d = (c % 4) as i64 - 1;
                    c /= 4;
                    Integer::from(b + d)
                })
                .collect();
            let res: Vec<Rational> = p.iter().zip(&tq).map(|(pi, x)| Rational::from(pi + x)).collect();
            let e = norm_eval(&res, &norms.norm_m)?;
            match &best {
                Some(b) if e > *b => {}
                Some(b) if e == *b => ps.push(p),
                _ => {
                    best = Some(e);
                    ps = vec![p];
                }
            }
        }
        cands.push(Cand { q, qn, err: best.expect("nonempty"), ps });
    }

    let mut out = BTreeSet::new();
    for a in &cands {
        if a.ps.len() != 1 {
            continue;
        }
        let neg: Vec<i64> = a.q.iter().map(|x| -x).collect();
        let beaten = cands.iter().any(|b| b.q != a.q && b.q != neg && b.qn <= a.qn && b.err <= a.err);
        if !beaten {
            out.insert((a.ps[0].clone(), a.q.clone()));
        }
    }
    Ok(out)
}

/// Bound on `‖q‖` for the desk-scale oracle, by dimensions.
pub fn oracle_bound(m: usize, n: usize) -> i64 {
    match (m, n) {
        (_, 1) => 60,
        (1, 2) => 15,
        (_, 2) => 8,
        _ => 4,
    }
}

/// Compares enumeration with [`definitional_best_approximations`].
pub fn oracle_check(theta: &TargetMatrix, bound: i64, norms: &ProductNormSpec) -> Result<Option<String>> {
    let b = Rational::from(bound);
    let want = definitional_best_approximations(theta, &b, norms)?;
    let seq = enumerate_best_approximations(theta, &Horizon::NormBound(b), norms, SignMode::Signed)?;
    let got: BTreeSet<(Vec<Integer>, Vec<i64>)> = seq.records.iter().map(|r| (r.p.clone(), r.q.clone())).collect();
    if got.len() != seq.records.len() {
        return Ok(Some("enumeration returned duplicate records".into()));
    }
    if got == want {
        return Ok(None);
    }
    let missing: Vec<_> = want.difference(&got).map(|(p, q)| format!("{p:?}/{q:?}")).collect();
    let extra: Vec<_> = got.difference(&want).map(|(p, q)| format!("{p:?}/{q:?}")).collect();
    Ok(Some(format!("missing [{}] extra [{}]", missing.join(" "), extra.join(" "))))
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PerturbationSummary {
    pub trials: usize,
    pub conclusive: usize,
    pub violations: usize,
    pub errors: usize,
    pub max_lhs: u32,
    /// `(trial, detail)` for each violation or error.
    pub cases: Vec<(usize, String)>,
}

/// Random trials of `|f(gΛ) − f(Λ)| <= Σ φ_{Cε}(Λ) + Σ Φ_{Cε}(Λ)`.
///
/// Trial `k` uses `Λ = a_t u(θ_k) Γ` with `θ_k` the `k`-th sample, `t` drawn
/// from `0..=8`, and `g` a random element at operator distance `ε` from the
/// identity; all draws come from `(seed, k)`.
pub fn perturbation_trials(cfg: &ExperimentConfig, mode: ExecMode) -> Result<PerturbationSummary> {
    let norms = cfg.norms()?;
    let eps = cfg.perturbation_eps;
    let res = with_workers(cfg.worker_count, || {
        map_indexed(mode, cfg.perturbation_trials, |k| {
            let mut rng = aux_rng(cfg.seed, k as u64);
            let t: u32 = rng.random_range(0..=8);
            let g = random_perturbation(&mut rng, cfg.m + cfg.n, eps, cfg.precision);
            let th = sample_theta(cfg.seed, k as u64, cfg.m, cfg.n, cfg.dyadic_bits)?;
            let l = LatticeBasis::make_unipotent(&th, &norms, cfg.precision)?.apply_flow(&Rational::from(t))?;
            perturbation_check(&l, &g, eps, cfg.perturbation_c).map(|r| (t, th, r))
        })
    });
    let mut s = PerturbationSummary { trials: res.len(), ..Default::default() };
    for (k, r) in res.into_iter().enumerate() {
        match r {
            Ok((t, th, rep)) => {
                if let Some(lhs) = rep.lhs {
                    s.conclusive += 1;
                    s.max_lhs = s.max_lhs.max(lhs);
                }
                if rep.holds == Some(false) {
                    s.violations += 1;
                    s.cases.push((k, format!("theta={th} t={t} seed={} lhs={:?} rhs={}", cfg.seed, rep.lhs, rep.rhs)));
                }
            }
            Err(e) => {
                s.errors += 1;
                s.cases.push((k, e.to_string()));
            }
        }
    }
    Ok(s)
}

pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyOutcome> {
    run_verify_with(cfg, ExecMode::default())
}

/// Runs the desk-scale suites and writes `verify.csv`. Hard failures are
/// oracle disagreements, conclusive shell mismatches, and inequality
/// violations; high indeterminate rates only warn.
pub fn run_verify_with(cfg: &ExperimentConfig, mode: ExecMode) -> Result<VerifyOutcome> {
    cfg.validate()?;
    let norms = cfg.norms()?;
    let mut store = ResultStore::create(&cfg.output_dir, "verify", cfg.echo())?;
    let mut rows = Vec::new();
    let k = cfg.samples.min(20);

    // Definitional oracle.
    let bound = oracle_bound(cfg.m, cfg.n);
    let checks = with_workers(cfg.worker_count, || {
        map_indexed(mode, k, |i| {
            let th = sample_theta(cfg.seed, i as u64, cfg.m, cfg.n, cfg.dyadic_bits)?;
            oracle_check(&th, bound, &norms).map(|r| (th, r))
        })
    });
    for (i, c) in checks.into_iter().enumerate() {
        let case = format!("theta_id={i}");
        rows.push(match c {
            Ok((_, None)) => row("oracle", case, Status::Pass, format!("|q|<={bound}")),
            Ok((th, Some(d))) => row("oracle", case, Status::Fail, format!("theta={th} seed={} {d}", cfg.seed)),
            Err(e) => row("oracle", case, Status::Fail, e.to_string()),
        });
    }

    // Continued fractions against enumeration.
    if norms.is_classical_1d() {
        let t_top = cfg.t_max().floor().clamp(1.0, 12.0) as i64;
        let checks = map_indexed(mode, k, |i| -> Result<Option<String>> {
            let th = sample_theta(cfg.seed, i as u64, 1, 1, cfg.dyadic_bits)?;
            for t in 0..=t_top {
                let h = Horizon::Time(Rational::from(t));
                let a = cf_fast_count(&th, &h, &norms, cfg.sign_mode)?;
                let b = enumerate_best_approximations(&th, &h, &norms, cfg.sign_mode)?.count();
                if a != b {
                    return Ok(Some(format!("theta={th} T={t}: cf {a}, enumeration {b}")));
                }
            }
            Ok(None)
        });
        for (i, c) in checks.into_iter().enumerate() {
            let case = format!("theta_id={i}");
            rows.push(match c {
                Ok(None) => row("cf", case, Status::Pass, format!("T=0..{t_top}")),
                Ok(Some(d)) => row("cf", case, Status::Fail, d),
                Err(e) => row("cf", case, Status::Fail, e.to_string()),
            });
        }
    } else {
        rows.push(row("cf", "all", Status::Skip, "not the classical 1D setting"));
    }

    // Shell correspondence and boundedness of f.
    let cap = if cfg.m * cfg.n >= 4 { 5 } else { 8 };
    let t_corr = integer_horizon(cfg).unwrap_or(cap).min(cap);
    let corr = correspondence_on(cfg, 0..cfg.samples.min(10) as u64, t_corr, mode)?;
    for (id, s) in corr.mismatch_rows() {
        let th = sample_theta(cfg.seed, *id, cfg.m, cfg.n, cfg.dyadic_bits)?;
        rows.push(row(
            "correspondence",
            format!("theta_id={id} M={}", s.m),
            Status::Fail,
            format!("theta={th} seed={} count_ba={} f={:?} margin={:e}", cfg.seed, s.count_ba, s.f_value, s.margin),
        ));
    }
    for f in &corr.failures {
        rows.push(row("correspondence", format!("theta_id={}", f.theta_id), Status::Fail, f.message.clone()));
    }
    if corr.mismatches == 0 && corr.failures.is_empty() {
        rows.push(row(
            "correspondence",
            "all",
            Status::Pass,
            format!("T={t_corr} samples={} shells={} conclusive={}", corr.samples_ok, corr.shells, corr.conclusive),
        ));
    }
    rows.push(row(
        "precision",
        "indeterminate_rate",
        if corr.indeterminate_rate <= cfg.max_indeterminate_rate { Status::Pass } else { Status::Warn },
        format!("{} at P={}", corr.indeterminate_rate, cfg.precision),
    ));
    rows.push(bound_row(&corr.f_stats, cfg.m_max));

    // Perturbation inequality.
    let p = perturbation_trials(cfg, mode)?;
    for (k, d) in &p.cases {
        rows.push(row("perturbation", format!("trial={k}"), Status::Fail, d.clone()));
    }
    rows.push(row(
        "perturbation",
        "all",
        if p.violations == 0 && p.errors == 0 { Status::Pass } else { Status::Fail },
        format!(
            "trials={} conclusive={} violations={} eps={} C={}",
            p.trials, p.conclusive, p.violations, cfg.perturbation_eps, cfg.perturbation_c
        ),
    ));

    let hard_failures = rows.iter().filter(|r| r.status == Status::Fail).count();
    store.write_table(
        "verify.csv",
        &["suite", "case", "status", "detail"],
        rows.iter().map(|r| [r.suite.clone(), r.case.clone(), r.status.as_str().to_string(), r.detail.clone()]),
    )?;
    store.note("hard_failures", hard_failures);
    store.finish()?;
    Ok(VerifyOutcome { rows, hard_failures })
}

fn bound_row(s: &FStats, ceiling: u32) -> VerifyRow {
    row(
        "boundedness",
        "f",
        if s.holds() { Status::Pass } else { Status::Fail },
        format!(
            "conclusive={} max={} odd={} over_{ceiling}={}",
            s.conclusive,
            s.max.map_or("NA".into(), |v| v.to_string()),
            s.odd,
            s.over_ceiling
        ),
    )
}
