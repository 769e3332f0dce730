use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use simapprox_core::bestapprox::{
    cf_expand, enumerate_best_approximations, parse_rational, Horizon, SignMode, TargetMatrix,
};
use simapprox_core::norms::{NormKind, ProductNormSpec};
use simapprox_core::runner::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "simapprox", version, about = "Best approximations and lattice counting experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Counts N(θ, T) over the T grid (lk.csv, lk_summary.csv).
    Lk(Common),
    /// Normalized deviations, CLT diagnostics and autocovariances.
    Clt(Common),
    /// Shell counts against f along the orbit (shells.csv).
    Correspondence(Common),
    /// Runs the verification suites; exits nonzero on a hard failure.
    Verify(Common),
    /// Prints the best approximations of one θ.
    BestApprox(BestApproxArgs),
    /// Prints the continued fraction of one θ in [0, 1).
    Cf(CfArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, num_args = 2, value_names = ["M", "N"])]
    dims: Option<Vec<usize>>,
    /// Norm on both factors: sup or euclid.
    #[arg(long)]
    norm: Option<String>,
    /// signed or unsigned.
    #[arg(long)]
    sign: Option<String>,
    /// Any config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct BestApproxArgs {
    /// Rows separated by `;`, entries by `,`, e.g. `1/3,2/7;0.25,5/9`.
    #[arg(long)]
    theta: String,
    /// Horizon T: lists records with |q| <= e^T.
    #[arg(long, conflicts_with = "bound")]
    horizon: Option<String>,
    /// Lists records with |q| <= BOUND.
    #[arg(long)]
    bound: Option<String>,
    #[arg(long, default_value = "sup")]
    norm: String,
    #[arg(long, default_value = "signed")]
    sign: String,
}

#[derive(Args)]
struct CfArgs {
    #[arg(long)]
    theta: String,
    /// Maximum number of partial quotients after a_0.
    #[arg(long, default_value_t = 64)]
    terms: usize,
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    let mut set = |k: &str, v: String| cfg.set(0, k, &v);
    if let Some(s) = c.seed {
        set("seed", s.to_string())?;
    }
    if let Some(o) = &c.out {
        set("output_dir", o.display().to_string())?;
    }
    if let Some(w) = c.workers {
        set("worker_count", w.to_string())?;
    }
    if let Some(d) = &c.dims {
        set("m", d[0].to_string())?;
        set("n", d[1].to_string())?;
    }
    if let Some(n) = &c.norm {
        set("norm_m", n.clone())?;
        set("norm_n", n.clone())?;
    }
    if let Some(s) = &c.sign {
        set("sign_mode", s.clone())?;
    }
    for kv in &c.set {
        let Some((k, v)) = kv.split_once('=') else { bail!("--set expects KEY=VALUE, got `{kv}`") };
        set(k.trim(), v.trim().to_string())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn opt(x: Option<f64>) -> String {
    x.map_or("NA".into(), |v| format!("{v:.6}"))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Lk(c) => {
            let cfg = load_config(&c)?;
            let out = runner::run_lk(&cfg)?;
            println!("rows: {}  failures: {}", out.rows.len(), out.failures.len());
            if let Some(g) = out.gamma {
                println!("gamma_hat: {:.6} (stderr {:.6})", g.gamma, g.stderr);
            }
            for r in &out.per_t {
                println!("T={} mean_N={:.4} rms_dev={:.4}", r.t, r.mean_n, r.rms_dev);
            }
            if let Some(f) = &out.exponent {
                println!("error exponent: {:.4} (r^2 {:.4})", f.slope, f.r_squared);
            }
            println!("output: {}", cfg.output_dir.display());
        }
        Cmd::Clt(c) => {
            let cfg = load_config(&c)?;
            let out = runner::run_clt(&cfg)?;
            println!("gamma: {:.6} ({})  failures: {}", out.gamma, out.gamma_source, out.failures.len());
            match &out.report {
                Some(r) => {
                    println!("sigma_hat: {:.6}  KS D={:.4} p={:.4}", r.sigma_hat, r.ks.d, r.ks.p_value);
                    println!("cum3: {:.4} [{:.4}, {:.4}]", r.cum3.estimate, r.cum3.ci_lo, r.cum3.ci_hi);
                    println!("cum4: {:.4} [{:.4}, {:.4}]", r.cum4.estimate, r.cum4.ci_lo, r.cum4.ci_hi);
                }
                None => println!("fewer than 500 deviations; summary omitted"),
            }
            println!("long-run variance: {}  ratio: {}", opt(out.long_run_variance), opt(out.var_ratio));
            println!("output: {}", cfg.output_dir.display());
        }
        Cmd::Correspondence(c) => {
            let cfg = load_config(&c)?;
            let out = runner::run_correspondence(&cfg)?;
            println!(
                "samples: {}  shells: {}  conclusive: {}  mismatches: {}  indeterminate: {:.4}  max f: {}",
                out.samples_ok,
                out.shells,
                out.conclusive,
                out.mismatches,
                out.indeterminate_rate,
                out.f_stats.max.map_or("NA".into(), |v| v.to_string())
            );
            for (id, s) in out.mismatch_rows() {
                println!("MISMATCH theta_id={id} M={} count_ba={} f={:?}", s.m, s.count_ba, s.f_value);
            }
            println!("{}", if out.pass { "PASS" } else { "FAIL" });
        }
        Cmd::Verify(c) => {
            let cfg = load_config(&c)?;
            let out = runner::run_verify(&cfg)?;
            for r in &out.rows {
                if r.status != runner::Status::Pass {
                    println!("{} {} {}: {}", r.status.as_str().to_uppercase(), r.suite, r.case, r.detail);
                }
            }
            println!("hard failures: {}", out.hard_failures);
            if !out.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::BestApprox(a) => {
            let theta = TargetMatrix::parse(&a.theta)?;
            let norms = ProductNormSpec::with_kind(theta.m, theta.n, NormKind::parse(&a.norm)?);
            let horizon = match (&a.horizon, &a.bound) {
                (Some(t), None) => Horizon::Time(parse_rational(t)?),
                (None, Some(b)) => Horizon::NormBound(parse_rational(b)?),
                _ => bail!("give exactly one of --horizon or --bound"),
            };
            let seq = enumerate_best_approximations(&theta, &horizon, &norms, SignMode::parse(&a.sign)?)?;
            println!("p\tq\t|q|\t|p+theta q|\tM");
            for r in &seq.records {
                let p: Vec<String> = r.p.iter().map(|x| x.to_string()).collect();
                let q: Vec<String> = r.q.iter().map(|x| x.to_string()).collect();
                println!("{}\t{}\t{}\t{}\t{}", p.join(","), q.join(","), r.qnorm, r.err, r.shell_index);
            }
            println!("N = {}{}", seq.count(), if seq.exhausted_rational { " (exact hit)" } else { "" });
        }
        Cmd::Cf(a) => {
            let theta = parse_rational(&a.theta)?;
            let cf = cf_expand(&theta, a.terms)?;
            let qs: Vec<String> = cf.quotients.iter().map(|x| x.to_string()).collect();
            println!("[{}]{}", qs.join(", "), if cf.complete { "" } else { " ..." });
            for (j, (p, q)) in cf.convergents.iter().enumerate() {
                println!("{j}\t{p}/{q}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
