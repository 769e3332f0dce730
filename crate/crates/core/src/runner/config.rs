use std::path::{Path, PathBuf};

use rug::Rational;
use serde_json::{json, Value};

use crate::bestapprox::{parse_rational, SignMode};
use crate::error::{Error, Result};
use crate::lattice::GuardPolicy;
use crate::norms::{NormKind, NormSpec, ProductNormSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Synthetic {
    None,
    /// `N = γT + √T·σ₀·Z` with `Z` standard normal.
    Normal,
    /// `N = γT + √T·σ₀·(E − 1)` with `E` standard exponential.
    Exponential,
}

impl Synthetic {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Synthetic::None),
            "normal" => Ok(Synthetic::Normal),
            "exponential" => Ok(Synthetic::Exponential),
            other => Err(Error::Config(format!("unknown synthetic mode `{other}`"))),
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            Synthetic::None => "none",
            Synthetic::Normal => "normal",
            Synthetic::Exponential => "exponential",
        }
    }
}

/// Everything an experiment needs. Parsed from `key = value` lines.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub norm_m: NormKind,
    pub norm_n: NormKind,
    pub scale_m: Rational,
    pub scale_n: Rational,
    pub sign_mode: SignMode,
    pub t_grid: Vec<Rational>,
    pub samples: usize,
    pub seed: u64,
    pub dyadic_bits: u32,
    pub precision: u32,
    pub guard_policy: GuardPolicy,
    pub s_max: usize,
    pub burn_in: usize,
    pub perturbation_c: f64,
    pub m_max: u32,
    pub output_dir: PathBuf,
    /// 0 uses every available core.
    pub worker_count: usize,

    pub orbit_samples: usize,
    pub orbit_length: usize,
    pub bootstrap_resamples: usize,
    pub synthetic: Synthetic,
    pub synthetic_sigma: f64,
    /// Test hook: shifts one `f` value per θ so the correspondence check fails.
    pub corrupt_f: bool,
    pub max_indeterminate_rate: f64,
    pub perturbation_eps: f64,
    pub perturbation_trials: usize,
    /// Size of the disjoint ensemble used to estimate γ outside the 1D case.
    /// 0 means the same as `samples`.
    pub calibration_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            m: 1,
            n: 1,
            norm_m: NormKind::Sup,
            norm_n: NormKind::Sup,
            scale_m: Rational::from(1),
            scale_n: Rational::from(1),
            sign_mode: SignMode::Signed,
            t_grid: vec![Rational::from(10)],
            samples: 100,
            seed: 0,
            dyadic_bits: 64,
            precision: 128,
            guard_policy: GuardPolicy::Exact,
            s_max: 20,
            burn_in: 10,
            perturbation_c: 6.0 * std::f64::consts::E,
            m_max: 64,
            output_dir: PathBuf::from("results"),
            worker_count: 0,
            orbit_samples: 0,
            orbit_length: 60,
            bootstrap_resamples: 1000,
            synthetic: Synthetic::None,
            synthetic_sigma: 1.0,
            corrupt_f: false,
            max_indeterminate_rate: 0.05,
            perturbation_eps: 1e-3,
            perturbation_trials: 100,
            calibration_samples: 0,
        }
    }
}

fn cfg_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| cfg_err(line, format!("bad value `{v}` for `{key}`")))
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment;
    /// unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(i + 1, format!("expected `key = value`, got `{line}`")))?;
            c.set(i + 1, k.trim(), v.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    /// Sets one key; `line` is only used in error messages.
    pub fn set(&mut self, line: usize, key: &str, v: &str) -> Result<()> {
        let rat = |v: &str| parse_rational(v).map_err(|e| cfg_err(line, e));
        match key {
            "m" => self.m = parse_num(line, key, v)?,
            "n" => self.n = parse_num(line, key, v)?,
            "norm_m" => self.norm_m = NormKind::parse(v).map_err(|e| cfg_err(line, e))?,
            "norm_n" => self.norm_n = NormKind::parse(v).map_err(|e| cfg_err(line, e))?,
            "scale_m" => self.scale_m = rat(v)?,
            "scale_n" => self.scale_n = rat(v)?,
            "sign_mode" => self.sign_mode = SignMode::parse(v).map_err(|e| cfg_err(line, e))?,
            "t_grid" => {
                self.t_grid = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(rat)
                    .collect::<Result<_>>()?
            }
            "samples" => self.samples = parse_num(line, key, v)?,
            "seed" => self.seed = parse_num(line, key, v)?,
            "dyadic_bits" => self.dyadic_bits = parse_num(line, key, v)?,
            "precision" => self.precision = parse_num(line, key, v)?,
            "guard_policy" => self.guard_policy = GuardPolicy::parse(v).map_err(|e| cfg_err(line, e))?,
            "s_max" => self.s_max = parse_num(line, key, v)?,
            "burn_in" => self.burn_in = parse_num(line, key, v)?,
            "perturbation_c" => self.perturbation_c = parse_num(line, key, v)?,
            "m_max" => self.m_max = parse_num(line, key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "worker_count" => self.worker_count = parse_num(line, key, v)?,
            "orbit_samples" => self.orbit_samples = parse_num(line, key, v)?,
            "orbit_length" => self.orbit_length = parse_num(line, key, v)?,
            "bootstrap_resamples" => self.bootstrap_resamples = parse_num(line, key, v)?,
            "synthetic" => self.synthetic = Synthetic::parse(v).map_err(|e| cfg_err(line, e))?,
            "synthetic_sigma" => self.synthetic_sigma = parse_num(line, key, v)?,
            "corrupt_f" => self.corrupt_f = parse_num(line, key, v)?,
            "max_indeterminate_rate" => self.max_indeterminate_rate = parse_num(line, key, v)?,
            "perturbation_eps" => self.perturbation_eps = parse_num(line, key, v)?,
            "perturbation_trials" => self.perturbation_trials = parse_num(line, key, v)?,
            "calibration_samples" => self.calibration_samples = parse_num(line, key, v)?,
            other => return Err(cfg_err(line, format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.m == 0 || self.n == 0 {
            return bad("m and n must be positive");
        }
        if self.scale_m <= 0 || self.scale_n <= 0 {
            return bad("norm scales must be positive");
        }
        if self.t_grid.is_empty() {
            return bad("t_grid must not be empty");
        }
        if self.t_grid.iter().any(|t| *t < 0) {
            return bad("t_grid values must be nonnegative");
        }
        if self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("t_grid must be strictly ascending");
        }
        if self.samples == 0 {
            return bad("samples must be positive");
        }
        if self.dyadic_bits < 16 {
            return bad("dyadic_bits must be at least 16");
        }
        if !(16..=65536).contains(&self.precision) {
            return bad("precision must lie in [16, 65536]");
        }
        // Past e^T ≈ 2^B the sampled rationals have exhausted their best
        // approximations and stop behaving like random reals.
        let t_max = self.t_max();
        if t_max + 1.0 >= self.dyadic_bits as f64 * std::f64::consts::LN_2 {
            return bad(&format!(
                "T_max = {t_max} is too large for dyadic_bits = {}: need T_max + 1 < B ln 2",
                self.dyadic_bits
            ));
        }
        if !(self.perturbation_c > 0.0) || !(self.perturbation_eps > 0.0) {
            return bad("perturbation constants must be positive");
        }
        if !(0.0..=1.0).contains(&self.max_indeterminate_rate) {
            return bad("max_indeterminate_rate must lie in [0, 1]");
        }
        if !(self.synthetic_sigma > 0.0) {
            return bad("synthetic_sigma must be positive");
        }
        Ok(())
    }

    /// Orbit series need `e^{n·len/m}`-sized denominators before the sampled
    /// rationals degenerate.
    pub fn validate_orbits(&self) -> Result<()> {
        let reach = (self.orbit_length as f64 + 1.0) * (self.n as f64 / self.m as f64).max(1.0);
        if self.orbit_samples > 0 && reach >= self.dyadic_bits as f64 * std::f64::consts::LN_2 {
            return Err(Error::Config(format!(
                "orbit_length = {} is too long for dyadic_bits = {}",
                self.orbit_length, self.dyadic_bits
            )));
        }
        if self.orbit_samples > 0 && self.orbit_length < self.burn_in + self.s_max + 30 {
            return Err(Error::Config("orbit_length must be at least burn_in + s_max + 30".into()));
        }
        Ok(())
    }

    pub fn t_max(&self) -> f64 {
        self.t_grid.last().map(|t| t.to_f64()).unwrap_or(0.0)
    }

    pub fn norms(&self) -> Result<ProductNormSpec> {
        Ok(ProductNormSpec::new(
            NormSpec::new(self.norm_m, self.m, self.scale_m.clone())?,
            NormSpec::new(self.norm_n, self.n, self.scale_n.clone())?,
        ))
    }

    pub fn calibration_count(&self) -> usize {
        if self.calibration_samples == 0 {
            self.samples
        } else {
            self.calibration_samples
        }
    }

    /// Config as `key = value` text that [`parse`](Self::parse) reads back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Value::Object(map) = self.echo() {
            for (k, v) in map {
                let v = match v {
                    Value::String(x) => x,
                    other => other.to_string(),
                };
                s.push_str(&format!("{k} = {v}\n"));
            }
        }
        s
    }

    pub fn echo(&self) -> Value {
        let grid: Vec<String> = self.t_grid.iter().map(|t| t.to_string()).collect();
        json!({
            "m": self.m,
            "n": self.n,
            "norm_m": self.norm_m.as_str(),
            "norm_n": self.norm_n.as_str(),
            "scale_m": self.scale_m.to_string(),
            "scale_n": self.scale_n.to_string(),
            "sign_mode": self.sign_mode.as_str(),
            "t_grid": grid.join(","),
            "samples": self.samples,
            "seed": self.seed,
            "dyadic_bits": self.dyadic_bits,
            "precision": self.precision,
            "guard_policy": self.guard_policy.as_str(),
            "s_max": self.s_max,
            "burn_in": self.burn_in,
            "perturbation_c": self.perturbation_c,
            "m_max": self.m_max,
            "output_dir": self.output_dir.display().to_string(),
            "worker_count": self.worker_count,
            "orbit_samples": self.orbit_samples,
            "orbit_length": self.orbit_length,
            "bootstrap_resamples": self.bootstrap_resamples,
            "synthetic": self.synthetic.as_str(),
            "synthetic_sigma": self.synthetic_sigma,
            "corrupt_f": self.corrupt_f,
            "max_indeterminate_rate": self.max_indeterminate_rate,
            "perturbation_eps": self.perturbation_eps,
            "perturbation_trials": self.perturbation_trials,
            "calibration_samples": self.calibration_samples,
        })
    }
}
