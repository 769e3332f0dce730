use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::par::{map_indexed, ExecMode};

#[derive(Clone, Debug, Serialize)]
pub struct CumulantReport {
    pub r: usize,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub resamples: usize,
    /// Computed on `x / σ̂` rather than on `x`.
    pub standardized: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct BootstrapSpec {
    pub resamples: usize,
    pub seed: u64,
    /// Two-sided coverage of the percentile interval.
    pub level: f64,
    pub mode: ExecMode,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        BootstrapSpec { resamples: 1000, seed: 0, level: 0.95, mode: ExecMode::default() }
    }
}

/// Block sizes of every set partition of `{1..r}`, via restricted growth strings.
fn partitions(r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut a = vec![0usize; r];
    loop {
        let k = a.iter().max().map_or(0, |&x| x + 1);
        let mut sizes = vec![0usize; k];
        for &b in &a {
            sizes[b] += 1;
        }
        out.push(sizes);
        // Next restricted growth string.
        let mut i = r;
        loop {
            if i <= 1 {
                return out;
            }
            i -= 1;
            let prefix_max = a[..i].iter().max().copied().unwrap_or(0);
            if a[i] <= prefix_max {
                a[i] += 1;
                for x in a.iter_mut().skip(i + 1) {
                    *x = 0;
                }
                break;
            }
        }
    }
}

/// `κ_r = Σ_P (−1)^{|P|−1} (|P|−1)! Π_{B∈P} μ_{|B|}` from raw moments
/// `mu[k] = E[X^k]` (`mu[0] = 1`).
pub fn cumulant_from_moments(mu: &[f64], r: usize) -> f64 {
    let mut total = 0.0;
    for sizes in partitions(r) {
        let k = sizes.len();
        let fact: f64 = (1..k).map(|x| x as f64).product();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * fact * sizes.iter().map(|&s| mu[s]).product::<f64>();
    }
    total
}

/// Cumulant of the empirical distribution. The data are centered first,
/// which leaves `κ_r` unchanged for `r >= 2` and keeps the sum well conditioned.
pub fn sample_cumulant(xs: &[f64], r: usize) -> f64 {
    let m = super::mean(xs);
    let n = xs.len() as f64;
    let mut mu = vec![0.0; r + 1];
    mu[0] = 1.0;
    for &x in xs {
        let c = x - m;
        let mut p = 1.0;
        for slot in mu.iter_mut().skip(1) {
            p *= c;
            *slot += p / n;
        }
    }
    mu[1] = 0.0;
    cumulant_from_moments(&mu, r)
}

fn standardized_cumulant(xs: &[f64], r: usize) -> f64 {
    let k2 = sample_cumulant(xs, 2);
    if k2 <= 0.0 {
        return 0.0;
    }
    sample_cumulant(xs, r) / k2.powf(r as f64 / 2.0)
}

fn check(xs: &[f64], r: usize) -> Result<()> {
    if !(2..=6).contains(&r) {
        return Err(invalid("cumulant order must be between 2 and 6"));
    }
    if xs.len() < 50 {
        return Err(invalid("cumulant estimation needs at least 50 samples"));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(invalid("non-finite sample"));
    }
    Ok(())
}

/// `κ_r` with a seeded percentile-bootstrap interval (1000 resamples).
pub fn joint_cumulant(xs: &[f64], r: usize) -> Result<CumulantReport> {
    bootstrap_cumulant(xs, r, false, &BootstrapSpec::default())
}

pub fn bootstrap_cumulant(xs: &[f64], r: usize, standardized: bool, spec: &BootstrapSpec) -> Result<CumulantReport> {
    check(xs, r)?;
    let stat = |s: &[f64]| if standardized { standardized_cumulant(s, r) } else { sample_cumulant(s, r) };
    let estimate = stat(xs);
    let n = xs.len();
    let mut reps: Vec<f64> = map_indexed(spec.mode, spec.resamples, |b| {
        let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
        rng.set_stream(b as u64);
        let s: Vec<f64> = (0..n).map(|_| xs[rng.random_range(0..n)]).collect();
        stat(&s)
    });
    reps.sort_by(|a, b| a.total_cmp(b));
    let (mut lo, mut hi) = if reps.is_empty() {
        (estimate, estimate)
    } else {
        let alpha = (1.0 - spec.level) / 2.0;
        (quantile(&reps, alpha), quantile(&reps, 1.0 - alpha))
    };
    // Percentile intervals can miss a skewed point estimate; widen to include it.
    lo = lo.min(estimate);
    hi = hi.max(estimate);
    Ok(CumulantReport { r, estimate, ci_lo: lo, ci_hi: hi, resamples: spec.resamples, standardized })
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let i = h.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}
