use rug::Float;

use super::basis::LatticeBasis;
use super::{guard_band, BoxSpec, LatticePoint};
use crate::error::{Error, Result};
use crate::norms::{NormKind, NormSpec};

/// Default node budget for one box enumeration.
pub const DEFAULT_BUDGET: u64 = 20_000_000;

/// Norm of a float vector under `spec`, at the precision of the inputs.
pub(crate) fn float_norm(xs: &[Float], spec: &NormSpec, prec: u32) -> Float {
    let scale = Float::with_val(prec, &spec.scale);
    let base = match spec.kind {
        NormKind::Sup => {
            let mut m = Float::with_val(prec, 0);
            for x in xs {
                let a = Float::with_val(prec, x.abs_ref());
                if a > m {
                    m = a;
                }
            }
            m
        }
        NormKind::Euclidean => {
            let mut s = Float::with_val(prec, 0);
            for x in xs {
                s += Float::with_val(prec, x * x);
            }
            s.sqrt()
        }
    };
    base * scale
}

fn euclid_factor(spec: &NormSpec) -> f64 {
    let l = spec.scale.to_f64();
    match spec.kind {
        NormKind::Sup => spec.dim as f64 / (l * l),
        NormKind::Euclidean => 1.0 / (l * l),
    }
}

fn gcd_all(c: &[i64]) -> u64 {
    c.iter().fold(0u64, |g, &x| gcd(g, x.unsigned_abs()))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Every nonzero lattice point with `‖π₁ v‖ <= r1 + τ` and `‖π₂ v‖ <= r2 + τ`,
/// sorted by presented coefficients.
pub fn points_in_box(l: &LatticeBasis, b: &BoxSpec, primitive_only: bool) -> Result<Vec<LatticePoint>> {
    points_in_box_with_budget(l, b, primitive_only, DEFAULT_BUDGET)
}

pub fn points_in_box_with_budget(
    l: &LatticeBasis,
    b: &BoxSpec,
    primitive_only: bool,
    budget: u64,
) -> Result<Vec<LatticePoint>> {
    if !(b.r1.is_finite() && b.r2.is_finite()) || b.r1 < 0.0 || b.r2 < 0.0 {
        return Err(crate::error::invalid("box radii must be finite and nonnegative"));
    }
    let prec = l.prec;
    let tau = guard_band(prec);
    let tau_f = tau.to_f64();
    let k1 = euclid_factor(&l.norms.norm_m);
    let k2 = euclid_factor(&l.norms.norm_n);
    let r2sq = k1 * (b.r1 + tau_f).powi(2) + k2 * (b.r2 + tau_f).powi(2);
    let radius_sq = r2sq * (1.0 + 1e-9) + 1e-12;

    let coords = fincke_pohst(l, radius_sq, budget)?;

    let r1 = Float::with_val(prec, b.r1) + &tau;
    let r2 = Float::with_val(prec, b.r2) + &tau;
    let m = l.m;
    let mut out = Vec::new();
    for c in coords {
        let primitive = gcd_all(&c) == 1;
        if primitive_only && !primitive {
            continue;
        }
        let emb = l.embed(&c);
        let xn = float_norm(&emb[..m], &l.norms.norm_m, prec);
        let yn = float_norm(&emb[m..], &l.norms.norm_n, prec);
        if xn <= r1 && yn <= r2 {
            out.push(LatticePoint { coeffs: l.presented_coeffs(&c), embedding: emb, primitive });
        }
    }
    out.sort_by(|a, b| a.coeffs.cmp(&b.coeffs));
    Ok(out)
}

/// Working coordinates of all nonzero `c` with `‖Σ c_j b_j‖² <= radius_sq`
/// (up to `f64` rounding, compensated by the caller's slack).
fn fincke_pohst(l: &LatticeBasis, radius_sq: f64, budget: u64) -> Result<Vec<Vec<i64>>> {
    let gs = l.gram_schmidt();
    let d = gs.bstar_sq.len();
    let mut out = Vec::new();
    let mut c = vec![0i64; d];
    let mut nodes = 0u64;
    recurse(gs, d, radius_sq, 0.0, &mut c, &mut out, &mut nodes, budget)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    gs: &super::basis::GramSchmidt,
    level: usize,
    radius_sq: f64,
    partial: f64,
    c: &mut [i64],
    out: &mut Vec<Vec<i64>>,
    nodes: &mut u64,
    budget: u64,
) -> Result<()> {
    if level == 0 {
        if c.iter().any(|&x| x != 0) {
            out.push(c.to_vec());
        }
        return Ok(());
    }
    let i = level - 1;
    let d = c.len();
    let center: f64 = -(i + 1..d).map(|j| gs.mu[j][i] * c[j] as f64).sum::<f64>();
    let room = radius_sq - partial;
    if room < 0.0 {
        return Ok(());
    }
    let half = (room / gs.bstar_sq[i]).sqrt();
    let lo = (center - half).ceil() as i64;
    let hi = (center + half).floor() as i64;
    for x in lo..=hi {
        *nodes += 1;
        if *nodes > budget {
            return Err(Error::BudgetExceeded {
                budget,
                detail: format!("level {i}, Gram-Schmidt norms {:?}", gs.bstar_sq),
            });
        }
        let dx = x as f64 - center;
        let p = partial + dx * dx * gs.bstar_sq[i];
        if p > radius_sq {
            continue;
        }
        c[i] = x;
        recurse(gs, i, radius_sq, p, c, out, nodes, budget)?;
    }
    c[i] = 0;
    Ok(())
}
