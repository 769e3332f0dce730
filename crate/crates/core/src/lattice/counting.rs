use rand::Rng;
use rand_distr::StandardNormal;
use rug::Float;

use super::basis::LatticeBasis;
use super::feval::{f_eval_with, GuardPolicy};
use super::{float_norm, points_in_box, BoxSpec, Comparator, Tri};
use crate::error::{invalid, Result};

struct Pt {
    coeffs: Vec<rug::Integer>,
    x: Float,
    y: Float,
}

fn primitive_window(l: &LatticeBasis, eps: f64) -> Result<Vec<Pt>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid("eps must be positive"));
    }
    let e = std::f64::consts::E;
    let pts = points_in_box(l, &BoxSpec { r1: 1.0 + eps, r2: e + eps }, true)?;
    let m = l.m;
    Ok(pts
        .into_iter()
        .map(|p| Pt {
            x: float_norm(&p.embedding[..m], &l.norms.norm_m, l.prec),
            y: float_norm(&p.embedding[m..], &l.norms.norm_n, l.prec),
            coeffs: p.coeffs,
        })
        .collect())
}

/// `Σ φ_ε(v)` over primitive `v`: the indicator of
/// `{‖x‖ <= 1+ε, 1−ε <= ‖y‖ <= e+ε}` minus `{‖x‖ < 1−ε, 1+ε < ‖y‖ < e−ε}`.
/// Undecided comparisons count the point in.
pub fn phi_count(l: &LatticeBasis, eps: f64) -> Result<u64> {
    let prec = l.prec;
    let f = |x: f64| Float::with_val(prec, x);
    let e = crate::certified::euler(prec);
    let ef = Float::with_val(prec, eps);
    let one = f(1.0);
    let (x_hi, y_lo) = (Float::with_val(prec, &one + &ef), Float::with_val(prec, &one - &ef));
    let y_hi = Float::with_val(prec, &e + &ef);
    let (ix_hi, iy_lo) = (Float::with_val(prec, &one - &ef), Float::with_val(prec, &one + &ef));
    let iy_hi = Float::with_val(prec, &e - &ef);
    let mut cmp = Comparator::new(prec);
    let mut count = 0;
    for p in primitive_window(l, eps)? {
        let outer = cmp.le(&p.x, &x_hi).and(cmp.le(&y_lo, &p.y)).and(cmp.le(&p.y, &y_hi));
        let inner = cmp.lt(&p.x, &ix_hi).and(cmp.lt(&iy_lo, &p.y)).and(cmp.lt(&p.y, &iy_hi));
        if outer != Tri::No && inner != Tri::Yes {
            count += 1;
        }
    }
    Ok(count)
}

/// `Σ Φ_ε(v, w)` over ordered pairs of primitive `v`, `w ≠ ±v` in
/// `{‖x‖ <= 1+ε, ‖y‖ <= e+ε}` whose `x`-norms or `y`-norms differ by at most `ε`.
pub fn big_phi_count(l: &LatticeBasis, eps: f64) -> Result<u64> {
    let prec = l.prec;
    let e = crate::certified::euler(prec);
    let ef = Float::with_val(prec, eps);
    let x_hi = Float::with_val(prec, 1u32) + &ef;
    let y_hi = Float::with_val(prec, &e + &ef);
    let mut cmp = Comparator::new(prec);
    let pts: Vec<Pt> = primitive_window(l, eps)?
        .into_iter()
        .filter(|p| cmp.le(&p.x, &x_hi).and(cmp.le(&p.y, &y_hi)) != Tri::No)
        .collect();
    let mut count = 0;
    for (i, v) in pts.iter().enumerate() {
        let neg: Vec<rug::Integer> = v.coeffs.iter().map(|c| rug::Integer::from(-c)).collect();
        for (j, w) in pts.iter().enumerate() {
            if i == j || w.coeffs == neg {
                continue;
            }
            let dx = Float::with_val(prec, &v.x - &w.x).abs();
            let dy = Float::with_val(prec, &v.y - &w.y).abs();
            let close = cmp.le(&dx, &ef).or(cmp.le(&dy, &ef));
            if close != Tri::No {
                count += 1;
            }
        }
    }
    Ok(count)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationReport {
    /// `None` when either `f` value is indeterminate.
    pub holds: Option<bool>,
    pub lhs: Option<u32>,
    pub rhs: u64,
}

/// Checks `|f(gΛ) − f(Λ)| <= Σ φ_{Cε} + Σ Φ_{Cε}` over `Λ`.
pub fn perturbation_check(l: &LatticeBasis, g: &[Vec<Float>], eps: f64, c: f64) -> Result<PerturbationReport> {
    if c <= 0.0 {
        return Err(invalid("C must be positive"));
    }
    let dist = operator_distance(g);
    if dist > eps * (1.0 + 1e-9) {
        return Err(invalid(format!("g is {dist:e} from the identity, more than eps = {eps:e}")));
    }
    let gl = l.transformed(g)?;
    let fl = f_eval_with(l, GuardPolicy::Exact)?.value.conclusive();
    let fg = f_eval_with(&gl, GuardPolicy::Exact)?.value.conclusive();
    let rhs = phi_count(l, c * eps)? + big_phi_count(l, c * eps)?;
    let lhs = match (fl, fg) {
        (Some(a), Some(b)) => Some(a.abs_diff(b)),
        _ => None,
    };
    Ok(PerturbationReport { holds: lhs.map(|x| u64::from(x) <= rhs), lhs, rhs })
}

/// `‖g − I‖` in the Euclidean operator norm.
pub fn operator_distance(g: &[Vec<Float>]) -> f64 {
    let d = g.len();
    let a: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| g[i][j].to_f64() - if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    // Largest eigenvalue of AᵀA by power iteration, seeded by Frobenius.
    let frob: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 {
        return 0.0;
    }
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut est = 0.0;
    for _ in 0..500 {
        let av: Vec<f64> = (0..d).map(|i| (0..d).map(|j| a[i][j] * v[j]).sum()).collect();
        let atav: Vec<f64> = (0..d).map(|j| (0..d).map(|i| a[i][j] * av[i]).sum()).collect();
        let norm = atav.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        est = norm.sqrt();
        v = atav.iter().map(|x| x / norm).collect();
    }
    // Power iteration approaches from below; Frobenius bounds from above.
    est.max(frob / (d as f64).sqrt()).min(frob)
}

/// A random `g ∈ SL_d(R)` with `‖g − I‖ <= eps`, as rows at `prec` bits.
pub fn random_perturbation<R: Rng + ?Sized>(rng: &mut R, d: usize, eps: f64, prec: u32) -> Vec<Vec<Float>> {
    let mut e: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let tr: f64 = (0..d).map(|i| e[i][i]).sum::<f64>() / d as f64;
    for (i, row) in e.iter_mut().enumerate() {
        row[i] -= tr;
    }
    let frob: f64 = e.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    // Frobenius bounds the operator norm; leave room for the determinant fix.
    let s = 0.98 * eps / frob;
    let mut g: Vec<Vec<Float>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| Float::with_val(prec, s * e[i][j] + if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    let det = det_float(&g, prec);
    let root = Float::with_val(prec, det.root_ref(d as u32));
    for row in g.iter_mut() {
        for x in row.iter_mut() {
            *x /= &root;
        }
    }
    g
}

fn det_float(g: &[Vec<Float>], prec: u32) -> Float {
    let d = g.len();
    let mut a: Vec<Vec<Float>> = g.to_vec();
    let mut det = Float::with_val(prec, 1);
    for k in 0..d {
        let piv = (k..d)
            .max_by(|&x, &y| {
                a[x][k].clone().abs().partial_cmp(&a[y][k].clone().abs()).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if piv != k {
            a.swap(piv, k);
            det = -det;
        }
        det *= &a[k][k];
        for i in k + 1..d {
            let f = Float::with_val(prec, &a[i][k] / &a[k][k]);
            for j in k..d {
                let t = Float::with_val(prec, &f * &a[k][j]);
                a[i][j] -= t;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bestapprox::TargetMatrix;
    use crate::norms::ProductNormSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rug::Rational;

    fn identity() -> LatticeBasis {
        LatticeBasis::make_unipotent(&TargetMatrix::zero(1, 1), &ProductNormSpec::sup(1, 1), 128).unwrap()
    }

    #[test]
    fn phi_on_z2() {
        // (0,±1), (±1,±1), (±1,±2); (0,±2) is inside the inner region.
        assert_eq!(phi_count(&identity(), 0.1).unwrap(), 10);
    }

    #[test]
    fn phi_is_monotone() {
        let th = TargetMatrix::parse("9876/65536").unwrap();
        let l = LatticeBasis::make_unipotent(&th, &ProductNormSpec::sup(1, 1), 128)
            .unwrap()
            .apply_flow(&Rational::from(3))
            .unwrap();
        let mut last = 0;
        for k in 1..20 {
            let c = phi_count(&l, k as f64 * 0.012).unwrap();
            assert!(c >= last);
            last = c;
        }
    }

    #[test]
    fn big_phi_is_even_and_brute_forced() {
        let eps = 0.1;
        let got = big_phi_count(&identity(), eps).unwrap();
        // Primitive points of Z² with |x| <= 1.1, |y| <= e + 0.1.
        let mut pts = Vec::new();
        for x in -1i64..=1 {
            for y in -2i64..=2 {
                if (x, y) != (0, 0) && gcd(x.unsigned_abs(), y.unsigned_abs()) == 1 {
                    pts.push((x, y));
                }
            }
        }
        let mut want = 0;
        for &v in &pts {
            for &w in &pts {
                if v == w || v == (-w.0, -w.1) {
                    continue;
                }
                let dx = (v.0.abs() - w.0.abs()).abs() as f64;
                let dy = (v.1.abs() - w.1.abs()).abs() as f64;
                if dx <= eps || dy <= eps {
                    want += 1;
                }
            }
        }
        assert_eq!(got, want);
        assert_eq!(got % 2, 0);
    }

    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 { a } else { gcd(b, a % b) }
    }

    #[test]
    fn identity_perturbation_holds() {
        let g: Vec<Vec<Float>> =
            (0..2).map(|i| (0..2).map(|j| Float::with_val(128, (i == j) as u32)).collect()).collect();
        let th = TargetMatrix::parse("3/11").unwrap();
        let l = LatticeBasis::make_unipotent(&th, &ProductNormSpec::sup(1, 1), 128)
            .unwrap()
            .apply_flow(&Rational::from(2))
            .unwrap();
        let r = perturbation_check(&l, &g, 1e-3, 6.0 * std::f64::consts::E).unwrap();
        assert_eq!(r.lhs, Some(0));
        assert_eq!(r.holds, Some(true));
    }

    #[test]
    fn random_perturbation_is_close_and_unimodular() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for d in 2..=4 {
            let g = random_perturbation(&mut rng, d, 1e-3, 128);
            assert!(operator_distance(&g) <= 1e-3);
            let det = det_float(&g, 128).to_f64();
            assert!((det - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_far_perturbation() {
        let g: Vec<Vec<Float>> = vec![
            vec![Float::with_val(64, 1.1), Float::with_val(64, 0)],
            vec![Float::with_val(64, 0), Float::with_val(64, 1.0 / 1.1)],
        ];
        assert!(perturbation_check(&identity(), &g, 1e-3, 1.0).is_err());
    }
}
