mod common;

use std::collections::BTreeSet;

use common::Dyadic;
use proptest::prelude::*;
use simapprox_core::bestapprox::{cf_fast_count, enumerate_best_approximations, Horizon, SignMode, TargetMatrix};
use simapprox_core::lattice::{f_eval, points_in_box, BoxSpec, FValue, LatticeBasis};
use simapprox_core::norms::{enumerate_shells, norm_eval, NormKind, NormSpec, NormValue, ProductNormSpec};
use simapprox_core::runner::sample_theta;
use simapprox_core::stats::{estimate_gamma, ks_statistic, normal_cdf, sample_cumulant, NormalModel};
use simapprox_core::{Integer, Rational};

fn kind() -> impl Strategy<Value = NormKind> {
    prop_oneof![Just(NormKind::Sup), Just(NormKind::Euclidean)]
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![Just((1, 1)), Just((2, 1)), Just((1, 2)), Just((2, 2))]
}

fn dyadic(m: usize, n: usize) -> impl Strategy<Value = Dyadic> {
    prop::collection::vec(0i128..(1i128 << 32), m * n).prop_map(move |a| Dyadic { m, n, bits: 32, a })
}

fn theta_and_dims() -> impl Strategy<Value = Dyadic> {
    dims().prop_flat_map(|(m, n)| dyadic(m, n))
}

fn records(th: &TargetMatrix, h: &Horizon, norms: &ProductNormSpec, s: SignMode) -> BTreeSet<(Vec<Integer>, Vec<i64>)> {
    enumerate_best_approximations(th, h, norms, s).unwrap().records.into_iter().map(|r| (r.p, r.q)).collect()
}

fn small_bound(m: usize, n: usize) -> i64 {
    match n {
        1 => 50 / m as i64,
        _ => 10 / m as i64,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shells_are_complete_and_symmetric(dim in 1usize..=3, k in kind(), b in 1i64..=6) {
        let spec = NormSpec::new(k, dim, Rational::from(1)).unwrap();
        let bound = match k {
            NormKind::Sup => NormValue::Sup(Rational::from(b)),
            NormKind::Euclidean => NormValue::EuclideanSq(Rational::from(b * b)),
        };
        let shells = enumerate_shells(&spec, &bound).unwrap();
        let mut seen = BTreeSet::new();
        for w in shells.windows(2) {
            prop_assert!(w[0].value < w[1].value);
        }
        for s in &shells {
            let set: BTreeSet<Vec<i64>> = s.to_vecs().into_iter().collect();
            prop_assert_eq!(set.len(), s.len());
            for v in &set {
                let neg: Vec<i64> = v.iter().map(|x| -x).collect();
                prop_assert!(set.contains(&neg));
                let r: Vec<Rational> = v.iter().map(|&x| Rational::from(x)).collect();
                prop_assert_eq!(norm_eval(&r, &spec).unwrap(), s.value.clone());
                prop_assert!(seen.insert(v.clone()));
            }
        }
        // Brute-force count over the cube.
        let mut want = 0usize;
        let side = (2 * b + 1) as usize;
        for code in 0..side.pow(dim as u32) {
            let mut c = code;
            let v: Vec<i64> = (0..dim).map(|_| { let d = (c % side) as i64 - b; c /= side; d }).collect();
            let nrm: i64 = match k {
                NormKind::Sup => v.iter().map(|x| x.abs()).max().unwrap(),
                NormKind::Euclidean => v.iter().map(|x| x * x).sum(),
            };
            let lim = if k == NormKind::Sup { b } else { b * b };
            if nrm > 0 && nrm <= lim {
                want += 1;
            }
        }
        prop_assert_eq!(seen.len(), want);
    }

    #[test]
    fn scale_invariance(th in theta_and_dims(), k in kind(), cn in 1i64..5, dn in 1i64..4, cm in 1i64..7) {
        let (m, n) = (th.m, th.n);
        let b = small_bound(m, n);
        let unit = ProductNormSpec::with_kind(m, n, k);
        let sn = Rational::from((cn, dn));
        let scaled = ProductNormSpec::new(
            NormSpec::new(k, m, Rational::from(cm)).unwrap(),
            NormSpec::new(k, n, sn.clone()).unwrap(),
        );
        let t = th.target();
        let a = records(&t, &Horizon::NormBound(Rational::from(b)), &unit, SignMode::Signed);
        let c = records(&t, &Horizon::NormBound(Rational::from(b) * sn), &scaled, SignMode::Signed);
        prop_assert_eq!(a, c);
    }

    #[test]
    fn errors_decrease_and_signs_close(th in theta_and_dims(), k in kind()) {
        let (m, n) = (th.m, th.n);
        let norms = ProductNormSpec::with_kind(m, n, k);
        let h = Horizon::NormBound(Rational::from(small_bound(m, n)));
        let t = th.target();
        let seq = enumerate_best_approximations(&t, &h, &norms, SignMode::Signed).unwrap();
        prop_assert_eq!(seq.records.len() % 2, 0);
        for pair in seq.records.chunks(2) {
            prop_assert_eq!(&pair[1], &pair[0].negated());
        }
        let firsts: Vec<_> = seq.records.iter().step_by(2).collect();
        for w in firsts.windows(2) {
            prop_assert!(w[0].qnorm < w[1].qnorm);
            prop_assert!(w[0].err > w[1].err);
        }
        let un = enumerate_best_approximations(&t, &h, &norms, SignMode::Unsigned).unwrap();
        prop_assert_eq!(2 * un.count(), seq.count());
        let set = records(&t, &h, &norms, SignMode::Signed);
        for (p, q) in &set {
            let np: Vec<Integer> = p.iter().map(|x| Integer::from(-x)).collect();
            let nq: Vec<i64> = q.iter().map(|x| -x).collect();
            prop_assert!(set.contains(&(np, nq)));
        }
    }

    #[test]
    fn f_is_even(th in theta_and_dims(), t in 0i64..6, k in kind()) {
        let norms = ProductNormSpec::with_kind(th.m, th.n, k);
        let l = LatticeBasis::make_unipotent(&th.target(), &norms, 128).unwrap().apply_flow(&Rational::from(t)).unwrap();
        if let FValue::Value(v) = f_eval(&l).unwrap().value {
            prop_assert_eq!(v % 2, 0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cf_matches_enumeration(den in 1i64..=10_000, num_frac in 0.0f64..1.0) {
        let num = ((num_frac * den as f64) as i64).min(den - 1);
        let th = TargetMatrix::scalar(Rational::from((num, den)));
        let norms = ProductNormSpec::sup(1, 1);
        let h = Horizon::NormBound(Rational::from(10_000));
        for s in [SignMode::Signed, SignMode::Unsigned] {
            let a = cf_fast_count(&th, &h, &norms, s).unwrap();
            let b = enumerate_best_approximations(&th, &h, &norms, s).unwrap().count();
            prop_assert_eq!(a, b, "theta = {}/{}", num, den);
        }
    }

    #[test]
    fn cumulant_shift_and_scale(xs in prop::collection::vec(-10.0f64..10.0, 20..80), c in -5.0f64..5.0, a in 0.2f64..3.0) {
        for r in 2..=5 {
            let base = sample_cumulant(&xs, r);
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let scaled: Vec<f64> = xs.iter().map(|x| a * x).collect();
            let tol = 1e-8 * (1.0 + base.abs()) * 10f64.powi(r as i32);
            prop_assert!((sample_cumulant(&shifted, r) - base).abs() < tol);
            prop_assert!((sample_cumulant(&scaled, r) - a.powi(r as i32) * base).abs() < tol * a.powi(r as i32).max(1.0));
        }
    }

    #[test]
    fn ks_invariant_under_joint_scaling(xs in prop::collection::vec(-4.0f64..4.0, 5..60), s in 0.1f64..10.0) {
        let unit = NormalModel::standard();
        let scaled_model = NormalModel::new(s).unwrap();
        let d1 = ks_statistic(&xs, |x| normal_cdf(x, &unit));
        let ys: Vec<f64> = xs.iter().map(|x| s * x).collect();
        let d2 = ks_statistic(&ys, |x| normal_cdf(x, &scaled_model));
        prop_assert!((d1 - d2).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&d1));
    }

    #[test]
    fn gamma_exact_on_noiseless_counts(g in 0.1f64..5.0, ts in prop::collection::vec(1.0f64..200.0, 2..30)) {
        let pts: Vec<(f64, f64)> = ts.iter().map(|&t| (t, g * t)).collect();
        let est = estimate_gamma(&pts).unwrap();
        prop_assert!((est.gamma - g).abs() < 1e-12 * g.max(1.0));
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), idx in any::<u64>(), (m, n) in dims(), bits in 16u32..200) {
        let a = sample_theta(seed, idx, m, n, bits).unwrap();
        let b = sample_theta(seed, idx, m, n, bits).unwrap();
        prop_assert_eq!(&a, &b);
        let den = Integer::from(1) << bits;
        for x in a.entries() {
            prop_assert!(*x >= 0 && *x < 1);
            prop_assert!(den.is_divisible(x.denom()));
        }
    }
}

/// Columns of a well-conditioned random lattice with covolume 1.
fn random_columns(vals: &[f64], d: usize) -> Vec<Vec<f64>> {
    let mut a: Vec<Vec<f64>> = (0..d).map(|j| (0..d).map(|i| vals[j * d + i] + if i == j { 1.5 } else { 0.0 }).collect()).collect();
    // det by elimination on a copy
    let mut m: Vec<Vec<f64>> = a.clone();
    let mut det = 1.0;
    for k in 0..d {
        let p = (k..d).max_by(|&x, &y| m[x][k].abs().total_cmp(&m[y][k].abs())).unwrap();
        m.swap(k, p);
        if p != k {
            det = -det;
        }
        det *= m[k][k];
        for r in k + 1..d {
            let f = m[r][k] / m[k][k];
            for c in k..d {
                m[r][c] -= f * m[k][c];
            }
        }
    }
    let s = det.abs().powf(-1.0 / d as f64);
    for col in a.iter_mut() {
        for x in col.iter_mut() {
            *x *= s;
        }
    }
    a
}

fn fnorm(v: &[f64], k: NormKind) -> f64 {
    match k {
        NormKind::Sup => v.iter().fold(0.0, |a, x| a.max(x.abs())),
        NormKind::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn box_enumeration_is_exhaustive(
        (m, n) in prop_oneof![Just((1usize, 1usize)), Just((1, 2)), Just((2, 1))],
        vals in prop::collection::vec(-0.6f64..0.6, 9),
        k in kind(),
        r1 in 0.3f64..2.0,
        r2 in 0.3f64..2.5,
    ) {
        let d = m + n;
        let cols = random_columns(&vals, d);
        let norms = ProductNormSpec::with_kind(m, n, k);
        let fcols = cols.iter().map(|c| c.iter().map(|&x| rug::Float::with_val(128, x)).collect()).collect();
        let l = LatticeBasis::from_columns_unchecked(fcols, &norms, 128).unwrap();
        let got = points_in_box(&l, &BoxSpec { r1, r2 }, false).unwrap();
        let got: BTreeSet<Vec<i64>> = got.iter().map(|p| p.coeffs.iter().map(|c| c.to_i64().unwrap()).collect()).collect();
        const R: i64 = 20;
        let side = (2 * R + 1) as usize;
        let mut inside = BTreeSet::new();
        let mut near = BTreeSet::new();
        for code in 0..side.pow(d as u32) {
            let mut c = code;
            let co: Vec<i64> = (0..d).map(|_| { let x = (c % side) as i64 - R; c /= side; x }).collect();
            if co.iter().all(|&x| x == 0) {
                continue;
            }
            let v: Vec<f64> = (0..d).map(|i| (0..d).map(|j| co[j] as f64 * cols[j][i]).sum()).collect();
            let (x, y) = (fnorm(&v[..m], k), fnorm(&v[m..], k));
            if x <= r1 - 1e-9 && y <= r2 - 1e-9 {
                inside.insert(co.clone());
            }
            if x <= r1 + 1e-9 && y <= r2 + 1e-9 {
                near.insert(co);
            }
        }
        prop_assert!(inside.is_subset(&got), "missed {:?}", inside.difference(&got).collect::<Vec<_>>());
        prop_assert!(got.is_subset(&near), "spurious {:?}", got.difference(&near).collect::<Vec<_>>());
    }
}
