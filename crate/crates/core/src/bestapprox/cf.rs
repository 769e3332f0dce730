use std::cmp::Ordering;

use rug::{Integer, Rational};

use super::target::{Horizon, TargetMatrix};
use super::SignMode;
use crate::error::{invalid, Error, Result};
use crate::norms::{NormValue, ProductNormSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CFExpansion {
    /// `a_0, a_1, …`
    pub quotients: Vec<Integer>,
    /// `(p_j, q_j)` for each quotient.
    pub convergents: Vec<(Integer, Integer)>,
    /// The expansion reached the exact value rather than stopping at `k_max`.
    pub complete: bool,
}

/// Continued fraction of `θ ∈ [0, 1)`, at most `k_max` quotients after `a_0`.
pub fn cf_expand(theta: &Rational, k_max: usize) -> Result<CFExpansion> {
    if theta.cmp0() == Ordering::Less || *theta >= 1 {
        return Err(invalid("continued fraction input must lie in [0, 1)"));
    }
    let (mut num, mut den) = theta.clone().into_numer_denom();
    let mut quotients = Vec::new();
    let mut convergents = Vec::new();
    let (mut p1, mut q1) = (Integer::from(1), Integer::new());
    let (mut p2, mut q2) = (Integer::new(), Integer::from(1));
    let mut complete = false;
    while quotients.len() <= k_max {
        let (a, r) = num.div_rem_floor(den.clone());
        let p = Integer::from(&a * &p1) + &p2;
        let q = Integer::from(&a * &q1) + &q2;
        p2 = std::mem::replace(&mut p1, p.clone());
        q2 = std::mem::replace(&mut q1, q.clone());
        quotients.push(a);
        convergents.push((p, q));
        if r == 0 {
            complete = true;
            break;
        }
        num = den;
        den = r;
    }
    Ok(CFExpansion { quotients, convergents, complete })
}

/// `N(θ, T)` for `m = n = 1` with unit sup norms, read off the convergents.
///
/// Convergents `j >= 1` are counted when `q_j` is inside the horizon; the
/// `j = 0` pair `(0, 1)` counts iff `θ < 1/2`, i.e. iff `θ = 0`, `a_1 > 2`, or
/// `a_1 = 2` with further quotients.
pub fn cf_fast_count(
    theta: &TargetMatrix,
    horizon: &Horizon,
    norms: &ProductNormSpec,
    sign_mode: SignMode,
) -> Result<u64> {
    if theta.m != 1 || theta.n != 1 || !norms.is_classical_1d() {
        return Err(Error::Unsupported(
            "continued-fraction count needs m = n = 1 with unit sup norms".into(),
        ));
    }
    let x = theta.get(0, 0);
    if x.cmp0() == Ordering::Less || *x >= 1 {
        return Err(invalid("continued-fraction count needs θ in [0, 1)"));
    }
    let inside = |q: &Integer| -> Result<bool> {
        horizon
            .contains(&NormValue::Sup(Rational::from(q)))
            .ok_or_else(|| Error::Precision("convergent against e^T undecided".into()))
    };
    if !inside(&Integer::from(1))? {
        return Ok(0);
    }
    let mut count = 0u64;
    let mut num = x.numer().clone();
    let mut den = x.denom().clone();
    // a_0 = 0 for θ in [0, 1).
    let (_, r) = num.div_rem_floor(den.clone());
    if r == 0 {
        count = 1;
    } else {
        num = den;
        den = r;
        let (mut q1, mut q2) = (Integer::from(1), Integer::new());
        let mut first = true;
        loop {
            let (a, r) = num.div_rem_floor(den.clone());
            if first {
                let more = r != 0;
                if a > 2 || (a == 2 && more) {
                    count += 1;
                }
                first = false;
            }
            let q = Integer::from(&a * &q1) + &q2;
            if !inside(&q)? {
                break;
            }
            count += 1;
            q2 = std::mem::replace(&mut q1, q);
            if r == 0 {
                break;
            }
            num = den;
            den = r;
        }
    }
    Ok(match sign_mode {
        SignMode::Signed => 2 * count,
        SignMode::Unsigned => count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> Rational {
        Rational::from((a, b))
    }

    fn ints(v: &[i64]) -> Vec<Integer> {
        v.iter().map(|&x| Integer::from(x)).collect()
    }

    #[test]
    fn seventeen_fiftieths() {
        let cf = cf_expand(&r(17, 50), 100).unwrap();
        assert_eq!(cf.quotients, ints(&[0, 2, 1, 16]));
        let conv: Vec<(i64, i64)> = cf
            .convergents
            .iter()
            .map(|(p, q)| (p.to_i64().unwrap(), q.to_i64().unwrap()))
            .collect();
        assert_eq!(conv, vec![(0, 1), (1, 2), (1, 3), (17, 50)]);
        assert!(cf.complete);
    }

    #[test]
    fn one_third_and_zero() {
        assert_eq!(cf_expand(&r(1, 3), 10).unwrap().quotients, ints(&[0, 3]));
        assert_eq!(cf_expand(&r(0, 1), 10).unwrap().quotients, ints(&[0]));
        assert!(cf_expand(&r(1, 1), 10).is_err());
        assert!(cf_expand(&r(-1, 3), 10).is_err());
    }

    #[test]
    fn truncation_stops_at_k_max() {
        let cf = cf_expand(&r(17, 50), 2).unwrap();
        assert_eq!(cf.quotients.len(), 3);
        assert!(!cf.complete);
    }

    #[test]
    fn golden_truncation_leads_with_ones() {
        // floor(((√5 − 1)/2) · 2^64)
        let k: Integer = "11400714819323198485".parse().unwrap();
        let theta = Rational::from((k, Integer::from(1) << 64u32));
        let cf = cf_expand(&theta, 200).unwrap();
        assert!(cf.quotients[1..40].iter().all(|a| *a == 1));
    }

    #[test]
    fn small_counts() {
        let n = ProductNormSpec::sup(1, 1);
        let count = |x: Rational, h: Horizon, s| cf_fast_count(&TargetMatrix::scalar(x), &h, &n, s).unwrap();
        assert_eq!(count(r(1, 2), Horizon::NormBound(r(3, 1)), SignMode::Signed), 2);
        assert_eq!(count(r(17, 50), Horizon::NormBound(r(50, 1)), SignMode::Unsigned), 4);
        assert_eq!(count(r(17, 50), Horizon::Time(r(-1, 1)), SignMode::Unsigned), 0);
        assert_eq!(count(r(0, 1), Horizon::Time(r(2, 1)), SignMode::Signed), 2);
    }

    #[test]
    fn rejects_other_settings() {
        let t = TargetMatrix::scalar(r(1, 3));
        let e = cf_fast_count(&t, &Horizon::Time(r(1, 1)), &ProductNormSpec::euclidean(1, 1), SignMode::Signed);
        assert!(matches!(e, Err(Error::Unsupported(_))));
    }
}
