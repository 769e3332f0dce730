//! Shell-by-shell enumeration of best approximations.
//!
//! With `D` the common denominator of `θ` and `a = Dθ`, the residual of the
//! nearest `p` is `e / D` where `e_i = (a q)_i - k_i D` and
//! `k_i = floor((a q)_i / D + 1/2)`. Errors of different `q` are compared
//! through the integers `max |e_i|` (sup) or `Σ e_i²` (Euclidean), which are
//! order-isomorphic to the true norms.

use std::cmp::Ordering;

use rug::{Integer, Rational};

use super::target::{Horizon, TargetMatrix};
use super::{BestApproxRecord, BestApproxSequence, SignMode};
use crate::error::{invalid, Error, Result};
use crate::norms::{NormKind, NormSpec, NormValue, ProductNormSpec, ShellIter};

/// Minimizing `p` for a fixed `q`, its error, and whether the minimizer is
/// unique.
pub fn nearest_residual(
    theta: &TargetMatrix,
    q: &[i64],
    norm_m: &NormSpec,
) -> Result<(Vec<Integer>, NormValue, bool)> {
    if q.len() != theta.n {
        return Err(Error::DimensionMismatch { expected: theta.n, got: q.len() });
    }
    if norm_m.dim != theta.m {
        return Err(Error::DimensionMismatch { expected: theta.m, got: norm_m.dim });
    }
    if q.iter().all(|&x| x == 0) {
        return Err(invalid("q must be nonzero"));
    }
    let half = Rational::from((1, 2));
    let mut p = Vec::with_capacity(theta.m);
    let mut res = Vec::with_capacity(theta.m);
    let mut unique = true;
    for r in theta.apply(q) {
        let k = Rational::from(&r + &half).floor().into_numer_denom().0;
        let e = r - &k;
        if e == -half.clone() {
            unique = false;
        }
        p.push(-k);
        res.push(e);
    }
    let err = crate::norms::norm_eval(&res, norm_m)?;
    Ok((p, err, unique))
}

/// Per-`θ` residual arithmetic. `Err` is an integer key order-isomorphic to
/// the error norm.
trait Kernel {
    type Err: Ord + Clone;
    fn eval(&self, q: &[i64]) -> (Self::Err, bool);
    fn is_zero(e: &Self::Err) -> bool;
    fn p_of(&self, q: &[i64]) -> Vec<Integer>;
    fn err_value(&self, e: &Self::Err) -> NormValue;
}

struct Common {
    m: usize,
    n: usize,
    kind: NormKind,
    scale: Rational,
    den: Integer,
}

impl Common {
    fn err_value(&self, key: &Integer) -> NormValue {
        match self.kind {
            NormKind::Sup => NormValue::Sup(Rational::from((key.clone(), self.den.clone())) * &self.scale),
            NormKind::Euclidean => {
                let d2 = Integer::from(&self.den * &self.den);
                let s2 = Rational::from(&self.scale * &self.scale);
                NormValue::EuclideanSq(Rational::from((key.clone(), d2)) * s2)
            }
        }
    }
}

struct SmallKernel {
    c: Common,
    a: Vec<i128>,
    den: i128,
}

impl Kernel for SmallKernel {
    type Err = u128;

    #[inline]
    fn eval(&self, q: &[i64]) -> (u128, bool) {
        let mut key = 0u128;
        let mut unique = true;
        for i in 0..self.c.m {
            let row = &self.a[i * self.c.n..(i + 1) * self.c.n];
            let mut s = 0i128;
            for (aij, &qj) in row.iter().zip(q) {
                s += aij * qj as i128;
            }
            let k = (2 * s + self.den).div_euclid(2 * self.den);
            let e = s - k * self.den;
            if 2 * e == -self.den {
                unique = false;
            }
            let ae = e.unsigned_abs();
            match self.c.kind {
                NormKind::Sup => key = key.max(ae),
                NormKind::Euclidean => key += ae * ae,
            }
        }
        (key, unique)
    }

    fn is_zero(e: &u128) -> bool {
        *e == 0
    }

    fn p_of(&self, q: &[i64]) -> Vec<Integer> {
        (0..self.c.m)
            .map(|i| {
                let row = &self.a[i * self.c.n..(i + 1) * self.c.n];
                let s: i128 = row.iter().zip(q).map(|(a, &x)| a * x as i128).sum();
                Integer::from(-(2 * s + self.den).div_euclid(2 * self.den))
            })
            .collect()
    }

    fn err_value(&self, e: &u128) -> NormValue {
        self.c.err_value(&Integer::from(*e))
    }
}

struct BigKernel {
    c: Common,
    a: Vec<Integer>,
}

impl BigKernel {
    fn k_and_e(&self, i: usize, q: &[i64]) -> (Integer, Integer) {
        let mut s = Integer::new();
        for (j, &qj) in q.iter().enumerate() {
            s += Integer::from(&self.a[i * self.c.n + j] * qj);
        }
        let two_d = Integer::from(&self.c.den * 2u32);
        let num = Integer::from(&s * 2u32) + &self.c.den;
        let k = num.div_rem_floor(two_d).0;
        let e = s - Integer::from(&k * &self.c.den);
        (k, e)
    }
}

impl Kernel for BigKernel {
    type Err = Integer;

    fn eval(&self, q: &[i64]) -> (Integer, bool) {
        let mut key = Integer::new();
        let mut unique = true;
        for i in 0..self.c.m {
            let (_, e) = self.k_and_e(i, q);
            if Integer::from(&e * 2u32) == Integer::from(-&self.c.den) {
                unique = false;
            }
            match self.c.kind {
                NormKind::Sup => {
                    let ae = e.abs();
                    if ae > key {
                        key = ae;
                    }
                }
                NormKind::Euclidean => key += e.square(),
            }
        }
        (key, unique)
    }

    fn is_zero(e: &Integer) -> bool {
        *e == 0
    }

    fn p_of(&self, q: &[i64]) -> Vec<Integer> {
        (0..self.c.m).map(|i| -self.k_and_e(i, q).0).collect()
    }

    fn err_value(&self, e: &Integer) -> NormValue {
        self.c.err_value(e)
    }
}

fn bits_u(x: u128) -> u32 {
    128 - x.leading_zeros()
}

/// Enumerates best approximations of `θ` with `q` inside `horizon`.
pub fn enumerate_best_approximations(
    theta: &TargetMatrix,
    horizon: &Horizon,
    norms: &ProductNormSpec,
    sign_mode: SignMode,
) -> Result<BestApproxSequence> {
    norms.validate()?;
    if norms.m != theta.m || norms.n != theta.n {
        return Err(Error::DimensionMismatch { expected: norms.m * norms.n, got: theta.m * theta.n });
    }
    if let Horizon::Time(t) = horizon {
        if t.cmp0() == Ordering::Less {
            return Err(invalid("T must be nonnegative"));
        }
    }
    let max_base = horizon.max_base(&norms.norm_n)?;
    let den = theta.common_denominator();
    let a: Vec<Integer> = theta
        .entries()
        .iter()
        .map(|e| e.numer() * Integer::from(&den / e.denom()))
        .collect();
    let c = Common {
        m: theta.m,
        n: theta.n,
        kind: norms.norm_m.kind,
        scale: norms.norm_m.scale.clone(),
        den: den.clone(),
    };

    // Largest |q_j| ever visited.
    let qmax: u128 = match norms.norm_n.kind {
        NormKind::Sup => max_base as u128,
        NormKind::Euclidean => (max_base as f64).sqrt().ceil() as u128 + 1,
    };
    let amax_bits = a.iter().map(|x| x.significant_bits()).max().unwrap_or(0);
    let den_bits = den.significant_bits();
    let sum_bits = amax_bits + bits_u(qmax) + bits_u(theta.n as u128) + 1;
    let key_bits = match c.kind {
        NormKind::Sup => den_bits,
        NormKind::Euclidean => 2 * den_bits + bits_u(theta.m as u128),
    };
    let small = sum_bits.max(den_bits + 2) <= 124 && key_bits <= 127;

    let records = if small {
        let k = SmallKernel {
            a: a.iter().map(|x| x.to_i128().unwrap()).collect(),
            den: den.to_i128().unwrap(),
            c,
        };
        scan(&k, norms, max_base, sign_mode)?
    } else {
        let k = BigKernel { a, c };
        scan(&k, norms, max_base, sign_mode)?
    };
    let (records, exhausted_rational) = records;
    Ok(BestApproxSequence {
        theta: theta.clone(),
        records,
        sign_mode,
        horizon: horizon.clone(),
        exhausted_rational,
    })
}

fn scan<K: Kernel>(
    k: &K,
    norms: &ProductNormSpec,
    max_base: u64,
    sign_mode: SignMode,
) -> Result<(Vec<BestApproxRecord>, bool)> {
    let mut records = Vec::new();
    let mut running: Option<K::Err> = None;
    for shell in ShellIter::new(&norms.norm_n, max_base, true) {
        // Shell minimum, how many representatives attain it, and which one.
        let mut best: Option<(K::Err, usize, bool)> = None;
        let mut ties = 0usize;
        for (idx, q) in shell.vectors().enumerate() {
            let (e, unique) = k.eval(q);
            match &best {
                Some((b, _, _)) => match e.cmp(b) {
                    Ordering::Less => {
                        best = Some((e, idx, unique));
                        ties = 1;
                    }
                    Ordering::Equal => ties += 1,
                    Ordering::Greater => {}
                },
                None => {
                    best = Some((e, idx, unique));
                    ties = 1;
                }
            }
        }
        let Some((e, idx, unique)) = best else { continue };
        let improves = running.as_ref().is_none_or(|r| e < *r);
        if improves && ties == 1 && unique {
            let q: Vec<i64> = shell.vectors().nth(idx).unwrap().to_vec();
            let p = k.p_of(&q);
            let err = k.err_value(&e);
            let shell_index = shell
                .value
                .floor_log()
                .ok_or_else(|| Error::Precision("shell index of ‖q‖ undecided".into()))?;
            let rec = BestApproxRecord { p, q, qnorm: shell.value.clone(), err, shell_index };
            if sign_mode == SignMode::Signed {
                let neg = rec.negated();
                records.push(rec);
                records.push(neg);
            } else {
                records.push(rec);
            }
        }
        if improves {
            running = Some(e.clone());
        }
        if K::is_zero(&e) {
            return Ok((records, true));
        }
    }
    Ok((records, false))
}
