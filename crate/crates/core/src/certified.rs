//! Certified comparisons of exact rationals against `e^a`.
//!
//! MPFR rounds `exp` correctly, so rounding the argument and the result
//! outward gives a rigorous enclosure. The working precision doubles until the
//! enclosure separates the two sides.

use std::cmp::Ordering;

use rug::float::Round;
use rug::{Float, Rational};

const START_PREC: u32 = 64;
/// Comparisons still ambiguous at this precision are reported as undecided.
pub const MAX_PREC: u32 = 1 << 15;

/// Returns `(lo, hi)` with `lo <= e^a <= hi`.
pub fn exp_enclosure(a: &Rational, prec: u32) -> (Float, Float) {
    let (mut lo, _) = Float::with_val_round(prec, a, Round::Down);
    let (mut hi, _) = Float::with_val_round(prec, a, Round::Up);
    lo.exp_round(Round::Down);
    hi.exp_round(Round::Up);
    (lo, hi)
}

/// Compares `x` with `e^a`; `None` if still undecided at [`MAX_PREC`].
pub fn cmp_exp(x: &Rational, a: &Rational) -> Option<Ordering> {
    if a.cmp0() == Ordering::Equal {
        return Some(x.cmp(&Rational::from(1)));
    }
    if x.cmp0() != Ordering::Greater {
        return Some(Ordering::Less);
    }
    // e^a has roughly |a|/ln 2 bits of exponent; start with enough mantissa
    // to resolve the fraction.
    let mag = a.to_f64().abs();
    let mut prec = START_PREC + (mag / std::f64::consts::LN_2).min(1e6) as u32;
    while prec <= MAX_PREC {
        let (lo, hi) = exp_enclosure(a, prec);
        if *x < lo {
            return Some(Ordering::Less);
        }
        if *x > hi {
            return Some(Ordering::Greater);
        }
        prec *= 2;
    }
    None
}

/// Largest integer `k` with `e^k <= x`, for `x > 0`.
pub fn floor_log(x: &Rational) -> Option<i64> {
    if x.cmp0() != Ordering::Greater {
        return None;
    }
    let num_bits = x.numer().significant_bits() as f64;
    let den_bits = x.denom().significant_bits() as f64;
    let approx = if num_bits < 1000.0 && den_bits < 1000.0 {
        x.to_f64().ln()
    } else {
        (num_bits - den_bits) * std::f64::consts::LN_2
    };
    let mut k = approx.floor() as i64;
    // Walk down while e^k > x, then up while e^{k+1} <= x.
    for _ in 0..4096 {
        match cmp_exp(x, &Rational::from(k))? {
            Ordering::Less => k -= 1,
            _ => break,
        }
    }
    for _ in 0..4096 {
        match cmp_exp(x, &Rational::from(k + 1))? {
            Ordering::Less => return Some(k),
            _ => k += 1,
        }
    }
    None
}

/// `e` at the given precision, rounded to nearest.
pub fn euler(prec: u32) -> Float {
    let mut e = Float::with_val(prec, 1);
    e.exp_mut();
    e
}

/// `e^a` at the given precision, rounded to nearest.
pub fn exp_float(a: &Rational, prec: u32) -> Float {
    let mut x = Float::with_val(prec, a);
    x.exp_mut();
    x
}
