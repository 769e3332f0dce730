//! Norms on the two factors `R^m`, `R^n` and shell enumeration of integer
//! vectors.
//!
//! Values are kept exact: sup norms as rationals, Euclidean norms as their
//! squares, so every ordering decision is made without rounding.

use std::cmp::Ordering;
use std::fmt;

use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::certified;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    Sup,
    Euclidean,
}

impl NormKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sup" | "max" | "inf" => Ok(NormKind::Sup),
            "euclid" | "euclidean" | "l2" => Ok(NormKind::Euclidean),
            other => Err(invalid(format!("unknown norm kind `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            NormKind::Sup => "sup",
            NormKind::Euclidean => "euclid",
        }
    }
}

/// `λ · (base norm)` on `R^dim`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormSpec {
    pub kind: NormKind,
    pub dim: usize,
    pub scale: Rational,
}

impl NormSpec {
    pub fn new(kind: NormKind, dim: usize, scale: Rational) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("norm dimension must be positive"));
        }
        if scale.cmp0() != Ordering::Greater {
            return Err(invalid("norm scale must be positive"));
        }
        Ok(NormSpec { kind, dim, scale })
    }

    pub fn sup(dim: usize) -> Self {
        NormSpec { kind: NormKind::Sup, dim, scale: Rational::from(1) }
    }

    pub fn euclidean(dim: usize) -> Self {
        NormSpec { kind: NormKind::Euclidean, dim, scale: Rational::from(1) }
    }

    /// Exact value of an integer vector whose base norm (max |v_i| or Σ v_i²)
    /// is `base`.
    pub fn value_from_base(&self, base: &Integer) -> NormValue {
        match self.kind {
            NormKind::Sup => NormValue::Sup(Rational::from(base) * &self.scale),
            NormKind::Euclidean => {
                let s2 = Rational::from(&self.scale * &self.scale);
                NormValue::EuclideanSq(Rational::from(base) * s2)
            }
        }
    }

    /// Base norm of an integer vector: `max |v_i|` for sup, `Σ v_i²` for Euclidean.
    pub fn base_of(&self, v: &[i64]) -> u128 {
        base_norm(self.kind, v)
    }

    /// Largest base value `b` with `value_from_base(b) <= bound`.
    pub fn max_base_within(&self, bound: &NormValue) -> Result<u64> {
        if bound.kind() != self.kind {
            return Err(invalid("norm bound has a different kind than the norm"));
        }
        let per_unit = match self.kind {
            NormKind::Sup => self.scale.clone(),
            NormKind::Euclidean => Rational::from(&self.scale * &self.scale),
        };
        let q = Rational::from(bound.raw() / &per_unit);
        if q.cmp0() == Ordering::Less {
            return Ok(0);
        }
        let floor = q.numer().clone().div_rem_floor(q.denom().clone()).0;
        floor
            .to_u64()
            .ok_or_else(|| invalid("norm bound too large for shell enumeration"))
    }

    /// Largest base value `b` with `value_from_base(b) <= e^t`, decided with
    /// certified enclosures of `e^t`.
    pub fn max_base_within_exp(&self, t: &Rational) -> Result<u64> {
        let est = {
            let mut f = Float::with_val(64, t);
            if self.kind == NormKind::Euclidean {
                f *= 2;
            }
            f.exp_mut();
            let unit = match self.kind {
                NormKind::Sup => Float::with_val(64, &self.scale),
                NormKind::Euclidean => Float::with_val(64, Rational::from(&self.scale * &self.scale)),
            };
            f /= unit;
            f.to_f64().floor()
        };
        if !est.is_finite() || est > 9.0e18 {
            return Err(invalid("e^T too large for shell enumeration"));
        }
        let mut b = est.max(0.0) as u64;
        let within = |b: u64| -> Result<bool> {
            let v = self.value_from_base(&Integer::from(b));
            match v.cmp_exp(t) {
                Some(o) => Ok(o != Ordering::Greater),
                None => Err(Error::Precision("shell bound against e^T undecided".into())),
            }
        };
        while b > 0 && !within(b)? {
            b -= 1;
        }
        while within(b + 1)? {
            b += 1;
        }
        Ok(b)
    }
}

/// `(m, n)` together with the norms on `R^m` and `R^n`. The norm on `R^{m+n}`
/// is the max of the two factor norms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductNormSpec {
    pub m: usize,
    pub n: usize,
    pub norm_m: NormSpec,
    pub norm_n: NormSpec,
}

impl ProductNormSpec {
    pub fn new(norm_m: NormSpec, norm_n: NormSpec) -> Self {
        ProductNormSpec { m: norm_m.dim, n: norm_n.dim, norm_m, norm_n }
    }

    pub fn sup(m: usize, n: usize) -> Self {
        Self::new(NormSpec::sup(m), NormSpec::sup(n))
    }

    pub fn euclidean(m: usize, n: usize) -> Self {
        Self::new(NormSpec::euclidean(m), NormSpec::euclidean(n))
    }

    pub fn with_kind(m: usize, n: usize, kind: NormKind) -> Self {
        match kind {
            NormKind::Sup => Self::sup(m, n),
            NormKind::Euclidean => Self::euclidean(m, n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.norm_m.dim != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: self.norm_m.dim });
        }
        if self.norm_n.dim != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: self.norm_n.dim });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    /// True for the one-dimensional sup-norm setting with unit scales.
    pub fn is_classical_1d(&self) -> bool {
        self.m == 1
            && self.n == 1
            && self.norm_m.kind == NormKind::Sup
            && self.norm_n.kind == NormKind::Sup
            && self.norm_m.scale == 1
            && self.norm_n.scale == 1
    }
}

/// An exact norm value. Euclidean values are stored squared; values of
/// different kinds are never compared.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NormValue {
    Sup(Rational),
    EuclideanSq(Rational),
}

impl NormValue {
    pub fn zero(kind: NormKind) -> Self {
        match kind {
            NormKind::Sup => NormValue::Sup(Rational::new()),
            NormKind::Euclidean => NormValue::EuclideanSq(Rational::new()),
        }
    }

    pub fn kind(&self) -> NormKind {
        match self {
            NormValue::Sup(_) => NormKind::Sup,
            NormValue::EuclideanSq(_) => NormKind::Euclidean,
        }
    }

    /// The stored rational (squared for Euclidean).
    pub fn raw(&self) -> &Rational {
        match self {
            NormValue::Sup(r) | NormValue::EuclideanSq(r) => r,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.raw().cmp0() == Ordering::Equal
    }

    /// The true norm as `f64` (square root taken for Euclidean values).
    pub fn to_f64(&self) -> f64 {
        match self {
            NormValue::Sup(r) => r.to_f64(),
            NormValue::EuclideanSq(r) => r.to_f64().sqrt(),
        }
    }

    /// The true norm as a float at precision `prec`.
    pub fn to_float(&self, prec: u32) -> Float {
        match self {
            NormValue::Sup(r) => Float::with_val(prec, r),
            NormValue::EuclideanSq(r) => Float::with_val(prec, r).sqrt(),
        }
    }

    /// Compares the true norm with `e^a`, certified.
    pub fn cmp_exp(&self, a: &Rational) -> Option<Ordering> {
        match self {
            NormValue::Sup(r) => certified::cmp_exp(r, a),
            NormValue::EuclideanSq(r) => certified::cmp_exp(r, &Rational::from(a * 2u32)),
        }
    }

    /// Compares the true norm with a rational `x >= 0`.
    pub fn cmp_rational(&self, x: &Rational) -> Ordering {
        match self {
            NormValue::Sup(r) => r.cmp(x),
            NormValue::EuclideanSq(r) => r.cmp(&Rational::from(x * x)),
        }
    }

    /// Largest integer `M` with `e^M <= ‖·‖`; `None` for zero or undecided.
    pub fn floor_log(&self) -> Option<i64> {
        match self {
            NormValue::Sup(r) => certified::floor_log(r),
            NormValue::EuclideanSq(r) => {
                // e^M <= sqrt(r)  <=>  e^{2M} <= r
                let twice = certified::floor_log(r)?;
                let mut m = twice.div_euclid(2);
                // floor(twice/2) is the answer up to the parity of the bracket
                while self.cmp_exp(&Rational::from(m + 1)) != Some(Ordering::Less) {
                    m += 1;
                }
                while self.cmp_exp(&Rational::from(m)) == Some(Ordering::Less) {
                    m -= 1;
                }
                Some(m)
            }
        }
    }
}

impl PartialOrd for NormValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (NormValue::Sup(a), NormValue::Sup(b)) => Some(a.cmp(b)),
            (NormValue::EuclideanSq(a), NormValue::EuclideanSq(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormValue::Sup(r) => write!(f, "{r}"),
            NormValue::EuclideanSq(r) => write!(f, "sqrt({r})"),
        }
    }
}

/// Exact norm of a rational vector.
pub fn norm_eval(v: &[Rational], spec: &NormSpec) -> Result<NormValue> {
    if v.len() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: v.len() });
    }
    Ok(match spec.kind {
        NormKind::Sup => {
            let mut best = Rational::new();
            for x in v {
                let a = Rational::from(x.abs_ref());
                if a > best {
                    best = a;
                }
            }
            NormValue::Sup(best * &spec.scale)
        }
        NormKind::Euclidean => {
            let mut s = Rational::new();
            for x in v {
                s += Rational::from(x * x);
            }
            let s2 = Rational::from(&spec.scale * &spec.scale);
            NormValue::EuclideanSq(s * s2)
        }
    })
}

pub(crate) fn base_norm(kind: NormKind, v: &[i64]) -> u128 {
    match kind {
        NormKind::Sup => v.iter().map(|x| x.unsigned_abs() as u128).max().unwrap_or(0),
        NormKind::Euclidean => v.iter().map(|x| (x.unsigned_abs() as u128).pow(2)).sum(),
    }
}

/// All nonzero integer vectors sharing one exact norm value, in lexicographic
/// order. Coordinates are stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct Shell {
    pub base: u64,
    pub value: NormValue,
    dim: usize,
    coords: Vec<i64>,
}

impl Shell {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[i64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn to_vecs(&self) -> Vec<Vec<i64>> {
        self.vectors().map(|v| v.to_vec()).collect()
    }
}

/// Every nonzero integer vector with `norm_eval(v) <= bound`, grouped into
/// shells of strictly increasing norm.
pub fn enumerate_shells(spec: &NormSpec, bound: &NormValue) -> Result<Vec<Shell>> {
    let max_base = spec.max_base_within(bound)?;
    Ok(ShellIter::new(spec, max_base, false).collect())
}

/// Lazy shell enumeration up to a maximal base value.
///
/// Base values are processed in chunks sized to hold a few thousand vectors;
/// each chunk scans only the coordinate ranges that can reach it. With
/// `half` set, only vectors whose first nonzero coordinate is positive are
/// produced (one representative per `±` pair).
pub struct ShellIter {
    spec: NormSpec,
    max_base: u64,
    half: bool,
    next_lo: u64,
    pending: std::collections::VecDeque<Shell>,
}

const CHUNK_TARGET: f64 = 16384.0;

impl ShellIter {
    pub fn new(spec: &NormSpec, max_base: u64, half: bool) -> Self {
        ShellIter {
            spec: spec.clone(),
            max_base,
            half,
            next_lo: 1,
            pending: Default::default(),
        }
    }

    fn chunk_end(&self, lo: u64) -> u64 {
        let n = self.spec.dim as f64;
        let r_lo = match self.spec.kind {
            NormKind::Sup => lo as f64,
            NormKind::Euclidean => (lo as f64).sqrt(),
        };
        // Cube-volume estimate (2r)^n of the vectors below radius r.
        let target = (2.0 * r_lo).powf(n) + CHUNK_TARGET;
        let r_hi = target.powf(1.0 / n) / 2.0;
        let hi = match self.spec.kind {
            NormKind::Sup => r_hi.floor(),
            NormKind::Euclidean => (r_hi * r_hi).floor(),
        };
        let hi = if hi.is_finite() && hi < 9.0e18 { hi as u64 } else { u64::MAX };
        hi.max(lo + 1).min(self.max_base.saturating_add(1))
    }

    fn fill(&mut self) {
        while self.pending.is_empty() && self.next_lo <= self.max_base {
            let lo = self.next_lo;
            let hi = self.chunk_end(lo);
            self.next_lo = hi;
            let mut gen = RangeGen {
                kind: self.spec.kind,
                dim: self.spec.dim,
                lo,
                hi,
                half: self.half,
                prefix: Vec::with_capacity(self.spec.dim),
                bases: Vec::new(),
                coords: Vec::new(),
            };
            gen.run(0, 0, true);
            self.pending.extend(group_chunk(&self.spec, gen.bases, gen.coords));
        }
    }
}

impl Iterator for ShellIter {
    type Item = Shell;

    fn next(&mut self) -> Option<Shell> {
        self.fill();
        self.pending.pop_front()
    }
}

fn group_chunk(spec: &NormSpec, bases: Vec<u64>, coords: Vec<i64>) -> Vec<Shell> {
    let dim = spec.dim;
    let mut idx: Vec<usize> = (0..bases.len()).collect();
    // Generation order is lexicographic; a stable sort by base keeps it so
    // within each shell.
    idx.sort_by_key(|&i| bases[i]);
    let mut shells: Vec<Shell> = Vec::new();
    for i in idx {
        let b = bases[i];
        let v = &coords[i * dim..(i + 1) * dim];
        match shells.last_mut() {
            Some(s) if s.base == b => s.coords.extend_from_slice(v),
            _ => shells.push(Shell {
                base: b,
                value: spec.value_from_base(&Integer::from(b)),
                dim,
                coords: v.to_vec(),
            }),
        }
    }
    shells
}

struct RangeGen {
    kind: NormKind,
    dim: usize,
    lo: u64,
    hi: u64,
    half: bool,
    prefix: Vec<i64>,
    bases: Vec<u64>,
    coords: Vec<i64>,
}

fn isqrt(x: u64) -> u64 {
    let mut r = (x as f64).sqrt() as u64;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}

fn ceil_sqrt(x: u64) -> u64 {
    let r = isqrt(x);
    if r * r == x {
        r
    } else {
        r + 1
    }
}

impl RangeGen {
    fn emit(&mut self, base: u64, last: i64) {
        self.bases.push(base);
        self.coords.extend_from_slice(&self.prefix);
        self.coords.push(last);
    }

    /// `partial` is the max |coord| (sup) or the sum of squares (Euclidean) of
    /// the prefix; `all_zero` tracks whether the prefix is identically zero.
    fn run(&mut self, depth: usize, partial: u64, all_zero: bool) {
        let top = self.hi - 1;
        let last = depth + 1 == self.dim;
        match self.kind {
            NormKind::Sup => {
                let r = top as i64;
                if !last {
                    let start = if self.half && all_zero { 0 } else { -r };
                    for c in start..=r {
                        self.prefix.push(c);
                        self.run(depth + 1, partial.max(c.unsigned_abs()), all_zero && c == 0);
                        self.prefix.pop();
                    }
                } else if partial >= self.lo {
                    let start = if self.half && all_zero { 1 } else { -r };
                    for c in start..=r {
                        let b = partial.max(c.unsigned_abs());
                        self.emit(b, c);
                    }
                } else {
                    let lo = self.lo as i64;
                    if !(self.half && all_zero) {
                        for c in -r..=-lo {
                            self.emit(c.unsigned_abs(), c);
                        }
                    }
                    for c in lo..=r {
                        self.emit(c as u64, c);
                    }
                }
            }
            NormKind::Euclidean => {
                if partial > top {
                    return;
                }
                let room = top - partial;
                let r = isqrt(room) as i64;
                if !last {
                    let start = if self.half && all_zero { 0 } else { -r };
                    for c in start..=r {
                        let sq = (c * c) as u64;
                        self.prefix.push(c);
                        self.run(depth + 1, partial + sq, all_zero && c == 0);
                        self.prefix.pop();
                    }
                } else {
                    let need = self.lo.saturating_sub(partial);
                    let cmin = ceil_sqrt(need) as i64;
                    if cmin > r {
                        return;
                    }
                    let positive_only = self.half && all_zero;
                    if !positive_only {
                        for c in (-r..=-cmin.max(1)).filter(|_| true) {
                            self.emit(partial + (c * c) as u64, c);
                        }
                        if cmin == 0 && partial >= self.lo {
                            self.emit(partial, 0);
                        }
                    }
                    for c in cmin.max(1)..=r {
                        self.emit(partial + (c * c) as u64, c);
                    }
                }
            }
        }
    }
}
