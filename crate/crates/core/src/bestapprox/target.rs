use std::cmp::Ordering;
use std::fmt;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::norms::{NormKind, NormSpec, NormValue};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    User,
    DyadicSample { seed: u64, index: u64, bits: u32 },
}

/// An exact `m × n` rational matrix, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetMatrix {
    pub m: usize,
    pub n: usize,
    entries: Vec<Rational>,
    pub provenance: Provenance,
}

impl TargetMatrix {
    pub fn new(m: usize, n: usize, entries: Vec<Rational>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(invalid("target dimensions must be positive"));
        }
        if entries.len() != m * n {
            return Err(Error::DimensionMismatch { expected: m * n, got: entries.len() });
        }
        Ok(TargetMatrix { m, n, entries, provenance: Provenance::User })
    }

    pub fn zero(m: usize, n: usize) -> Self {
        TargetMatrix {
            m,
            n,
            entries: vec![Rational::new(); m * n],
            provenance: Provenance::User,
        }
    }

    pub fn scalar(x: Rational) -> Self {
        TargetMatrix { m: 1, n: 1, entries: vec![x], provenance: Provenance::User }
    }

    /// Entries `k / 2^bits`, row-major.
    pub fn dyadic(m: usize, n: usize, ks: Vec<Integer>, bits: u32, provenance: Provenance) -> Result<Self> {
        let den = Integer::from(1) << bits;
        let entries = ks.into_iter().map(|k| Rational::from((k, den.clone()))).collect();
        let mut t = Self::new(m, n, entries)?;
        t.provenance = provenance;
        Ok(t)
    }

    /// Parses `a,b;c,d` (rows separated by `;`). Entries may be integers,
    /// fractions `p/q`, or finite decimals.
    pub fn parse(s: &str) -> Result<Self> {
        let rows: Vec<&str> = s.split(';').map(str::trim).filter(|r| !r.is_empty()).collect();
        if rows.is_empty() {
            return Err(invalid("empty matrix"));
        }
        let mut entries = Vec::new();
        let mut n = None;
        for row in &rows {
            let cells: Vec<Rational> =
                row.split(',').map(parse_rational).collect::<Result<_>>()?;
            match n {
                None => n = Some(cells.len()),
                Some(k) if k != cells.len() => {
                    return Err(invalid("matrix rows have different lengths"))
                }
                _ => {}
            }
            entries.extend(cells);
        }
        Self::new(rows.len(), n.unwrap_or(0), entries)
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.n + j]
    }

    /// `θ q` for an integer vector `q`.
    pub fn apply(&self, q: &[i64]) -> Vec<Rational> {
        (0..self.m)
            .map(|i| {
                let mut s = Rational::new();
                for (j, &qj) in q.iter().enumerate() {
                    s += Rational::from(self.get(i, j) * qj);
                }
                s
            })
            .collect()
    }

    /// Least common denominator of the entries.
    pub fn common_denominator(&self) -> Integer {
        let mut d = Integer::from(1);
        for e in &self.entries {
            d.lcm_mut(e.denom());
        }
        d
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.cmp0() == Ordering::Equal)
    }
}

impl fmt::Display for TargetMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.m {
            if i > 0 {
                write!(f, ";")?;
            }
            for j in 0..self.n {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        Ok(())
    }
}

/// Parses `p`, `p/q`, or a finite decimal such as `-1.25` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(invalid("empty number"));
    }
    if let Some((a, b)) = s.split_once('/') {
        let a: Integer = a.trim().parse().map_err(|_| invalid(format!("bad numerator in `{s}`")))?;
        let b: Integer = b.trim().parse().map_err(|_| invalid(format!("bad denominator in `{s}`")))?;
        if b == 0 {
            return Err(invalid("zero denominator"));
        }
        return Ok(Rational::from((a, b)));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if !frac.chars().all(|c| c.is_ascii_digit())
            || !int_digits.chars().all(|c| c.is_ascii_digit())
            || (int_digits.is_empty() && frac.is_empty())
        {
            return Err(invalid(format!("bad decimal `{s}`")));
        }
        let digits: Integer = format!("{int_digits}{frac}")
            .parse()
            .map_err(|_| invalid(format!("bad decimal `{s}`")))?;
        let den = Integer::from(Integer::u_pow_u(10, frac.len() as u32));
        let r = Rational::from((digits, den));
        return Ok(if neg { -r } else { r });
    }
    let a: Integer = s.parse().map_err(|_| invalid(format!("bad number `{s}`")))?;
    Ok(Rational::from(a))
}

/// How far to enumerate: `‖q‖ <= e^T`, or `‖q‖ <= B` for a rational `B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Horizon {
    Time(Rational),
    NormBound(Rational),
}

impl Horizon {
    /// Largest base norm of `q` inside the horizon.
    pub fn max_base(&self, spec: &NormSpec) -> Result<u64> {
        match self {
            Horizon::Time(t) => spec.max_base_within_exp(t),
            Horizon::NormBound(b) => {
                if b.cmp0() == Ordering::Less {
                    return Ok(0);
                }
                let v = match spec.kind {
                    NormKind::Sup => NormValue::Sup(b.clone()),
                    NormKind::Euclidean => NormValue::EuclideanSq(Rational::from(b * b)),
                };
                spec.max_base_within(&v)
            }
        }
    }

    /// Whether a norm value lies inside the horizon; `None` if undecided.
    pub fn contains(&self, v: &NormValue) -> Option<bool> {
        match self {
            Horizon::Time(t) => v.cmp_exp(t).map(|o| o != Ordering::Greater),
            Horizon::NormBound(b) => Some(v.cmp_rational(b) != Ordering::Greater),
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Time(t) => write!(f, "T={t}"),
            Horizon::NormBound(b) => write!(f, "|q|<={b}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_matrix_forms() {
        let t = TargetMatrix::parse("1/3, 0.25; -2, 7/14").unwrap();
        assert_eq!((t.m, t.n), (2, 2));
        assert_eq!(*t.get(0, 1), Rational::from((1, 4)));
        assert_eq!(*t.get(1, 1), Rational::from((1, 2)));
        assert_eq!(t.to_string(), "1/3,1/4;-2,1/2");
        assert!(TargetMatrix::parse("1,2;3").is_err());
        assert!(TargetMatrix::parse("1/0").is_err());
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_rational("-0.125").unwrap(), Rational::from((-1, 8)));
        assert_eq!(parse_rational("3.").unwrap(), Rational::from(3));
        assert!(parse_rational("1.2.3").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn apply_and_denominator() {
        let t = TargetMatrix::parse("1/3,2/5").unwrap();
        assert_eq!(t.apply(&[3, 5]), vec![Rational::from(3)]);
        assert_eq!(t.common_denominator(), 15);
    }

    #[test]
    fn horizon_bases() {
        let sup = NormSpec::sup(1);
        assert_eq!(Horizon::NormBound(Rational::from(3)).max_base(&sup).unwrap(), 3);
        assert_eq!(Horizon::Time(Rational::from(2)).max_base(&sup).unwrap(), 7);
        let eu = NormSpec::euclidean(2);
        assert_eq!(Horizon::NormBound(Rational::from((5, 2))).max_base(&eu).unwrap(), 6);
    }
}
