use std::cmp::Ordering;

use rug::{Float, Integer, Rational};

use crate::bestapprox::TargetMatrix;
use crate::error::{invalid, Error, Result};
use crate::norms::{norm_eval, NormValue, ProductNormSpec};

pub const DEFAULT_PRECISION: u32 = 128;
const LLL_DELTA: f64 = 0.99;
const LLL_MAX_SWAPS: usize = 100_000;

/// Exact description of a flowed lattice `a_t u(θ) Z^{m+n}`.
#[derive(Clone, Debug)]
pub struct ExactFrame {
    pub theta: TargetMatrix,
    pub t: Rational,
}

/// A unimodular lattice in `R^{m+n}`.
///
/// Points are addressed by coefficients in the presented basis (for a flowed
/// lattice these are the integer pairs `(p, q)`). Internally the lattice is
/// held in an LLL-reduced working basis `work = presented · transform`.
#[derive(Clone, Debug)]
pub struct LatticeBasis {
    pub m: usize,
    pub n: usize,
    pub prec: u32,
    pub norms: ProductNormSpec,
    frame: Option<ExactFrame>,
    /// Column `j` holds the presented coefficients of working vector `j`.
    transform: Vec<Vec<Integer>>,
    /// Working basis columns at `prec` bits.
    work: Vec<Vec<Float>>,
    gs: GramSchmidt,
}

/// Gram–Schmidt data of the working basis, in `f64`.
#[derive(Clone, Debug)]
pub(crate) struct GramSchmidt {
    /// `mu[i][j]` for `j < i`.
    pub mu: Vec<Vec<f64>>,
    /// `‖b*_i‖²`
    pub bstar_sq: Vec<f64>,
}

impl LatticeBasis {
    /// `u(θ) Z^{m+n}` with an exact frame at `t = 0`.
    pub fn make_unipotent(theta: &TargetMatrix, norms: &ProductNormSpec, prec: u32) -> Result<Self> {
        norms.validate()?;
        if norms.m != theta.m || norms.n != theta.n {
            return Err(Error::DimensionMismatch { expected: norms.m + norms.n, got: theta.m + theta.n });
        }
        check_prec(prec)?;
        let d = theta.m + theta.n;
        let mut l = LatticeBasis {
            m: theta.m,
            n: theta.n,
            prec,
            norms: norms.clone(),
            frame: Some(ExactFrame { theta: theta.clone(), t: Rational::new() }),
            transform: identity_int(d),
            work: Vec::new(),
            gs: GramSchmidt { mu: Vec::new(), bstar_sq: Vec::new() },
        };
        l.refresh_from_frame();
        l.reduce();
        Ok(l)
    }

    /// A lattice from explicit columns. Fails unless `|det| = 1` within `2^{-P/2}`.
    pub fn from_columns(cols: Vec<Vec<Float>>, norms: &ProductNormSpec, prec: u32) -> Result<Self> {
        let l = Self::from_columns_unchecked(cols, norms, prec)?;
        let det = l.determinant();
        let tol = Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 2));
        let dev = Float::with_val(prec, det.abs_ref()) - 1u32;
        if dev.abs() > tol {
            return Err(invalid(format!("basis is not unimodular (det = {})", det.to_f64())));
        }
        Ok(l)
    }

    /// Like [`from_columns`](Self::from_columns) but accepts any covolume.
    pub fn from_columns_unchecked(cols: Vec<Vec<Float>>, norms: &ProductNormSpec, prec: u32) -> Result<Self> {
        norms.validate()?;
        check_prec(prec)?;
        let d = norms.dim();
        if cols.len() != d || cols.iter().any(|c| c.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: cols.len() });
        }
        let work = cols
            .into_iter()
            .map(|c| c.into_iter().map(|x| Float::with_val(prec, x)).collect())
            .collect();
        let mut l = LatticeBasis {
            m: norms.m,
            n: norms.n,
            prec,
            norms: norms.clone(),
            frame: None,
            transform: identity_int(d),
            work,
            gs: GramSchmidt { mu: Vec::new(), bstar_sq: Vec::new() },
        };
        if l.determinant().is_zero() {
            return Err(invalid("basis is singular"));
        }
        l.reduce();
        Ok(l)
    }

    pub fn from_f64_columns(cols: &[Vec<f64>], norms: &ProductNormSpec, prec: u32) -> Result<Self> {
        let cols = cols
            .iter()
            .map(|c| c.iter().map(|&x| Float::with_val(prec, x)).collect())
            .collect();
        Self::from_columns(cols, norms, prec)
    }

    /// `a_t Λ`.
    pub fn apply_flow(&self, t: &Rational) -> Result<Self> {
        let mut l = self.clone();
        let steps = t.to_f64().abs().ceil().max(1.0) as u32;
        let step = Rational::from(t / steps);
        for _ in 0..steps {
            match &mut l.frame {
                Some(f) => {
                    f.t += &step;
                    l.refresh_from_frame();
                }
                None => l.scale_rows(&step),
            }
            l.reduce();
        }
        Ok(l)
    }

    /// `gΛ` for a real matrix `g` (rows of `g`). The result has no exact frame.
    pub fn transformed(&self, g: &[Vec<Float>]) -> Result<Self> {
        let d = self.dim();
        if g.len() != d || g.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: g.len() });
        }
        let mut l = self.clone();
        l.frame = None;
        for col in l.work.iter_mut() {
            let new: Vec<Float> = (0..d)
                .map(|i| {
                    let mut s = Float::with_val(self.prec, 0);
                    for (k, c) in col.iter().enumerate() {
                        s += Float::with_val(self.prec, &g[i][k] * c);
                    }
                    s
                })
                .collect();
            *col = new;
        }
        l.reduce();
        Ok(l)
    }

    /// Same lattice at a different working precision.
    pub fn with_precision(&self, prec: u32) -> Result<Self> {
        check_prec(prec)?;
        let mut l = self.clone();
        l.prec = prec;
        if l.frame.is_some() {
            l.refresh_from_frame();
        } else {
            for c in l.work.iter_mut() {
                for x in c.iter_mut() {
                    x.set_prec(prec);
                }
            }
        }
        Ok(l)
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    pub fn frame(&self) -> Option<&ExactFrame> {
        self.frame.as_ref()
    }

    /// Flow time of a lattice built by [`make_unipotent`](Self::make_unipotent).
    pub fn time(&self) -> Option<&Rational> {
        self.frame.as_ref().map(|f| &f.t)
    }

    pub fn work_columns(&self) -> &[Vec<Float>] {
        &self.work
    }

    pub(crate) fn gram_schmidt(&self) -> &GramSchmidt {
        &self.gs
    }

    /// Presented coefficients of the point with working coordinates `c`.
    pub fn presented_coeffs(&self, c: &[i64]) -> Vec<Integer> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                let mut s = Integer::new();
                for (j, &cj) in c.iter().enumerate() {
                    if cj != 0 {
                        s += Integer::from(&self.transform[j][i] * cj);
                    }
                }
                s
            })
            .collect()
    }

    /// Embedding of the point with working coordinates `c`.
    pub fn embed(&self, c: &[i64]) -> Vec<Float> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                let mut s = Float::with_val(self.prec, 0);
                for (j, &cj) in c.iter().enumerate() {
                    if cj != 0 {
                        s += Float::with_val(self.prec, &self.work[j][i] * cj);
                    }
                }
                s
            })
            .collect()
    }

    /// Exact `(‖p + θq‖, ‖q‖)` of a point given by presented coefficients,
    /// before the flow scaling. `None` without an exact frame.
    pub fn exact_parts(&self, coeffs: &[Integer]) -> Option<(NormValue, NormValue)> {
        let f = self.frame.as_ref()?;
        let (p, q) = coeffs.split_at(self.m);
        let x: Vec<Rational> = (0..self.m)
            .map(|i| {
                let mut s = Rational::from(&p[i]);
                for (j, qj) in q.iter().enumerate() {
                    s += Rational::from(f.theta.get(i, j) * qj);
                }
                s
            })
            .collect();
        let y: Vec<Rational> = q.iter().map(Rational::from).collect();
        let xn = norm_eval(&x, &self.norms.norm_m).ok()?;
        let yn = norm_eval(&y, &self.norms.norm_n).ok()?;
        Some((xn, yn))
    }

    pub fn determinant(&self) -> Float {
        let d = self.dim();
        let prec = self.prec;
        let mut a: Vec<Vec<Float>> =
            (0..d).map(|i| (0..d).map(|j| self.work[j][i].clone()).collect()).collect();
        let mut det = Float::with_val(prec, 1);
        for k in 0..d {
            let piv = (k..d)
                .max_by(|&x, &y| a[x][k].clone().abs().partial_cmp(&a[y][k].clone().abs()).unwrap_or(Ordering::Equal))
                .unwrap();
            if a[piv][k].is_zero() {
                return Float::with_val(prec, 0);
            }
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

    fn refresh_from_frame(&mut self) {
        let f = self.frame.as_ref().expect("frame");
        let (m, n, prec) = (self.m, self.n, self.prec);
        let wp = prec + 32;
        let mut sx = Float::with_val(wp, Rational::from(&f.t * n as u32) / m as u32);
        sx.exp_mut();
        let mut sy = Float::with_val(wp, -f.t.clone());
        sy.exp_mut();
        self.work = self
            .transform
            .iter()
            .map(|col| {
                let (p, q) = col.split_at(m);
                let mut v = Vec::with_capacity(m + n);
                for i in 0..m {
                    let mut s = Rational::from(&p[i]);
                    for (j, qj) in q.iter().enumerate() {
                        s += Rational::from(f.theta.get(i, j) * qj);
                    }
                    v.push(Float::with_val(prec, Float::with_val(wp, &s) * &sx));
                }
                for qj in q {
                    v.push(Float::with_val(prec, Float::with_val(wp, qj) * &sy));
                }
                v
            })
            .collect();
    }

    fn scale_rows(&mut self, t: &Rational) {
        let (m, n, prec) = (self.m, self.n, self.prec);
        let mut sx = Float::with_val(prec, Rational::from(t * n as u32) / m as u32);
        sx.exp_mut();
        let mut sy = Float::with_val(prec, -t.clone());
        sy.exp_mut();
        for col in self.work.iter_mut() {
            for (i, x) in col.iter_mut().enumerate() {
                if i < m {
                    *x *= &sx;
                } else {
                    *x *= &sy;
                }
            }
        }
    }

    /// LLL-reduces the working basis in `f64` and applies the integer change of
    /// basis to the transform (and to the floats, or via the exact frame).
    fn reduce(&mut self) {
        let mut b: Vec<Vec<f64>> =
            self.work.iter().map(|c| c.iter().map(|x| x.to_f64()).collect()).collect();
        let v = lll(&mut b);
        if !is_identity(&v) {
            self.transform = mat_mul_int(&self.transform, &v);
            if self.frame.is_some() {
                self.refresh_from_frame();
            } else {
                let d = self.dim();
                let prec = self.prec;
                let old = std::mem::take(&mut self.work);
                self.work = (0..d)
                    .map(|j| {
                        (0..d)
                            .map(|i| {
                                let mut s = Float::with_val(prec, 0);
                                for (k, col) in old.iter().enumerate() {
                                    if v[j][k] != 0 {
                                        s += Float::with_val(prec, &col[i] * v[j][k]);
                                    }
                                }
                                s
                            })
                            .collect()
                    })
                    .collect();
            }
        }
        let b: Vec<Vec<f64>> =
            self.work.iter().map(|c| c.iter().map(|x| x.to_f64()).collect()).collect();
        self.gs = gram_schmidt(&b);
    }
}

fn check_prec(prec: u32) -> Result<()> {
    if !(16..=1 << 16).contains(&prec) {
        return Err(invalid("precision must lie in [16, 65536] bits"));
    }
    Ok(())
}

fn identity_int(d: usize) -> Vec<Vec<Integer>> {
    (0..d)
        .map(|j| (0..d).map(|i| Integer::from((i == j) as i32)).collect())
        .collect()
}

fn is_identity(v: &[Vec<i64>]) -> bool {
    v.iter().enumerate().all(|(j, c)| c.iter().enumerate().all(|(i, &x)| x == (i == j) as i64))
}

/// Column-major product `a · v` with `v` given as columns of small integers.
fn mat_mul_int(a: &[Vec<Integer>], v: &[Vec<i64>]) -> Vec<Vec<Integer>> {
    let d = a.len();
    v.iter()
        .map(|vc| {
            (0..d)
                .map(|i| {
                    let mut s = Integer::new();
                    for (k, &x) in vc.iter().enumerate() {
                        if x != 0 {
                            s += Integer::from(&a[k][i] * x);
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn gram_schmidt(b: &[Vec<f64>]) -> GramSchmidt {
    let d = b.len();
    let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut mu = vec![vec![0.0; d]; d];
    let mut bstar_sq = vec![0.0; d];
    for i in 0..d {
        let mut v = b[i].clone();
        for j in 0..i {
            mu[i][j] = dot(&b[i], &bstar[j]) / bstar_sq[j];
            for (vk, bk) in v.iter_mut().zip(&bstar[j]) {
                *vk -= mu[i][j] * bk;
            }
        }
        bstar_sq[i] = dot(&v, &v);
        bstar.push(v);
    }
    GramSchmidt { mu, bstar_sq }
}

/// LLL on columns `b` (modified in place). Returns the unimodular change of
/// basis as columns: `new_j = Σ_k v[j][k] old_k`.
pub(crate) fn lll(b: &mut [Vec<f64>]) -> Vec<Vec<i64>> {
    let d = b.len();
    let mut v: Vec<Vec<i64>> = (0..d).map(|j| (0..d).map(|i| (i == j) as i64).collect()).collect();
    let mut k = 1;
    let mut swaps = 0;
    while k < d && swaps < LLL_MAX_SWAPS {
        for j in (0..k).rev() {
            let gs = gram_schmidt(b);
            let r = gs.mu[k][j].round();
            if r != 0.0 {
                let ri = r as i64;
                let bj = b[j].clone();
                for (x, y) in b[k].iter_mut().zip(&bj) {
                    *x -= r * y;
                }
                let vj = v[j].clone();
                for (x, y) in v[k].iter_mut().zip(&vj) {
                    *x -= ri * y;
                }
            }
        }
        let gs = gram_schmidt(b);
        let mu = gs.mu[k][k - 1];
        if gs.bstar_sq[k] >= (LLL_DELTA - mu * mu) * gs.bstar_sq[k - 1] {
            k += 1;
        } else {
            b.swap(k, k - 1);
            v.swap(k, k - 1);
            swaps += 1;
            k = (k - 1).max(1);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> Rational {
        Rational::from((a, b))
    }

    fn to_f64(cols: &[Vec<Float>]) -> Vec<Vec<f64>> {
        cols.iter().map(|c| c.iter().map(|x| x.to_f64()).collect()).collect()
    }

    #[test]
    fn zero_target_is_identity() {
        let l = LatticeBasis::make_unipotent(&TargetMatrix::zero(1, 1), &ProductNormSpec::sup(1, 1), 128).unwrap();
        assert_eq!(l.determinant(), 1);
        let pts: Vec<Vec<f64>> = to_f64(l.work_columns());
        assert_eq!(pts, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn unit_flow_on_identity() {
        let l = LatticeBasis::make_unipotent(&TargetMatrix::zero(1, 1), &ProductNormSpec::sup(1, 1), 128).unwrap();
        let a = l.apply_flow(&r(1, 1)).unwrap();
        let e = std::f64::consts::E;
        let mut cols = to_f64(a.work_columns());
        cols.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((cols[0][1] - 1.0 / e).abs() < 1e-15 && cols[0][0] == 0.0);
        assert!((cols[1][0] - e).abs() < 1e-15 && cols[1][1] == 0.0);
    }

    #[test]
    fn half_target_rows() {
        let l = LatticeBasis::make_unipotent(&TargetMatrix::scalar(r(1, 2)), &ProductNormSpec::sup(1, 1), 64).unwrap();
        // (1/2, 1) = e_2 column of u(θ); the reduced basis spans the same lattice.
        let c = l.presented_coeffs(&[1, 0]);
        let emb = l.embed(&[1, 0]);
        let x = Float::with_val(64, &c[0]) + Float::with_val(64, &c[1]) / 2u32;
        assert_eq!(x, emb[0]);
        assert_eq!(l.determinant().to_f64().abs(), 1.0);
    }

    #[test]
    fn flow_composes_and_preserves_det() {
        let theta = TargetMatrix::parse("1/3;2/3").unwrap();
        let norms = ProductNormSpec::sup(2, 1);
        let l = LatticeBasis::make_unipotent(&theta, &norms, 128).unwrap();
        let a = l.apply_flow(&r(3, 2)).unwrap().apply_flow(&r(5, 2)).unwrap();
        let b = l.apply_flow(&r(4, 1)).unwrap();
        let tol = Float::with_val(128, Float::i_exp(1, -64));
        for x in [&a, &b] {
            let dev = x.determinant() - 1u32;
            assert!(dev.abs() <= tol);
        }
        // Same lattice: every working vector of one is an integer point of the other.
        assert_eq!(a.time(), b.time());
        let dev = Float::with_val(128, a.determinant() - b.determinant());
        assert!(dev.abs() <= tol);
    }

    #[test]
    fn float_only_flow_matches_exact() {
        let theta = TargetMatrix::parse("5/13").unwrap();
        let norms = ProductNormSpec::sup(1, 1);
        let exact = LatticeBasis::make_unipotent(&theta, &norms, 128).unwrap();
        let cols = exact.work_columns().to_vec();
        let float = LatticeBasis::from_columns(cols, &norms, 128).unwrap();
        let a = exact.apply_flow(&r(2, 1)).unwrap();
        let b = float.apply_flow(&r(2, 1)).unwrap();
        let ga = to_f64(a.work_columns());
        let gb = to_f64(b.work_columns());
        let area = |g: &Vec<Vec<f64>>| (g[0][0] * g[1][1] - g[0][1] * g[1][0]).abs();
        assert!((area(&ga) - area(&gb)).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_unimodular() {
        let cols = vec![vec![2.0, 0.0], vec![0.0, 1.0]];
        assert!(LatticeBasis::from_f64_columns(&cols, &ProductNormSpec::sup(1, 1), 64).is_err());
        let sing = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let c: Vec<Vec<Float>> = sing.iter().map(|c| c.iter().map(|&x| Float::with_val(64, x)).collect()).collect();
        assert!(LatticeBasis::from_columns_unchecked(c, &ProductNormSpec::sup(1, 1), 64).is_err());
    }

    #[test]
    fn lll_reduces_skew_basis() {
        let mut b = vec![vec![1.0, 0.0], vec![1000.0, 1.0]];
        let v = lll(&mut b);
        assert!(b.iter().all(|c| dot(c, c) <= 2.0));
        let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
        assert_eq!(det.abs(), 1);
    }
}
