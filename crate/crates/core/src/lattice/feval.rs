use std::cmp::Ordering;

use rug::{Float, Rational};
use serde::{Deserialize, Serialize};

use super::basis::LatticeBasis;
use super::{float_norm, points_in_box, BoxSpec, Comparator, LatticePoint, Tri};
use crate::error::Result;
use crate::norms::NormValue;

/// What to do with comparisons inside the guard band.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum GuardPolicy {
    /// Re-decide them exactly when the lattice has an exact frame.
    #[default]
    Exact,
    /// Report them as indeterminate.
    Strict,
}

impl GuardPolicy {
    pub fn parse(s: &str) -> crate::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(GuardPolicy::Exact),
            "strict" => Ok(GuardPolicy::Strict),
            other => Err(crate::error::invalid(format!("unknown guard policy `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            GuardPolicy::Exact => "exact",
            GuardPolicy::Strict => "strict",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FValue {
    Value(u32),
    Indeterminate,
}

impl FValue {
    pub fn conclusive(&self) -> Option<u32> {
        match self {
            FValue::Value(v) => Some(*v),
            FValue::Indeterminate => None,
        }
    }
}

impl std::fmt::Display for FValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FValue::Value(v) => write!(f, "{v}"),
            FValue::Indeterminate => write!(f, "NA"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FEvalResult {
    pub value: FValue,
    pub witnesses: Vec<LatticePoint>,
    /// Smallest slack among the comparisons decided in floating point.
    pub margin: f64,
    /// Comparisons inside the guard band that were settled exactly.
    pub exact_resolutions: u32,
}

/// `f(Λ)`: the number of `v ∈ Λ` with `1 <= ‖π₂ v‖ < e`, `‖π₁ v‖ <= 1` whose
/// box `C_v` holds no primitive point other than `±v`.
pub fn f_eval(l: &LatticeBasis) -> Result<FEvalResult> {
    f_eval_with(l, GuardPolicy::Exact)
}

struct Pt<'a> {
    point: &'a LatticePoint,
    x: Float,
    y: Float,
    exact: Option<(NormValue, NormValue)>,
}

struct Ctx<'a> {
    l: &'a LatticeBasis,
    cmp: Comparator,
    policy: GuardPolicy,
    resolved: u32,
    /// `-n t / m`, `t`, `t + 1` for the threshold checks.
    exps: Option<(Rational, Rational, Rational)>,
}

impl Ctx<'_> {
    fn exact_of<'p>(&self, p: &'p mut Pt) -> Option<&'p (NormValue, NormValue)> {
        if p.exact.is_none() {
            p.exact = self.l.exact_parts(&p.point.coeffs);
        }
        p.exact.as_ref()
    }

    fn can_resolve(&self) -> bool {
        self.policy == GuardPolicy::Exact && self.l.frame().is_some()
    }

    /// Resolves an undecided threshold check via `cmp_exp`.
    fn settle(&mut self, tri: Tri, p: &mut Pt, which: Threshold) -> Tri {
        if tri != Tri::Unsure || !self.can_resolve() {
            return tri;
        }
        let Some((a_x, a_lo, a_hi)) = self.exps.clone() else { return tri };
        let Some((ex, ey)) = self.exact_of(p).cloned() else { return tri };
        let out = match which {
            Threshold::XAtMostOne => ex.cmp_exp(&a_x).map(|o| o != Ordering::Greater),
            Threshold::YAtLeastOne => ey.cmp_exp(&a_lo).map(|o| o != Ordering::Less),
            Threshold::YBelowE => ey.cmp_exp(&a_hi).map(|o| o == Ordering::Less),
        };
        match out {
            Some(b) => {
                self.resolved += 1;
                Tri::from_bool(b)
            }
            None => Tri::Unsure,
        }
    }

    /// `w ∈ C_v`, i.e. `‖x_w‖ <= ‖x_v‖` and `‖y_w‖ <= ‖y_v‖`.
    fn in_box(&mut self, w: &mut Pt, v: &mut Pt) -> Tri {
        let mut cx = self.cmp.le(&w.x, &v.x);
        let mut cy = self.cmp.le(&w.y, &v.y);
        if (cx == Tri::Unsure || cy == Tri::Unsure) && self.can_resolve() {
            let ew = self.exact_of(w).cloned();
            let ev = self.exact_of(v).cloned();
            if let (Some((wx, wy)), Some((vx, vy))) = (ew, ev) {
                if cx == Tri::Unsure {
                    cx = Tri::from_bool(wx <= vx);
                    self.resolved += 1;
                }
                if cy == Tri::Unsure {
                    cy = Tri::from_bool(wy <= vy);
                    self.resolved += 1;
                }
            }
        }
        cx.and(cy)
    }
}

#[derive(Clone, Copy)]
enum Threshold {
    XAtMostOne,
    YAtLeastOne,
    YBelowE,
}

pub fn f_eval_with(l: &LatticeBasis, policy: GuardPolicy) -> Result<FEvalResult> {
    let prec = l.prec;
    let e = crate::certified::euler(prec);
    let points = points_in_box(l, &BoxSpec { r1: 1.0, r2: e.to_f64() }, true)?;
    let m = l.m;
    let mut pts: Vec<Pt> = points
        .iter()
        .map(|p| Pt {
            point: p,
            x: float_norm(&p.embedding[..m], &l.norms.norm_m, prec),
            y: float_norm(&p.embedding[m..], &l.norms.norm_n, prec),
            exact: None,
        })
        .collect();
    let exps = l.frame().map(|f| {
        let a_x = -Rational::from(&f.t * l.n as u32) / l.m as u32;
        (a_x, f.t.clone(), Rational::from(&f.t + 1u32))
    });
    let mut ctx = Ctx { l, cmp: Comparator::new(prec), policy, resolved: 0, exps };
    let one = Float::with_val(prec, 1);

    let mut count = 0u32;
    let mut undecided = false;
    let mut witnesses = Vec::new();
    for i in 0..pts.len() {
        let (head, rest) = pts.split_at_mut(i);
        let (v, tail) = rest.split_first_mut().unwrap();
        let c1 = ctx.cmp.le(&v.x, &one);
        let c1 = ctx.settle(c1, v, Threshold::XAtMostOne);
        let c2 = ctx.cmp.le(&one, &v.y);
        let c2 = ctx.settle(c2, v, Threshold::YAtLeastOne);
        let c3 = ctx.cmp.lt(&v.y, &e);
        let c3 = ctx.settle(c3, v, Threshold::YBelowE);
        let mut status = c1.and(c2).and(c3);
        if status == Tri::No {
            continue;
        }
        let neg: Vec<rug::Integer> = v.point.coeffs.iter().map(|c| rug::Integer::from(-c)).collect();
        for w in head.iter_mut().chain(tail.iter_mut()) {
            if w.point.coeffs == neg {
                continue;
            }
            let inside = ctx.in_box(w, v);
            status = status.and(inside.not());
            if status == Tri::No {
                break;
            }
        }
        match status {
            Tri::Yes => {
                count += 1;
                witnesses.push(v.point.clone());
            }
            Tri::Unsure => undecided = true,
            Tri::No => {}
        }
    }
    Ok(FEvalResult {
        value: if undecided { FValue::Indeterminate } else { FValue::Value(count) },
        witnesses,
        margin: ctx.cmp.margin,
        exact_resolutions: ctx.resolved,
    })
}
