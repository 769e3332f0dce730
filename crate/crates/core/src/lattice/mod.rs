//! Unimodular lattices `a_t u(θ) Z^{m+n}` and the counting function `f`.
//!
//! `u(θ) = [[I_m, θ], [0, I_n]]` and `a_t = diag(e^{nt/m} I_m, e^{-t} I_n)`.
//! A point `v = (x, y)` has `π₁ v = x ∈ R^m`, `π₂ v = y ∈ R^n`. Comparisons
//! closer than the guard band `τ = 2^{-P/2}` are treated as undecided.

mod basis;
mod counting;
mod enumerate;
mod feval;

use rug::{Float, Integer};

pub use basis::{ExactFrame, LatticeBasis, DEFAULT_PRECISION};
pub use counting::{
    big_phi_count, perturbation_check, phi_count, random_perturbation, PerturbationReport,
};
pub use enumerate::{points_in_box, points_in_box_with_budget, DEFAULT_BUDGET};
pub use feval::{f_eval, f_eval_with, FEvalResult, FValue, GuardPolicy};

pub(crate) use enumerate::float_norm;

/// The box `{‖x‖ <= r1, ‖y‖ <= r2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxSpec {
    pub r1: f64,
    pub r2: f64,
}

#[derive(Clone, Debug)]
pub struct LatticePoint {
    /// Coefficients in the presented basis; `(p, q)` for a flowed `u(θ)` lattice.
    pub coeffs: Vec<Integer>,
    pub embedding: Vec<Float>,
    pub primitive: bool,
}

/// `2^{-P/2}`
pub fn guard_band(prec: u32) -> Float {
    Float::with_val(prec, Float::i_exp(1, -((prec / 2) as i32)))
}

/// Result of a comparison subject to the guard band.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Tri {
    Yes,
    No,
    Unsure,
}

impl Tri {
    pub fn and(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::No, _) | (_, Tri::No) => Tri::No,
            (Tri::Unsure, _) | (_, Tri::Unsure) => Tri::Unsure,
            _ => Tri::Yes,
        }
    }

    pub fn or(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::Yes, _) | (_, Tri::Yes) => Tri::Yes,
            (Tri::Unsure, _) | (_, Tri::Unsure) => Tri::Unsure,
            _ => Tri::No,
        }
    }

    pub fn not(self) -> Tri {
        match self {
            Tri::Yes => Tri::No,
            Tri::No => Tri::Yes,
            Tri::Unsure => Tri::Unsure,
        }
    }

    pub fn from_bool(b: bool) -> Tri {
        if b {
            Tri::Yes
        } else {
            Tri::No
        }
    }
}

/// Guarded comparisons that track the smallest decided slack.
pub(crate) struct Comparator {
    tau: Float,
    pub margin: f64,
}

impl Comparator {
    pub fn new(prec: u32) -> Self {
        Comparator { tau: guard_band(prec), margin: f64::INFINITY }
    }

    /// `a <= b`
    pub fn le(&mut self, a: &Float, b: &Float) -> Tri {
        let diff = Float::with_val(a.prec().max(b.prec()), b - a);
        let abs = Float::with_val(diff.prec(), diff.abs_ref());
        if abs <= self.tau {
            return Tri::Unsure;
        }
        let s = abs.to_f64();
        if s < self.margin {
            self.margin = s;
        }
        Tri::from_bool(diff.is_sign_positive())
    }

    /// `a < b`
    pub fn lt(&mut self, a: &Float, b: &Float) -> Tri {
        self.le(b, a).not()
    }
}
