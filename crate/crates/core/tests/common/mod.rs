#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simapprox_core::bestapprox::{Provenance, TargetMatrix};
use simapprox_core::norms::NormKind;
use simapprox_core::Integer;

/// A dyadic target with its numerators kept as plain integers.
#[derive(Clone, Debug)]
pub struct Dyadic {
    pub m: usize,
    pub n: usize,
    pub bits: u32,
    /// Row-major numerators over `2^bits`.
    pub a: Vec<i128>,
}

impl Dyadic {
    pub fn random(rng: &mut impl Rng, m: usize, n: usize, bits: u32) -> Self {
        let a = (0..m * n).map(|_| rng.random_range(0..(1i128 << bits))).collect();
        Dyadic { m, n, bits, a }
    }

    pub fn target(&self) -> TargetMatrix {
        let ks = self.a.iter().map(|&k| Integer::from(k)).collect();
        TargetMatrix::dyadic(self.m, self.n, ks, self.bits, Provenance::User).unwrap()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn norm(kind: NormKind, v: &[i128]) -> i128 {
    match kind {
        NormKind::Sup => v.iter().map(|x| x.abs()).max().unwrap_or(0),
        NormKind::Euclidean => v.iter().map(|x| x * x).sum(),
    }
}

/// Signed best approximations with `‖q‖ <= bound` (unit scales), straight
/// from the definition on integer residuals `2^bits (p + θq)`.
pub fn brute_force(th: &Dyadic, bound: i64, kind_m: NormKind, kind_n: NormKind) -> BTreeSet<(Vec<i128>, Vec<i64>)> {
    let d = 1i128 << th.bits;
    let b = bound as i128;
    let qbound = match kind_n {
        NormKind::Sup => b,
        NormKind::Euclidean => b * b,
    };
    let mut qs: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..th.n {
        qs = qs
            .into_iter()
            .flat_map(|q| (-bound..=bound).map(move |x| [q.clone(), vec![x]].concat()))
            .collect();
    }
    // (q, ‖q‖, min error, minimisers)
    let mut rows: Vec<(Vec<i64>, i128, i128, Vec<Vec<i128>>)> = Vec::new();
    for q in qs {
        let qi: Vec<i128> = q.iter().map(|&x| x as i128).collect();
        if qi.iter().all(|&x| x == 0) || norm(kind_n, &qi) > qbound {
            continue;
        }
        let s: Vec<i128> = (0..th.m).map(|i| (0..th.n).map(|j| th.a[i * th.n + j] * qi[j]).sum()).collect();
        let lo: Vec<i128> = s.iter().map(|&si| (-si).div_euclid(d)).collect();
        let mut best = i128::MAX;
        let mut arg: Vec<Vec<i128>> = Vec::new();
        for mask in 0..(1u32 << th.m) {
            let p: Vec<i128> = (0..th.m).map(|i| lo[i] + ((mask >> i) & 1) as i128).collect();
            let r: Vec<i128> = (0..th.m).map(|i| p[i] * d + s[i]).collect();
            let e = norm(kind_m, &r);
            if e < best {
                best = e;
                arg = vec![p];
            } else if e == best {
                arg.push(p);
            }
        }
        rows.push((q, norm(kind_n, &qi), best, arg));
    }
    let mut out = BTreeSet::new();
    for (q, qn, e, arg) in &rows {
        if arg.len() != 1 {
            continue;
        }
        let neg: Vec<i64> = q.iter().map(|x| -x).collect();
        let beaten = rows.iter().any(|(q2, qn2, e2, _)| q2 != q && *q2 != neg && qn2 <= qn && e2 <= e);
        if !beaten {
            out.insert((arg[0].clone(), q.clone()));
        }
    }
    out
}
