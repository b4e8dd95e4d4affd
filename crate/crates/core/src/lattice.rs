//! Bounded closest-point search over Gaussian-integer offsets.
//!
//! Minimizes `(u + tau l)^H Q (u + tau l)` over `l` whose real and imaginary
//! parts lie in `[-B, B]`, with `Q` Hermitian positive semidefinite. The
//! complex problem is rewritten over `2K` interleaved real coordinates
//! `(re l_1, im l_1, re l_2, ...)`, `Q` is factored as `R^T R` and the
//! coordinates are fixed from last to first, visiting candidates at each
//! level in order of increasing cost and abandoning a branch as soon as its
//! partial cost exceeds the best complete cost found so far.
//!
//! Equal costs are resolved by comparing the interleaved coordinates
//! lexicographically under the integer order `0, -1, 1, -2, 2, ...`, so
//! that the all-zero offset wins every tie it takes part in. Branches whose
//! partial cost equals the incumbent are still explored for that reason.

use std::cmp::Ordering;

use nalgebra::{Cholesky, DMatrix};

use crate::perturbation::GaussInt;
use crate::{CMatrix, CVector, C64};

/// `z^H Q z`, real part.
pub fn quadratic_form(q: &CMatrix, z: &CVector) -> f64 {
    z.dotc(&(q * z)).re
}

fn rank(a: i32) -> u32 {
    match a.cmp(&0) {
        Ordering::Greater => 2 * a as u32,
        Ordering::Less => 2 * a.unsigned_abs() - 1,
        Ordering::Equal => 0,
    }
}

/// Tie-break order on offset vectors.
pub fn lattice_order(a: &[GaussInt], b: &[GaussInt]) -> Ordering {
    let key = |v: &[GaussInt]| -> Vec<u32> {
        v.iter().flat_map(|z| [rank(z.re), rank(z.im)]).collect()
    };
    key(a).cmp(&key(b))
}

fn interleaved_order(a: &[i32], b: &[i32]) -> Ordering {
    a.iter().map(|&x| rank(x)).cmp(b.iter().map(|&x| rank(x)))
}

fn to_gauss(a: &[i32]) -> Vec<GaussInt> {
    a.chunks(2).map(|c| GaussInt::new(c[0], c[1])).collect()
}

/// Minimizer of `(u + tau l)^H q (u + tau l)` over the window.
pub(crate) fn closest_point(q: &CMatrix, u: &CVector, tau: f64, radius: u32) -> Vec<GaussInt> {
    let k = u.len();
    if radius == 0 || k == 0 {
        return vec![GaussInt::new(0, 0); k];
    }
    let n = 2 * k;
    let mut qr = DMatrix::<f64>::zeros(n, n);
    for i in 0..k {
        for j in 0..k {
            let c = q[(i, j)];
            qr[(2 * i, 2 * j)] = c.re;
            qr[(2 * i, 2 * j + 1)] = -c.im;
            qr[(2 * i + 1, 2 * j)] = c.im;
            qr[(2 * i + 1, 2 * j + 1)] = c.re;
        }
    }
    let Some(chol) = Cholesky::new(qr) else {
        // Singular form: no useful pruning geometry.
        return exhaustive_search(k, radius, |l| {
            quadratic_form(q, &offset(u, tau, l))
        })
        .0;
    };
    let r = chol.l().transpose();
    let center: Vec<f64> = u.iter().flat_map(|z| [z.re, z.im]).collect();
    let mut search = Search {
        r: &r,
        center: &center,
        tau,
        radius: radius as i32,
        z: vec![0.0; n],
        a: vec![0; n],
        best_cost: f64::INFINITY,
        best: vec![0; n],
    };
    search.descend(n, 0.0);
    to_gauss(&search.best)
}

fn offset(u: &CVector, tau: f64, l: &[GaussInt]) -> CVector {
    CVector::from_fn(u.len(), |i, _| {
        u[i] + C64::new(f64::from(l[i].re), f64::from(l[i].im)) * tau
    })
}

/// Visits every offset in the window and keeps the cheapest under the same
/// tie-break as the pruned search. Returns the offset and its cost.
pub fn exhaustive_search<F>(k: usize, radius: u32, mut cost: F) -> (Vec<GaussInt>, f64)
where
    F: FnMut(&[GaussInt]) -> f64,
{
    let b = radius as i32;
    let n = 2 * k;
    let mut digits = vec![-b; n];
    let mut best = vec![GaussInt::new(0, 0); k];
    let mut best_cost = f64::INFINITY;
    loop {
        let l = to_gauss(&digits);
        let c = cost(&l);
        if c < best_cost || (c == best_cost && lattice_order(&l, &best).is_lt()) {
            best_cost = c;
            best = l;
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == n {
                return (best, best_cost);
            }
            if digits[i] < b {
                digits[i] += 1;
                break;
            }
            digits[i] = -b;
            i += 1;
        }
    }
}

struct Search<'a> {
    r: &'a DMatrix<f64>,
    center: &'a [f64],
    tau: f64,
    radius: i32,
    z: Vec<f64>,
    a: Vec<i32>,
    best_cost: f64,
    best: Vec<i32>,
}

impl Search<'_> {
    fn descend(&mut self, level: usize, partial: f64) {
        let i = level - 1;
        let n = self.z.len();
        let s: f64 = (i + 1..n).map(|j| self.r[(i, j)] * self.z[j]).sum();
        let rii = self.r[(i, i)];
        let target = (-s / rii - self.center[i]) / self.tau;
        let mut candidates: Vec<i32> = (-self.radius..=self.radius).collect();
        candidates.sort_by(|x, y| {
            (f64::from(*x) - target)
                .abs()
                .total_cmp(&(f64::from(*y) - target).abs())
        });
        for a in candidates {
            let zi = self.center[i] + self.tau * f64::from(a);
            let t = rii * zi + s;
            let cost = partial + t * t;
            if cost > self.best_cost {
                break;
            }
            self.z[i] = zi;
            self.a[i] = a;
            if i == 0 {
                if cost < self.best_cost
                    || (cost == self.best_cost && interleaved_order(&self.a, &self.best).is_lt())
                {
                    self.best_cost = cost;
                    self.best.copy_from_slice(&self.a);
                }
            } else {
                self.descend(i, cost);
            }
        }
    }
}
