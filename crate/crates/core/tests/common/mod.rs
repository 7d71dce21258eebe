//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the library's solver: the oracles work from the
//! problem definitions with first-order methods and plain bisection.

#![allow(dead_code)]

use mimo_wnv::linalg::{frobenius_sq, CMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn cgauss<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) / 2f64.sqrt()
    })
}

/// `U‖HV − G‖² + Z‖V‖²`, evaluated directly.
pub fn objective(h: &CMatrix, g: &CMatrix, z: f64, u: f64, v: &CMatrix) -> f64 {
    u * frobenius_sq(&(h * v - g)) + z * frobenius_sq(v)
}

/// Largest eigenvalue of the Hermitian PSD matrix `a` by power iteration.
fn spectral_radius(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut x = CMatrix::from_element(n, 1, Complex64::new(1.0, 0.0));
    for i in 0..n {
        x[(i, 0)] += Complex64::new(0.01 * i as f64, -0.003 * i as f64);
    }
    let mut est = 0.0;
    for _ in 0..500 {
        let y = a * &x;
        let norm = frobenius_sq(&y).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        est = norm / frobenius_sq(&x).sqrt();
        x = y / Complex64::from(norm);
    }
    est
}

fn project(v: &mut CMatrix, p_max: f64) {
    let p = frobenius_sq(v);
    if p > p_max {
        *v *= Complex64::from((p_max / p).sqrt());
    }
}

/// Minimizes `U‖HV − G‖² + Z‖V‖²` over `‖V‖² ≤ P_max` by accelerated
/// projected gradient with adaptive restart. Returns the final iterate.
pub fn projected_gradient(h: &CMatrix, g: &CMatrix, z: f64, u: f64, p_max: f64, max_iter: usize) -> CMatrix {
    let a = h.adjoint() * h;
    let b = h.adjoint() * g;
    // gradient of the objective is 2(U·A·V − U·b + Z·V)
    let lipschitz = 2.0 * (u * spectral_radius(&a) * 1.01 + z);
    let step = Complex64::from(1.0 / lipschitz);
    let grad = |v: &CMatrix| ((&a * v - &b) * Complex64::from(u) + v * Complex64::from(z)) * Complex64::from(2.0);

    let mut x = CMatrix::zeros(h.ncols(), g.ncols());
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..max_iter {
        let mut next = &y - grad(&y) * step;
        project(&mut next, p_max);
        let moved = &next - &x;
        let restart = (&y - &next).dotc(&moved).re > 0.0;
        let change = frobenius_sq(&moved).sqrt();
        if restart {
            t = 1.0;
            y = next.clone();
        } else {
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            y = &next + moved * Complex64::from((t - 1.0) / t_next);
            t = t_next;
        }
        x = next;
        if change <= 1e-15 * frobenius_sq(&x).sqrt().max(1e-300) {
            break;
        }
    }
    x
}

/// Optimal stationary policy on a finite channel distribution: minimizes
/// `Σ_s p_s ‖H_s V_s − D_s‖²` subject to `Σ_s p_s ‖V_s‖² ≤ P̄` and
/// `‖V_s‖² ≤ P_max`. Per-state problems are convex, so randomizing within a
/// state never helps and a deterministic choice per state is optimal; the
/// average-power constraint is handled by bisection on its multiplier.
pub struct StationaryOptimum {
    pub value: f64,
    pub multiplier: f64,
    pub average_power: f64,
}

pub fn stationary_optimum(
    states: &[(f64, CMatrix, CMatrix)],
    p_bar: f64,
    p_max: f64,
) -> StationaryOptimum {
    let solve = |mu: f64| {
        let mut value = 0.0;
        let mut power = 0.0;
        for (p, h, d) in states {
            let v = projected_gradient(h, d, mu, 1.0, p_max, 200_000);
            value += p * frobenius_sq(&(h * &v - d));
            power += p * frobenius_sq(&v);
        }
        (value, power)
    };
    let (value, power) = solve(0.0);
    if power <= p_bar {
        return StationaryOptimum {
            value,
            multiplier: 0.0,
            average_power: power,
        };
    }
    let mut hi = 1.0;
    while solve(hi).1 > p_bar {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if solve(mid).1 > p_bar {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (value, power) = solve(hi);
    StationaryOptimum {
        value,
        multiplier: hi,
        average_power: power,
    }
}
