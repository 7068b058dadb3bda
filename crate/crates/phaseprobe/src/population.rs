//! Closed-form population landscape: the infinite-sample oracle for every
//! empirical quantity.
//!
//! With a unit ground truth,
//!   L̄(w)  = (1/4)(3‖w‖⁴ + 3 − 2‖w‖² − 4(wᵀw*)²)
//!   ∇L̄(w) = (3‖w‖² − 1)w − 2(wᵀw*)w*
//!   ∇²L̄(w) = 6wwᵀ − 2w*w*ᵀ + (3‖w‖² − 1)I

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sub};

/// Dense population Hessians are only materialized up to this dimension;
/// beyond it use the O(d) quadratic form.
pub const DENSE_HESSIAN_CAP: usize = 4096;

pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-8;

pub fn pop_loss(w: &[f64], w_star: &[f64]) -> f64 {
    assert_eq!(w.len(), w_star.len());
    let nw2 = dot(w, w);
    let a = dot(w, w_star);
    0.25 * (3.0 * nw2 * nw2 + 3.0 - 2.0 * nw2 - 4.0 * a * a)
}

pub fn pop_gradient(w: &[f64], w_star: &[f64]) -> Vec<f64> {
    assert_eq!(w.len(), w_star.len());
    let nw2 = dot(w, w);
    let a = dot(w, w_star);
    w.iter()
        .zip(w_star)
        .map(|(wi, si)| (3.0 * nw2 - 1.0) * wi - 2.0 * a * si)
        .collect()
}

/// uᵀ∇²L̄(w)u = 6(wᵀu)² − 2(w*ᵀu)² + (3‖w‖² − 1)‖u‖², O(d).
pub fn pop_hessian_quadratic(w: &[f64], w_star: &[f64], u: &[f64]) -> f64 {
    assert_eq!(w.len(), w_star.len());
    assert_eq!(w.len(), u.len());
    let wu = dot(w, u);
    let su = dot(w_star, u);
    6.0 * wu * wu - 2.0 * su * su + (3.0 * dot(w, w) - 1.0) * dot(u, u)
}

pub fn pop_hessian_dense(w: &[f64], w_star: &[f64]) -> Result<DMatrix<f64>> {
    assert_eq!(w.len(), w_star.len());
    let d = w.len();
    if d > DENSE_HESSIAN_CAP {
        return Err(Error::Capacity(format!(
            "dense population Hessian capped at d = {DENSE_HESSIAN_CAP}, got {d}"
        )));
    }
    let diag = 3.0 * dot(w, w) - 1.0;
    let mut h = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            h[(i, j)] = 6.0 * w[i] * w[j] - 2.0 * w_star[i] * w_star[j];
        }
        h[(i, i)] += diag;
    }
    Ok(h)
}

/// ⟨∇L̄(w), w − w*⟩ / ‖w − w*‖², the population one-point ratio.
pub fn pop_onepoint_ratio(w: &[f64], w_star: &[f64]) -> Result<f64> {
    let delta = sub(w, w_star);
    let rho = dot(&delta, &delta);
    if rho.sqrt() <= 1e-12 {
        return Err(Error::DegeneratePoint(
            "population one-point ratio is undefined at w = w*".into(),
        ));
    }
    let g = pop_gradient(w, w_star);
    Ok(dot(&g, &delta) / rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalPointClass {
    GlobalMax,
    StrictSaddle,
    GlobalMin,
    NotCritical,
}

/// Classifies w against the exact critical-point list of the population
/// landscape: the origin (global max), ±w* (global minima), and the sphere
/// ‖w‖² = 1/3 orthogonal to w* (strict saddles).
pub fn classify_critical_point(w: &[f64], w_star: &[f64], tol: f64) -> CriticalPointClass {
    assert!(tol > 0.0);
    assert_eq!(w.len(), w_star.len());
    if norm(w) <= tol {
        return CriticalPointClass::GlobalMax;
    }
    let dist_plus = norm(&sub(w, w_star));
    let dist_minus = {
        let neg: Vec<f64> = w_star.iter().map(|x| -x).collect();
        norm(&sub(w, &neg))
    };
    if dist_plus.min(dist_minus) <= tol {
        return CriticalPointClass::GlobalMin;
    }
    if (dot(w, w) - 1.0 / 3.0).abs() <= tol && dot(w, w_star).abs() <= tol {
        return CriticalPointClass::StrictSaddle;
    }
    CriticalPointClass::NotCritical
}
