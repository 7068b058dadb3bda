//! Extremal eigenvalue estimation for the empirical Hessian: an exact dense
//! route for moderate d and a matrix-free Lanczos route built on the
//! Hessian-vector product.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, normalize};
use crate::model::Instance;
use crate::rng::{rng_from_seed, unit_sphere_vec};

/// Dense solves materialize a d×d matrix; refuse beyond this.
pub const DENSE_EIGEN_CAP: usize = 2048;

/// Full reorthogonalization keeps at most this many Lanczos vectors.
pub const LANCZOS_MAX_BASIS: usize = 400;

pub const DEFAULT_EIGEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SpectralEstimate {
    pub lambda_min: f64,
    pub eigenvector: Vec<f64>,
    /// ‖H v − λ v‖ recomputed through the matrix-free product.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Exact smallest eigenvalue of ∇²L(w) via a dense symmetric eigensolve.
pub fn min_eigen_dense(inst: &Instance, w: &[f64]) -> Result<SpectralEstimate> {
    let d = inst.d();
    if d > DENSE_EIGEN_CAP {
        return Err(Error::Capacity(format!(
            "dense eigensolve capped at d = {DENSE_EIGEN_CAP}, got {d}"
        )));
    }
    if w.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: w.len() });
    }
    let n = inst.n() as f64;
    let mut h = DMatrix::<f64>::zeros(d, d);
    for (row, y) in inst.rows().zip(inst.y_sq()) {
        let b = dot(row, w);
        let z = (3.0 * b * b - y) / n;
        for i in 0..d {
            let zi = z * row[i];
            for j in 0..=i {
                h[(i, j)] += zi * row[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            h[(j, i)] = h[(i, j)];
        }
    }
    let eig = h.symmetric_eigen();
    let mut min_idx = 0;
    for k in 1..d {
        if eig.eigenvalues[k] < eig.eigenvalues[min_idx] {
            min_idx = k;
        }
    }
    let lambda = eig.eigenvalues[min_idx];
    let v: Vec<f64> = eig.eigenvectors.column(min_idx).iter().copied().collect();
    let residual = hvp_residual(inst, w, &v, lambda)?;
    Ok(SpectralEstimate {
        lambda_min: lambda,
        eigenvector: v,
        residual,
        iterations: 0,
        converged: true,
    })
}

fn hvp_residual(inst: &Instance, w: &[f64], v: &[f64], lambda: f64) -> Result<f64> {
    let hv = inst.hessian_vector_product(w, v)?;
    Ok(norm(&hv.iter().zip(v).map(|(h, x)| h - lambda * x).collect::<Vec<f64>>()))
}

/// Lanczos with full reorthogonalization, using only Hessian-vector
/// products. Deterministic given the seed. Converges when the Ritz residual
/// drops below tol·(1 + |λ|); otherwise returns the best estimate with
/// `converged = false`.
pub fn min_eigen_lanczos(
    inst: &Instance,
    w: &[f64],
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<SpectralEstimate> {
    if max_iters < 10 {
        return Err(Error::InvalidParameter("max_iters must be at least 10".into()));
    }
    if w.len() != inst.d() {
        return Err(Error::DimensionMismatch { expected: inst.d(), got: w.len() });
    }
    let d = inst.d();
    let k_max = max_iters.min(d).min(LANCZOS_MAX_BASIS);

    let mut rng = rng_from_seed(seed);
    let mut basis: Vec<Vec<f64>> = vec![unit_sphere_vec(&mut rng, d)];
    let mut alphas: Vec<f64> = Vec::with_capacity(k_max);
    let mut betas: Vec<f64> = Vec::with_capacity(k_max);

    for k in 0..k_max {
        let v_k = basis[k].clone();
        let mut next = inst.hessian_vector_product(w, &v_k)?;
        if k > 0 {
            let beta_prev = betas[k - 1];
            axpy(-beta_prev, &basis[k - 1], &mut next);
        }
        let alpha = dot(&next, &v_k);
        alphas.push(alpha);
        axpy(-alpha, &v_k, &mut next);
        // full reorthogonalization, two passes
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&next, q);
                axpy(-c, q, &mut next);
            }
        }
        let beta = norm(&next);
        if beta <= 1e-12 * alpha.abs().max(1.0) {
            // invariant subspace: the tridiagonal problem is exact
            break;
        }
        if k + 1 < k_max {
            betas.push(beta);
            for x in next.iter_mut() {
                *x /= beta;
            }
            basis.push(next);
        } else {
            betas.push(beta);
        }

        // periodic convergence check on the projected problem
        if (k + 1) % 25 == 0 || k + 1 == k_max {
            let (theta, s) = smallest_ritz_pair(&alphas, &betas[..alphas.len() - 1]);
            let res_est = betas[alphas.len() - 1].abs() * s.last().copied().unwrap_or(1.0).abs();
            if res_est <= tol * (1.0 + theta.abs()) {
                break;
            }
        }
    }

    let k = alphas.len();
    let (theta, s) = smallest_ritz_pair(&alphas, &betas[..k - 1]);
    let mut v = vec![0.0; d];
    for (coeff, q) in s.iter().zip(basis.iter()) {
        axpy(*coeff, q, &mut v);
    }
    normalize(&mut v);
    let residual = hvp_residual(inst, w, &v, theta)?;
    Ok(SpectralEstimate {
        lambda_min: theta,
        eigenvector: v,
        residual,
        iterations: k,
        converged: residual <= tol * (1.0 + theta.abs()),
    })
}

/// Smallest eigenpair of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta` (k ≤ 400, so a dense solve is fine).
fn smallest_ritz_pair(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut min_idx = 0;
    for i in 1..k {
        if eig.eigenvalues[i] < eig.eigenvalues[min_idx] {
            min_idx = i;
        }
    }
    (
        eig.eigenvalues[min_idx],
        eig.eigenvectors.column(min_idx).iter().copied().collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WStarMode;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rank_one_hessian_has_zero_min_eigenvalue() {
        // Single sample x₁ = 2e₁ in d = 2: H(w*) = (2s²/n)x xᵀ is rank one.
        let inst = Instance::generate(2, 1, 0, WStarMode::CanonicalE1).unwrap();
        let est = min_eigen_dense(&inst, inst.w_star()).unwrap();
        assert_abs_diff_eq!(est.lambda_min, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn dense_cap() {
        let inst = Instance::generate(4, 4, 0, WStarMode::CanonicalE1).unwrap();
        assert!(min_eigen_dense(&inst, &vec![0.0; 5]).is_err());
        assert!(min_eigen_lanczos(&inst, inst.w_star(), 5, 1e-8, 0).is_err());
    }

    #[test]
    fn lanczos_matches_dense() {
        let inst = Instance::generate(64, 160, 11, WStarMode::RandomUnit).unwrap();
        let mut rng = rng_from_seed(12);
        for trial in 0..3 {
            let w: Vec<f64> = inst
                .w_star()
                .iter()
                .zip(unit_sphere_vec(&mut rng, 64))
                .map(|(s, p)| s + 0.3 * p)
                .collect();
            let dense = min_eigen_dense(&inst, &w).unwrap();
            let lanc = min_eigen_lanczos(&inst, &w, 400, 1e-9, 100 + trial).unwrap();
            assert!(
                (dense.lambda_min - lanc.lambda_min).abs() <= 1e-6,
                "trial {trial}: dense {} vs lanczos {}",
                dense.lambda_min,
                lanc.lambda_min
            );
            assert!(lanc.converged);
            assert!(lanc.residual <= 1e-9 * (1.0 + lanc.lambda_min.abs()) + 1e-12);
        }
    }

    #[test]
    fn rayleigh_quotient_upper_bounds_minimum() {
        let inst = Instance::generate(32, 96, 13, WStarMode::RandomUnit).unwrap();
        let w = inst.w_star().to_vec();
        let est = min_eigen_dense(&inst, &w).unwrap();
        let mut rng = rng_from_seed(14);
        for _ in 0..50 {
            let u = unit_sphere_vec(&mut rng, 32);
            let q = inst.hessian_quadratic(&w, &u).unwrap();
            assert!(est.lambda_min <= q + 1e-10);
        }
        // λ reproduced by the quadratic form at the eigenvector
        let q = inst.hessian_quadratic(&w, &est.eigenvector).unwrap();
        assert!((q - est.lambda_min).abs() <= 1e-8 * (1.0 + est.lambda_min.abs()));
    }

    #[test]
    fn lanczos_estimate_near_population_value() {
        // λ_min(∇²L̄(w*)) = 2; a generous finite-n band at n = 64d.
        let inst = Instance::generate(96, 96 * 64, 15, WStarMode::CanonicalE1).unwrap();
        let est = min_eigen_lanczos(&inst, inst.w_star(), 400, 1e-8, 3).unwrap();
        assert!(est.lambda_min > 0.5 && est.lambda_min < 2.8, "{}", est.lambda_min);
    }
}
