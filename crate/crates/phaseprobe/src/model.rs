//! Problem instances and the empirical landscape quantities.
//!
//! An [`Instance`] holds n Gaussian sample rows, a unit ground truth `w*`,
//! and squared labels `y_sq[i] = (w*ᵀxᵢ)²`. Every evaluation kernel streams
//! the sample rows once, costs O(nd), and never materializes a d×d matrix.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sub, NeumaierSum};
use crate::rng::{gaussian_vec, rng_from_seed, unit_sphere_vec};

/// How the ground truth is chosen at generation time. The landscape is
/// rotation invariant, so the canonical basis vector is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WStarMode {
    CanonicalE1,
    RandomUnit,
}

/// Threshold below which an orthogonal component is treated as zero.
pub const BETA_DEGENERATE: f64 = 1e-12;

/// A generated phase-retrieval problem. Immutable after construction and
/// safe to share across threads; all evaluation methods are read-only.
#[derive(Debug, Clone)]
pub struct Instance {
    d: usize,
    n: usize,
    /// Row-major n×d sample matrix; row i is xᵢ.
    samples: Vec<f64>,
    w_star: Vec<f64>,
    /// Signed projections w*ᵀxᵢ, cached for the adversarial constructions.
    proj_star: Vec<f64>,
    y_sq: Vec<f64>,
}

impl Instance {
    /// Draws samples i.i.d. standard normal from a deterministic seeded
    /// stream (samples first, then w* if random). Same (d, n, seed, mode)
    /// always yields bit-identical instances.
    pub fn generate(d: usize, n: usize, seed: u64, mode: WStarMode) -> Result<Instance> {
        if d == 0 {
            return Err(Error::InvalidParameter("d must be >= 1".into()));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        let mut rng = rng_from_seed(seed);
        let samples = gaussian_vec(&mut rng, n * d);
        let w_star = match mode {
            WStarMode::CanonicalE1 => {
                let mut w = vec![0.0; d];
                w[0] = 1.0;
                w
            }
            WStarMode::RandomUnit => unit_sphere_vec(&mut rng, d),
        };
        let proj_star: Vec<f64> = samples.chunks_exact(d).map(|row| dot(row, &w_star)).collect();
        let y_sq: Vec<f64> = proj_star.iter().map(|s| s * s).collect();
        Ok(Instance { d, n, samples, w_star, proj_star, y_sq })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w_star(&self) -> &[f64] {
        &self.w_star
    }

    pub fn y_sq(&self) -> &[f64] {
        &self.y_sq
    }

    /// Signed labels w*ᵀxᵢ.
    pub fn proj_star(&self) -> &[f64] {
        &self.proj_star
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.samples[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.d)
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: v.len() });
        }
        Ok(())
    }

    /// L(w) = (1/4n) Σᵢ ((wᵀxᵢ)² − y_sq[i])²
    pub fn loss(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        let mut acc = NeumaierSum::new();
        for (row, y) in self.rows().zip(&self.y_sq) {
            let b = dot(row, w);
            let r = b * b - y;
            acc.add(r * r);
        }
        Ok(acc.value() / (4.0 * self.n as f64))
    }

    /// ∇L(w) = (1/n) Σᵢ ((wᵀxᵢ)² − y_sq[i]) (wᵀxᵢ) xᵢ
    pub fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        let mut g = vec![0.0; self.d];
        for (row, y) in self.rows().zip(&self.y_sq) {
            let b = dot(row, w);
            let c = (b * b - y) * b;
            for (gj, xj) in g.iter_mut().zip(row) {
                *gj += c * xj;
            }
        }
        let inv_n = 1.0 / self.n as f64;
        for gj in g.iter_mut() {
            *gj *= inv_n;
        }
        Ok(g)
    }

    /// ∇²L(w)·v = (1/n) Σᵢ (3(wᵀxᵢ)² − y_sq[i]) (xᵢᵀv) xᵢ, matrix-free.
    pub fn hessian_vector_product(&self, w: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        self.check_dim(v)?;
        let mut out = vec![0.0; self.d];
        for (row, y) in self.rows().zip(&self.y_sq) {
            let b = dot(row, w);
            let c = (3.0 * b * b - y) * dot(row, v);
            for (oj, xj) in out.iter_mut().zip(row) {
                *oj += c * xj;
            }
        }
        let inv_n = 1.0 / self.n as f64;
        for oj in out.iter_mut() {
            *oj *= inv_n;
        }
        Ok(out)
    }

    /// uᵀ∇²L(w)u = (1/n) Σᵢ (uᵀxᵢ)² (3(wᵀxᵢ)² − y_sq[i])
    pub fn hessian_quadratic(&self, w: &[f64], u: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        self.check_dim(u)?;
        let mut acc = NeumaierSum::new();
        for (row, y) in self.rows().zip(&self.y_sq) {
            let a = dot(row, u);
            let b = dot(row, w);
            acc.add(a * a * (3.0 * b * b - y));
        }
        Ok(acc.value() / self.n as f64)
    }

    /// ⟨∇L(w), w − w*⟩ / ‖w − w*‖².
    ///
    /// In debug builds the value is cross-checked against the quartic
    /// expansion of the same quantity; release sweeps skip the check.
    pub fn onepoint_ratio(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        let delta = sub(w, &self.w_star);
        let rho = dot(&delta, &delta);
        if rho.sqrt() <= 1e-12 {
            return Err(Error::DegeneratePoint(
                "one-point ratio is undefined at w = w*".into(),
            ));
        }
        let g = self.gradient(w)?;
        let ratio = dot(&g, &delta) / rho;
        #[cfg(debug_assertions)]
        {
            let expanded = self.onepoint_ratio_expanded(w)?;
            debug_assert!(
                crate::linalg::rel_err(ratio, expanded) < 1e-9,
                "one-point ratio forms disagree: direct {ratio} vs expanded {expanded}"
            );
        }
        Ok(ratio)
    }

    /// The same ratio through the quartic expansion
    /// (1/n) Σᵢ (δᵀxᵢ)² (δᵀxᵢ + 2w*ᵀxᵢ)(δᵀxᵢ + w*ᵀxᵢ) / ‖δ‖².
    pub fn onepoint_ratio_expanded(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        let delta = sub(w, &self.w_star);
        let rho = dot(&delta, &delta);
        if rho.sqrt() <= 1e-12 {
            return Err(Error::DegeneratePoint(
                "one-point ratio is undefined at w = w*".into(),
            ));
        }
        let mut acc = NeumaierSum::new();
        for (row, s) in self.rows().zip(&self.proj_star) {
            let e = dot(row, &delta);
            acc.add(e * e * (e + 2.0 * s) * (e + s));
        }
        Ok(acc.value() / (self.n as f64 * rho))
    }

    /// Smallest curvature weight zᵢ = 3(wᵀxᵢ)² − y_sq[i] with its index
    /// (lowest index on exact ties).
    pub fn min_curvature_weight(&self, w: &[f64]) -> Result<(usize, f64)> {
        self.check_dim(w)?;
        let mut best = (0usize, f64::INFINITY);
        for (i, (row, y)) in self.rows().zip(&self.y_sq).enumerate() {
            let b = dot(row, w);
            let z = 3.0 * b * b - y;
            if z < best.1 {
                best = (i, z);
            }
        }
        Ok(best)
    }

    /// Index of the largest signed label w*ᵀxᵢ (lowest index on ties).
    pub fn argmax_proj_star(&self) -> usize {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, &s) in self.proj_star.iter().enumerate() {
            if s > best.1 {
                best = (i, s);
            }
        }
        best.0
    }
}

/// A parameter vector decomposed against the ground truth:
/// w = α w* + β w⊥ with α = ⟨w, w*⟩ and β = ‖(I − w*w*ᵀ)w‖.
#[derive(Debug, Clone)]
pub struct LandscapePoint {
    pub w: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// Unit orthogonal direction; absent when β ≤ 1e-12.
    pub w_perp: Option<Vec<f64>>,
    pub delta: Vec<f64>,
    /// |α − 1| ≤ 1/3 and 0 < β ≤ 1.
    pub in_local_region: bool,
}

/// Total function: every w decomposes. Callers must pass a unit w*.
pub fn decompose(w: &[f64], w_star: &[f64]) -> LandscapePoint {
    assert_eq!(w.len(), w_star.len(), "decompose: dimension mismatch");
    debug_assert!((norm(w_star) - 1.0).abs() <= 1e-10, "w* must be unit");
    let alpha = dot(w, w_star);
    let mut perp: Vec<f64> = w.iter().zip(w_star).map(|(wi, si)| wi - alpha * si).collect();
    let beta = norm(&perp);
    let w_perp = if beta > BETA_DEGENERATE {
        for p in perp.iter_mut() {
            *p /= beta;
        }
        Some(perp)
    } else {
        None
    };
    let delta = sub(w, w_star);
    let in_local_region = (alpha - 1.0).abs() <= 1.0 / 3.0 && beta > 0.0 && beta <= 1.0;
    LandscapePoint { w: w.to_vec(), alpha, beta, w_perp, delta, in_local_region }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rel_err;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn small_instance() -> Instance {
        Instance::generate(20, 50, 42, WStarMode::RandomUnit).unwrap()
    }

    #[test]
    fn rejects_empty_dimensions() {
        assert!(Instance::generate(0, 5, 1, WStarMode::CanonicalE1).is_err());
        assert!(Instance::generate(3, 0, 1, WStarMode::CanonicalE1).is_err());
    }

    #[test]
    fn generation_is_bit_deterministic() {
        let a = Instance::generate(3, 5, 7, WStarMode::RandomUnit).unwrap();
        let b = Instance::generate(3, 5, 7, WStarMode::RandomUnit).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.w_star, b.w_star);
        assert_eq!(a.y_sq, b.y_sq);
    }

    #[test]
    fn w_star_is_unit_and_labels_consistent() {
        for seed in 0..5 {
            let inst = Instance::generate(12, 30, seed, WStarMode::RandomUnit).unwrap();
            assert!((norm(inst.w_star()) - 1.0).abs() <= 1e-12);
            for i in 0..inst.n() {
                let s = dot(inst.row(i), inst.w_star());
                assert!(rel_err(inst.y_sq()[i], s * s) <= 1e-12);
            }
        }
    }

    #[test]
    fn coordinate_means_obey_clt_bound() {
        let inst = Instance::generate(2, 100_000, 1, WStarMode::CanonicalE1).unwrap();
        let n = inst.n() as f64;
        for j in 0..2 {
            let mean: f64 = inst.rows().map(|r| r[j]).sum::<f64>() / n;
            assert!(mean.abs() <= 3.0 / n.sqrt(), "coordinate {j} mean {mean}");
        }
    }

    #[test]
    fn loss_at_ground_truth_is_zero() {
        let inst = small_instance();
        assert!(inst.loss(inst.w_star()).unwrap().abs() <= 1e-20);
        let neg: Vec<f64> = inst.w_star().iter().map(|x| -x).collect();
        assert!(inst.loss(&neg).unwrap().abs() <= 1e-20);
    }

    #[test]
    fn loss_matches_hand_computed_one_sample() {
        // d=1, n=1, x₁=[2], w*=[1] ⇒ y² = 4; at w = 0 the loss is (1/4)(0−4)² = 4.
        let inst = Instance {
            d: 1,
            n: 1,
            samples: vec![2.0],
            w_star: vec![1.0],
            proj_star: vec![2.0],
            y_sq: vec![4.0],
        };
        assert_abs_diff_eq!(inst.loss(&[0.0]).unwrap(), 4.0, epsilon = 1e-15);
    }

    #[test]
    fn gradient_vanishes_at_minima_and_origin() {
        let inst = small_instance();
        let g = inst.gradient(inst.w_star()).unwrap();
        assert!(norm(&g) <= 1e-12);
        let g0 = inst.gradient(&vec![0.0; inst.d()]).unwrap();
        assert_eq!(norm(&g0), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let inst = small_instance();
        let mut rng = rng_from_seed(9);
        for _ in 0..3 {
            let w = gaussian_vec(&mut rng, inst.d());
            let g = inst.gradient(&w).unwrap();
            let fd = finite_difference_gradient(&inst, &w);
            let num = norm(&sub(&g, &fd));
            let den = norm(&g).max(norm(&fd));
            assert!(num / den <= 1e-6, "fd mismatch {}", num / den);
        }
    }

    // Central-difference oracle, step 1e-5·(1+‖w‖); independent of the
    // analytic gradient path.
    pub(crate) fn finite_difference_gradient(inst: &Instance, w: &[f64]) -> Vec<f64> {
        let h = 1e-5 * (1.0 + norm(w));
        let mut out = vec![0.0; w.len()];
        let mut wp = w.to_vec();
        for j in 0..w.len() {
            wp[j] = w[j] + h;
            let up = inst.loss(&wp).unwrap();
            wp[j] = w[j] - h;
            let dn = inst.loss(&wp).unwrap();
            wp[j] = w[j];
            out[j] = (up - dn) / (2.0 * h);
        }
        out
    }

    #[test]
    fn hvp_is_linear_and_symmetric() {
        let inst = small_instance();
        let mut rng = rng_from_seed(11);
        let w = gaussian_vec(&mut rng, inst.d());
        let zero = inst.hessian_vector_product(&w, &vec![0.0; inst.d()]).unwrap();
        assert_eq!(norm(&zero), 0.0);
        for _ in 0..5 {
            let u = gaussian_vec(&mut rng, inst.d());
            let v = gaussian_vec(&mut rng, inst.d());
            let hu = inst.hessian_vector_product(&w, &u).unwrap();
            let hv = inst.hessian_vector_product(&w, &v).unwrap();
            assert!(rel_err(dot(&hu, &v), dot(&hv, &u)) <= 1e-10);
        }
    }

    #[test]
    fn quadratic_form_agrees_with_hvp() {
        let inst = small_instance();
        let mut rng = rng_from_seed(13);
        for _ in 0..20 {
            let w = gaussian_vec(&mut rng, inst.d());
            let u = gaussian_vec(&mut rng, inst.d());
            let q = inst.hessian_quadratic(&w, &u).unwrap();
            let hu = inst.hessian_vector_product(&w, &u).unwrap();
            assert!(rel_err(q, dot(&hu, &u)) <= 1e-10);
        }
    }

    #[test]
    fn quadratic_form_at_ground_truth_is_fourth_moment() {
        let inst = small_instance();
        let q = inst.hessian_quadratic(inst.w_star(), inst.w_star()).unwrap();
        let m4: f64 = inst.proj_star().iter().map(|s| s.powi(4)).sum::<f64>()
            * 2.0
            / inst.n() as f64;
        assert!(rel_err(q, m4) <= 1e-12);
        assert!(q >= 0.0);
    }

    #[test]
    fn quadratic_form_semidefinite_on_parallel_slice() {
        // w = α w* with α² ≥ 1/3 keeps every curvature weight nonnegative.
        let inst = small_instance();
        let alpha = 1.0 / 3.0f64.sqrt() + 0.01;
        let w: Vec<f64> = inst.w_star().iter().map(|x| alpha * x).collect();
        let mut rng = rng_from_seed(17);
        for _ in 0..200 {
            let u = gaussian_vec(&mut rng, inst.d());
            assert!(inst.hessian_quadratic(&w, &u).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn onepoint_ratio_forms_agree() {
        let inst = small_instance();
        let mut rng = rng_from_seed(19);
        for _ in 0..20 {
            let w = gaussian_vec(&mut rng, inst.d());
            let direct = inst.onepoint_ratio(&w).unwrap();
            let expanded = inst.onepoint_ratio_expanded(&w).unwrap();
            assert!(rel_err(direct, expanded) <= 1e-10);
        }
    }

    #[test]
    fn onepoint_ratio_rejects_ground_truth() {
        let inst = small_instance();
        assert!(matches!(
            inst.onepoint_ratio(inst.w_star()),
            Err(Error::DegeneratePoint(_))
        ));
    }

    #[test]
    fn onepoint_ratio_cancels_at_mirror_minimum() {
        let inst = small_instance();
        let neg: Vec<f64> = inst.w_star().iter().map(|x| -x).collect();
        assert_eq!(inst.onepoint_ratio(&neg).unwrap(), 0.0);
    }

    #[test]
    fn sign_symmetry() {
        let inst = small_instance();
        let mut rng = rng_from_seed(23);
        for _ in 0..5 {
            let w = gaussian_vec(&mut rng, inst.d());
            let neg: Vec<f64> = w.iter().map(|x| -x).collect();
            assert_eq!(inst.loss(&w).unwrap(), inst.loss(&neg).unwrap());
            let g = inst.gradient(&w).unwrap();
            let gn = inst.gradient(&neg).unwrap();
            for (a, b) in g.iter().zip(&gn) {
                assert_eq!(*a, -*b);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let inst = small_instance();
        let w = vec![0.0; inst.d() + 1];
        assert!(matches!(inst.loss(&w), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(inst.gradient(&w), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn decompose_basic_cases() {
        let inst = small_instance();
        let lp = decompose(inst.w_star(), inst.w_star());
        assert_abs_diff_eq!(lp.alpha, 1.0, epsilon = 1e-12);
        assert!(lp.beta <= 1e-12 && lp.w_perp.is_none());
        assert!(!lp.in_local_region); // β = 0 sits outside the region

        // w = w* + 0.5 e⊥
        let mut rng = rng_from_seed(29);
        let mut e = unit_sphere_vec(&mut rng, inst.d());
        let a = dot(&e, inst.w_star());
        for (ej, sj) in e.iter_mut().zip(inst.w_star()) {
            *ej -= a * sj;
        }
        crate::linalg::normalize(&mut e);
        let w: Vec<f64> =
            inst.w_star().iter().zip(&e).map(|(s, p)| s + 0.5 * p).collect();
        let lp = decompose(&w, inst.w_star());
        assert_abs_diff_eq!(lp.alpha, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(lp.beta, 0.5, epsilon = 1e-10);
        assert!(lp.in_local_region);
        let wp = lp.w_perp.unwrap();
        assert!((norm(&wp) - 1.0).abs() <= 1e-10);
        assert!(dot(&wp, inst.w_star()).abs() <= 1e-10);
    }

    proptest! {
        #[test]
        fn decompose_reconstructs(seed in 0u64..500) {
            let mut rng = rng_from_seed(seed);
            let d = 8;
            let mut w_star = unit_sphere_vec(&mut rng, d);
            crate::linalg::normalize(&mut w_star);
            let w = gaussian_vec(&mut rng, d);
            let lp = decompose(&w, &w_star);
            prop_assert!((lp.alpha * lp.alpha + lp.beta * lp.beta - dot(&w, &w)).abs()
                <= 1e-10 * dot(&w, &w).max(1.0));
            if let Some(wp) = &lp.w_perp {
                for j in 0..d {
                    let back = lp.alpha * w_star[j] + lp.beta * wp[j];
                    prop_assert!((back - w[j]).abs() <= 1e-10);
                }
            }
        }
    }
}
