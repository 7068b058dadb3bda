//! Projected first-order optimizers: Adam with projection, plain gradient
//! descent on an instance, and a gradient-flow integrator.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::{dot, is_finite_slice, norm, sub};
use crate::model::Instance;
use crate::population::pop_gradient;

/// Adam hyperparameters plus a piecewise-constant learning-rate schedule.
/// Bias correction is always applied; epsilon defaults to 1e-8.
#[derive(Debug, Clone)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// (step_count, learning_rate) segments, run in order.
    pub schedule: Vec<(usize, f64)>,
}

impl AdamConfig {
    pub fn new(schedule: Vec<(usize, f64)>) -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, epsilon: 1e-8, schedule }
    }

    /// Curvature-probe preset: 0.001 for 200 steps, then 0.0005 for 200,
    /// then 0.0003 for 600.
    pub fn fig2() -> Self {
        AdamConfig::new(vec![(200, 1e-3), (200, 5e-4), (600, 3e-4)])
    }

    /// One-point-probe preset: 0.01 for 3000 steps.
    pub fn fig3() -> Self {
        AdamConfig::new(vec![(3000, 1e-2)])
    }

    pub fn total_steps(&self) -> usize {
        self.schedule.iter().map(|(k, _)| k).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidParameter("adam betas must lie in [0, 1)".into()));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidParameter("adam epsilon must be positive".into()));
        }
        if self.schedule.is_empty() || self.schedule.iter().any(|&(_, lr)| lr <= 0.0) {
            return Err(Error::InvalidParameter(
                "schedule must be non-empty with positive learning rates".into(),
            ));
        }
        Ok(())
    }

    fn learning_rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.schedule.iter().flat_map(|&(k, lr)| std::iter::repeat(lr).take(k))
    }
}

/// Feasible-set projections. Applying a projection twice equals applying it
/// once, up to 1e-12.
#[derive(Debug, Clone)]
pub enum Projection {
    UnitSphere,
    Ball { center: Vec<f64>, radius: f64 },
    Sphere { center: Vec<f64>, radius: f64 },
    /// Shell r_lo ≤ ‖v − center‖ ≤ r_hi; used where an exact center point
    /// must stay excluded.
    Annulus { center: Vec<f64>, r_lo: f64, r_hi: f64 },
    /// Joint variable: the first `split` coordinates get `first`, the rest
    /// get `second`.
    Product { first: Box<Projection>, second: Box<Projection>, split: usize },
}

impl Projection {
    pub fn apply(&self, v: &mut [f64]) -> Result<()> {
        match self {
            Projection::UnitSphere => project_unit_sphere(v),
            Projection::Ball { center, radius } => project_ball(v, center, *radius),
            Projection::Sphere { center, radius } => project_sphere(v, center, *radius),
            Projection::Annulus { center, r_lo, r_hi } => {
                let dist = dist_to(v, center);
                if dist < *r_lo {
                    project_sphere(v, center, *r_lo)
                } else if dist > *r_hi {
                    project_sphere(v, center, *r_hi)
                } else {
                    Ok(())
                }
            }
            Projection::Product { first, second, split } => {
                let (a, b) = v.split_at_mut(*split);
                first.apply(a)?;
                second.apply(b)
            }
        }
    }

    /// Constraint violation in the norm relevant to the projection kind.
    pub fn violation(&self, v: &[f64]) -> f64 {
        match self {
            Projection::UnitSphere => (norm(v) - 1.0).abs(),
            Projection::Ball { center, radius } => (dist_to(v, center) - radius).max(0.0),
            Projection::Sphere { center, radius } => (dist_to(v, center) - radius).abs(),
            Projection::Annulus { center, r_lo, r_hi } => {
                let dist = dist_to(v, center);
                (r_lo - dist).max(0.0).max(dist - r_hi)
            }
            Projection::Product { first, second, split } => {
                let (a, b) = v.split_at(*split);
                first.violation(a).max(second.violation(b))
            }
        }
    }
}

fn dist_to(v: &[f64], center: &[f64]) -> f64 {
    debug_assert_eq!(v.len(), center.len());
    v.iter()
        .zip(center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn project_unit_sphere(v: &mut [f64]) -> Result<()> {
    let n = norm(v);
    if n <= 1e-300 {
        return Err(Error::DegenerateDirection("cannot normalize the zero vector".into()));
    }
    for x in v.iter_mut() {
        *x /= n;
    }
    Ok(())
}

/// Leaves v untouched when it is already inside the ball.
pub fn project_ball(v: &mut [f64], center: &[f64], radius: f64) -> Result<()> {
    let dist = dist_to(v, center);
    if dist <= radius {
        return Ok(());
    }
    rescale_from_center(v, center, radius / dist);
    Ok(())
}

pub fn project_sphere(v: &mut [f64], center: &[f64], radius: f64) -> Result<()> {
    let dist = dist_to(v, center);
    if dist <= 1e-300 {
        return Err(Error::DegenerateDirection(
            "point coincides with the sphere center".into(),
        ));
    }
    rescale_from_center(v, center, radius / dist);
    Ok(())
}

fn rescale_from_center(v: &mut [f64], center: &[f64], factor: f64) {
    for (x, c) in v.iter_mut().zip(center) {
        *x = c + (*x - c) * factor;
    }
}

/// Optimizer trace. `values` holds one entry per step plus the initial
/// value; `extra` carries a secondary per-step series when the caller
/// records one (gradient descent stores losses there).
#[derive(Debug, Clone)]
pub struct Trace {
    pub values: Vec<f64>,
    pub extra: Option<Vec<f64>>,
    pub final_point: Vec<f64>,
    pub best_value: f64,
    pub best_point: Vec<f64>,
    pub steps: usize,
    pub wall: Duration,
}

/// Projected Adam. The objective writes its gradient into the provided
/// buffer and returns the value at the current iterate. Deterministic given
/// (init, cfg, seed); the seed only matters for stochastic objectives and
/// is unused by the deterministic ones in this crate.
pub fn projected_adam<F>(
    mut objective: F,
    init: &[f64],
    cfg: &AdamConfig,
    proj: &Projection,
    _seed: u64,
) -> Result<Trace>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    cfg.validate()?;
    let start = Instant::now();
    let dim = init.len();
    let mut x = init.to_vec();
    proj.apply(&mut x)?;

    let mut grad = vec![0.0; dim];
    let mut m = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    let total = cfg.total_steps();
    let mut values = Vec::with_capacity(total + 1);

    let value = objective(&x, &mut grad);
    check_finite(value, &grad, 0)?;
    values.push(value);
    let mut best_value = value;
    let mut best_point = x.clone();

    let mut beta1_pow = 1.0;
    let mut beta2_pow = 1.0;
    for (t, lr) in cfg.learning_rates().enumerate() {
        beta1_pow *= cfg.beta1;
        beta2_pow *= cfg.beta2;
        for j in 0..dim {
            let g = grad[j];
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[j] / (1.0 - beta1_pow);
            let v_hat = v[j] / (1.0 - beta2_pow);
            x[j] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
        proj.apply(&mut x)?;
        let value = objective(&x, &mut grad);
        check_finite(value, &grad, t + 1)?;
        values.push(value);
        if value < best_value {
            best_value = value;
            best_point.copy_from_slice(&x);
        }
    }

    Ok(Trace {
        values,
        extra: None,
        final_point: x,
        best_value,
        best_point,
        steps: total,
        wall: start.elapsed(),
    })
}

fn check_finite(value: f64, grad: &[f64], step: usize) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite { what: "objective", step });
    }
    if !is_finite_slice(grad) {
        return Err(Error::NonFinite { what: "gradient", step });
    }
    Ok(())
}

/// Loss level treated as blow-up by the plain descent loop.
pub const DIVERGENCE_LOSS: f64 = 1e12;

/// Plain gradient descent w ← w − η∇L(w), stopping at `max_steps` or once
/// ‖w − w*‖ ≤ dist_tol. The trace stores distances in `values` and losses
/// in `extra`.
pub fn gradient_descent(
    inst: &Instance,
    w0: &[f64],
    eta: f64,
    max_steps: usize,
    dist_tol: f64,
) -> Result<Trace> {
    if eta <= 0.0 {
        return Err(Error::InvalidParameter("eta must be positive".into()));
    }
    let start = Instant::now();
    let mut w = w0.to_vec();
    let mut dists = Vec::new();
    let mut losses = Vec::new();
    let mut best_value = f64::INFINITY;
    let mut best_point = w.clone();
    let mut steps = 0;
    loop {
        let dist = norm(&sub(&w, inst.w_star()));
        let loss = inst.loss(&w)?;
        if !dist.is_finite() || !loss.is_finite() {
            return Err(Error::NonFinite { what: "iterate", step: steps });
        }
        if loss > DIVERGENCE_LOSS {
            return Err(Error::Divergence { step: steps, loss });
        }
        dists.push(dist);
        losses.push(loss);
        if dist < best_value {
            best_value = dist;
            best_point.copy_from_slice(&w);
        }
        if dist <= dist_tol || steps >= max_steps {
            break;
        }
        let g = inst.gradient(&w)?;
        for (wj, gj) in w.iter_mut().zip(&g) {
            *wj -= eta * gj;
        }
        steps += 1;
    }
    Ok(Trace {
        values: dists,
        extra: Some(losses),
        final_point: w,
        best_value,
        best_point,
        steps,
        wall: start.elapsed(),
    })
}

/// Vector field for the flow integrator.
#[derive(Debug, Clone, Copy)]
pub enum FlowField<'a> {
    Empirical(&'a Instance),
    Population { w_star: &'a [f64] },
}

impl FlowField<'_> {
    fn grad(&self, w: &[f64]) -> Result<Vec<f64>> {
        match self {
            FlowField::Empirical(inst) => inst.gradient(w),
            FlowField::Population { w_star } => Ok(pop_gradient(w, w_star)),
        }
    }

    fn w_star(&self) -> &[f64] {
        match self {
            FlowField::Empirical(inst) => inst.w_star(),
            FlowField::Population { w_star } => w_star,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Rk4,
}

/// Integrates ẇ = −∇L(w) from w0 to time T with fixed step dt, recording
/// ‖w_t − w*‖² per step.
pub fn gradient_flow(
    field: FlowField<'_>,
    w0: &[f64],
    dt: f64,
    t_end: f64,
    method: Integrator,
) -> Result<Trace> {
    if dt <= 0.0 {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    if t_end < dt {
        return Err(Error::InvalidParameter("T must be at least dt".into()));
    }
    let start = Instant::now();
    let steps = (t_end / dt).round().max(1.0) as usize;
    let mut w = w0.to_vec();
    let mut values = Vec::with_capacity(steps + 1);
    let dist2 = |w: &[f64]| -> f64 {
        let delta = sub(w, field.w_star());
        dot(&delta, &delta)
    };
    values.push(dist2(&w));
    for step in 1..=steps {
        match method {
            Integrator::Euler => {
                let g = field.grad(&w)?;
                for (wj, gj) in w.iter_mut().zip(&g) {
                    *wj -= dt * gj;
                }
            }
            Integrator::Rk4 => {
                let k1 = neg(field.grad(&w)?);
                let k2 = neg(field.grad(&shifted(&w, &k1, dt / 2.0))?);
                let k3 = neg(field.grad(&shifted(&w, &k2, dt / 2.0))?);
                let k4 = neg(field.grad(&shifted(&w, &k3, dt))?);
                for j in 0..w.len() {
                    w[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
            }
        }
        if !is_finite_slice(&w) {
            return Err(Error::NonFinite { what: "flow state", step });
        }
        values.push(dist2(&w));
    }
    let best_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Trace {
        values,
        extra: None,
        final_point: w.clone(),
        best_value,
        best_point: w,
        steps,
        wall: start.elapsed(),
    })
}

fn neg(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        *x = -*x;
    }
    v
}

fn shifted(w: &[f64], k: &[f64], h: f64) -> Vec<f64> {
    w.iter().zip(k).map(|(wj, kj)| wj + h * kj).collect()
}
