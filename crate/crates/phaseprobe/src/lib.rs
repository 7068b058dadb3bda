//! Landscape-probing toolkit for the real phase-retrieval least-squares
//! objective L(w) = (1/4n) Σᵢ ((wᵀxᵢ)² − yᵢ²)² with Gaussian samples and a
//! unit ground truth.
//!
//! The crate generates seeded problem instances, evaluates loss / gradient /
//! Hessian quantities matrix-free, runs projected-Adam landscape probes and
//! their closed-form adversarial certificates, estimates extremal Hessian
//! eigenvalues, and verifies the probabilistic building blocks (selected
//! marginals, the add-one swap identity, Gaussian inner-product
//! independence, extreme-value means, quadratic-form tails) by Monte Carlo.
//!
//! Determinism: all randomness flows through ChaCha8 streams seeded from
//! 64-bit values (see [`rng`]), kernels reduce in a fixed order with
//! compensated summation, and sweep cells derive their seeds from a stable
//! SplitMix64 chain. Identical inputs give bit-identical outputs.

pub mod addone;
pub mod cli;
pub mod emit;
pub mod error;
pub mod linalg;
pub mod model;
pub mod optimize;
pub mod population;
pub mod probes;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{decompose, Instance, LandscapePoint, WStarMode};
pub use optimize::{
    gradient_descent, gradient_flow, projected_adam, AdamConfig, FlowField, Integrator,
    Projection, Trace,
};
pub use probes::{
    annulus_min_ratio, annulus_min_ratio_population, certificate_hessian_ball,
    certificate_hessian_fixed, certificate_onepoint_ball, locality_radius, probe_onepoint,
    probe_q, truncation_split, Certificate, CertificateKind, ProbeMetric, ProbeResult,
};
pub use spectral::{min_eigen_dense, min_eigen_lanczos, SpectralEstimate};
