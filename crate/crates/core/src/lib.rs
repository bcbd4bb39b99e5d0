//! Numerical laboratory for semilinear stochastic evolution equations
//! on the unit interval with Dirichlet boundary conditions.
//!
//! The state space is the span of the Dirichlet-Laplacian eigenbasis
//! `e_n(ξ) = √2 sin(nπξ)`, on which the heat semigroup, fractional powers
//! and Sobolev norms act diagonally and exactly. On top of that spectral
//! calculus the crate provides:
//!
//! - [`noise`]: Q-Wiener increment sampling (counter-based, reproducible)
//!   and summability diagnostics for the covariance eigenvalue sequence;
//! - [`coefficients`]: Nemytskii drift/diffusion operators, the built-in
//!   kernel families for the white/colored noise regimes, and a numerical
//!   verifier for the kernel integrability conditions;
//! - [`gronwall`]: certified bounds for integral inequalities with a
//!   singular convolution kernel;
//! - [`solver`]: exponential Euler and Picard mild-solution schemes, exact
//!   Ornstein–Uhlenbeck sampling, and the factorization operators;
//! - [`regularity`]: temporal Hölder exponent estimation, spatial moment
//!   profiles, and predicted admissible exponent regions.

// Validation guards use `!(x > 0.0)`-style comparisons on purpose: unlike
// `x <= 0.0`, they reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod gronwall;
pub mod noise;
pub mod quadrature;
pub mod regularity;
pub mod rng;
pub mod solver;
pub mod spectral;

pub use coefficients::{
    apply_f, apply_g_increment, builtin_kernels, verify_assumptions, AssumptionReport,
    KernelFamily, Regime, ScalarLipschitz,
};
pub use gronwall::{check_bound, find_lambda0, kernel_mass, GronwallCertificate, SingularKernel};
pub use noise::{q0_diagnostic, q_eps_diagnostic, sample_increments, NoiseSpec, WienerIncrements};
pub use regularity::{
    consistency_verdict, estimate_holder, ou_region, predicted_region, spatial_profile,
    HolderEstimate, PredictedRegion, RegularityReport, Verdict,
};
pub use solver::{
    exact_ou, factorized_g_alpha, picard_solve, r_alpha, solve_exp_euler, ProblemSpec, Scheme,
    Trajectory,
};
pub use spectral::{
    eigenpair, eigenvalue, smoothing_constant, AliasStatus, DstPlan, PhysicalField, SpectralVector,
};
