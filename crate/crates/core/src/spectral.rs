//! Exact spectral calculus for the Dirichlet Laplacian on (0,1).
//!
//! The eigensystem is analytic: `λ_n = (nπ)²`, `e_n(ξ) = √2 sin(nπξ)`.
//! The heat semigroup `e^{tA}` and the fractional powers `(−A)^μ` act
//! diagonally on eigencoefficients, so every linear operation in this
//! module is exact up to rounding. Physical-space evaluation (needed by
//! the Nemytskii operators) goes through a direct discrete sine transform
//! on the interior grid `ξ_j = j/(M+1)`; with the quadrature weight
//! `1/(M+1)` the analysis/synthesis pair is mutually inverse on the first
//! `min(N, M)` modes.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("eigenpair index must be >= 1")]
    ZeroMode,
    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },
    #[error("coefficient vector must be non-empty")]
    Empty,
    #[error("semigroup time must be nonnegative, got {t}")]
    NegativeTime { t: f64 },
    #[error("vectors have different mode counts: {left} vs {right}")]
    ModeMismatch { left: usize, right: usize },
}

/// `λ_n = (nπ)²`, the n-th Dirichlet-Laplacian eigenvalue on (0,1). 1-based.
#[inline]
pub fn eigenvalue(n: usize) -> f64 {
    let k = n as f64 * PI;
    k * k
}

/// Symbolic handle for the eigenfunction `e_n(ξ) = √2 sin(nπξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Eigenfunction {
    pub n: usize,
}

impl Eigenfunction {
    pub fn eval(&self, xi: f64) -> f64 {
        SQRT_2 * (self.n as f64 * PI * xi).sin()
    }

    /// Sup norm over (0,1): √2 for every mode.
    pub fn sup_norm(&self) -> f64 {
        SQRT_2
    }
}

impl fmt::Display for Eigenfunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sqrt(2)*sin({}*pi*x)", self.n)
    }
}

/// The n-th eigenpair `(λ_n, e_n)`. Errors on `n = 0`.
pub fn eigenpair(n: usize) -> Result<(f64, Eigenfunction), SpectralError> {
    if n == 0 {
        return Err(SpectralError::ZeroMode);
    }
    Ok((eigenvalue(n), Eigenfunction { n }))
}

/// Sharp constant of the smoothing bound `‖(−A)^μ S(t)‖ ≤ C t^{−μ}` for a
/// diagonal semigroup: `sup_λ (λt)^μ e^{−λt} = (μ/e)^μ`, attained at
/// `λ = μ/t`.
pub fn smoothing_constant(mu: f64) -> f64 {
    assert!(mu >= 0.0);
    if mu == 0.0 {
        1.0
    } else {
        (mu / std::f64::consts::E).powf(mu)
    }
}

/// Whether a transform or Nemytskii evaluation was fully resolved by the
/// physical grid or subject to aliasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliasStatus {
    Resolved,
    Aliased,
}

impl AliasStatus {
    pub fn is_aliased(&self) -> bool {
        matches!(self, AliasStatus::Aliased)
    }
}

/// Coefficients against the eigenbasis, representing an element of `Ḣ^γ`.
///
/// Invariants: non-empty, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    coeffs: Vec<f64>,
}

impl SpectralVector {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, SpectralError> {
        if coeffs.is_empty() {
            return Err(SpectralError::Empty);
        }
        for (index, c) in coeffs.iter().enumerate() {
            if !c.is_finite() {
                return Err(SpectralError::NonFinite { index });
            }
        }
        Ok(Self { coeffs })
    }

    /// Construction without the finiteness scan; callers guarantee it.
    pub(crate) fn from_raw(coeffs: Vec<f64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    pub fn zero(n_modes: usize) -> Self {
        assert!(n_modes >= 1, "need at least one mode");
        Self { coeffs: vec![0.0; n_modes] }
    }

    /// `amplitude · e_mode` embedded in an `n_modes`-dimensional vector. `mode` is 1-based.
    pub fn unit_mode(n_modes: usize, mode: usize, amplitude: f64) -> Self {
        assert!(mode >= 1 && mode <= n_modes, "mode out of range");
        let mut coeffs = vec![0.0; n_modes];
        coeffs[mode - 1] = amplitude;
        Self { coeffs }
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// `‖v‖_γ = (Σ_n λ_n^γ v_n²)^{1/2}`. γ may be negative (dual norms).
    pub fn sobolev_norm(&self, gamma: f64) -> f64 {
        self.sobolev_norm_with_tail(gamma).0
    }

    /// Norm together with the last resolved mode's share of the squared sum,
    /// as a truncation diagnostic. Share is 0 for the zero vector.
    pub fn sobolev_norm_with_tail(&self, gamma: f64) -> (f64, f64) {
        let mut sum = 0.0;
        let mut last = 0.0;
        for (i, v) in self.coeffs.iter().enumerate() {
            last = eigenvalue(i + 1).powf(gamma) * v * v;
            sum += last;
        }
        let share = if sum > 0.0 { last / sum } else { 0.0 };
        (sum.sqrt(), share)
    }

    /// Coefficient-wise `e^{−λ_n t}`. Errors on negative `t`; `t = 0` is the identity.
    pub fn apply_semigroup(&self, t: f64) -> Result<Self, SpectralError> {
        if !(t >= 0.0) {
            return Err(SpectralError::NegativeTime { t });
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, v)| v * (-eigenvalue(i + 1) * t).exp())
            .collect();
        Ok(Self { coeffs })
    }

    /// Coefficient-wise `λ_n^μ`, i.e. `(−A)^μ`. Obeys the composition law
    /// `(−A)^a (−A)^b = (−A)^{a+b}` exactly per mode for `a = b`.
    pub fn apply_fractional_power(&self, mu: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, v)| v * eigenvalue(i + 1).powf(mu))
            .collect();
        Self { coeffs }
    }

    /// Synthesize on the interior grid `ξ_j = j/(M+1)`. Aliased when `M < N`.
    pub fn to_physical(&self, grid_size: usize) -> (PhysicalField, AliasStatus) {
        DstPlan::new(grid_size).synthesize(self)
    }

    /// Euclidean distance of coefficients (the `Ḣ^0` distance).
    pub fn l2_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.n_modes(), other.n_modes(), "mode count mismatch");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Values at the interior grid points `ξ_j = j/(M+1)`, `j = 1..M`.
/// Dirichlet boundary values are implicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.is_empty() {
            return Err(SpectralError::Empty);
        }
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(SpectralError::NonFinite { index });
            }
        }
        Ok(Self { values })
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Analyze against the first `n_modes` eigenfunctions. Aliased when `n_modes > M`.
    pub fn to_spectral(&self, n_modes: usize) -> (SpectralVector, AliasStatus) {
        DstPlan::new(self.grid_size()).analyze(self, n_modes)
    }
}

/// Precomputed sine table for the direct transform on a fixed grid.
///
/// Arguments are reduced exactly in integer arithmetic (`n·j mod 2(M+1)`),
/// so basis evaluations keep full precision for any mode count.
#[derive(Debug, Clone)]
pub struct DstPlan {
    m: usize,
    sin_table: Vec<f64>,
}

impl DstPlan {
    pub fn new(grid_size: usize) -> Self {
        assert!(grid_size >= 1, "grid must have at least one interior point");
        let period = 2 * (grid_size + 1);
        let mut sin_table = Vec::with_capacity(period);
        for k in 0..period {
            let arg = PI * k as f64 / (grid_size + 1) as f64;
            sin_table.push(arg.sin());
        }
        Self { m: grid_size, sin_table }
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    /// `ξ_j` for the 0-based interior index `j`.
    pub fn grid_point(&self, j: usize) -> f64 {
        (j + 1) as f64 / (self.m + 1) as f64
    }

    #[inline]
    fn sin_nj(&self, n: usize, j: usize) -> f64 {
        self.sin_table[(n * (j + 1)) % (2 * (self.m + 1))]
    }

    /// Field values `Σ_n v_n e_n(ξ_j)`.
    pub fn synthesize(&self, v: &SpectralVector) -> (PhysicalField, AliasStatus) {
        let status = if v.n_modes() > self.m { AliasStatus::Aliased } else { AliasStatus::Resolved };
        let mut values = vec![0.0; self.m];
        for (i, c) in v.coeffs().iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let n = i + 1;
            let a = SQRT_2 * c;
            for (j, val) in values.iter_mut().enumerate() {
                *val += a * self.sin_nj(n, j);
            }
        }
        (PhysicalField::from_raw(values), status)
    }

    /// Coefficients `v_n = (1/(M+1)) Σ_j field_j e_n(ξ_j)`, `n = 1..n_modes`.
    pub fn analyze(&self, field: &PhysicalField, n_modes: usize) -> (SpectralVector, AliasStatus) {
        assert_eq!(field.grid_size(), self.m, "field does not match plan grid");
        assert!(n_modes >= 1);
        let status = if n_modes > self.m { AliasStatus::Aliased } else { AliasStatus::Resolved };
        let w = 1.0 / (self.m + 1) as f64;
        let mut coeffs = vec![0.0; n_modes];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let n = i + 1;
            let mut acc = 0.0;
            for (j, val) in field.values().iter().enumerate() {
                acc += val * self.sin_nj(n, j);
            }
            *c = SQRT_2 * w * acc;
        }
        (SpectralVector::from_raw(coeffs), status)
    }
}
