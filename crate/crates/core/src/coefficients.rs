//! Nemytskii drift/diffusion operators and the kernel families that encode
//! the Lipschitz/linear-growth conditions for each noise regime.
//!
//! The drift is the divergence-form composition `F(x)(ξ) = ∂_ξ f(x(ξ))`,
//! evaluated weakly: its n-th sine coefficient is
//! `−nπ·√2·∫₀¹ f(x(ξ)) cos(nπξ) dξ` (cosine analysis of `f(x)` on the
//! grid). The diffusion increment is the pointwise product
//! `g(x(ξ))·Σ_n ΔW_n e_n(ξ)` analyzed back into the sine basis. The kernel
//! families come with all paper constants normalized to 1; the regularity
//! exponents they encode are constant-independent.

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use crate::quadrature::{integrate_graded, GlRule, QuadratureError, DEFAULT_PANELS};
use crate::rng::standard_normal;
use crate::spectral::{AliasStatus, DstPlan, SpectralVector};

#[derive(Debug, Error)]
pub enum CoeffError {
    #[error("Lipschitz constant must be nonnegative and finite, got {l}")]
    BadLipschitz { l: f64 },
    #[error("Lipschitz spot-check failed: |f({a})-f({b})| = {diff} > L·|a-b| = {bound}")]
    LipschitzViolated { a: f64, b: f64, diff: f64, bound: f64 },
    #[error("incompatible regime/gamma: {detail}")]
    IncompatibleRegime { detail: String },
    #[error("alpha must lie in (0, 1), got {alpha}")]
    AlphaOutOfRange { alpha: f64 },
    #[error("horizon must be positive, got {t}")]
    BadHorizon { t: f64 },
    #[error("kernel evaluation failed: {0}")]
    KernelEvaluation(#[from] QuadratureError),
}

/// A scalar Lipschitz map together with its constant, as used for the
/// Nemytskii drift `f` and diffusion `g`.
#[derive(Clone)]
pub struct ScalarLipschitz {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    lipschitz: f64,
    vanishes_at_zero: bool,
    kind: MapKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MapKind {
    Zero,
    One,
    Identity,
    Scaled,
    Custom,
}

impl std::fmt::Debug for ScalarLipschitz {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarLipschitz")
            .field("lipschitz", &self.lipschitz)
            .field("vanishes_at_zero", &self.vanishes_at_zero)
            .field("kind", &self.kind)
            .finish()
    }
}

impl ScalarLipschitz {
    pub fn zero() -> Self {
        Self { f: Arc::new(|_| 0.0), lipschitz: 0.0, vanishes_at_zero: true, kind: MapKind::Zero }
    }

    /// The constant map `u ↦ 1` (affine diffusion: additive noise).
    pub fn one() -> Self {
        Self { f: Arc::new(|_| 1.0), lipschitz: 0.0, vanishes_at_zero: false, kind: MapKind::One }
    }

    pub fn identity() -> Self {
        Self { f: Arc::new(|u| u), lipschitz: 1.0, vanishes_at_zero: true, kind: MapKind::Identity }
    }

    pub fn scaled_identity(c: f64) -> Self {
        Self {
            f: Arc::new(move |u| c * u),
            lipschitz: c.abs(),
            vanishes_at_zero: true,
            kind: MapKind::Scaled,
        }
    }

    pub fn scaled_sin(c: f64) -> Self {
        Self {
            f: Arc::new(move |u| c * u.sin()),
            lipschitz: c.abs(),
            vanishes_at_zero: true,
            kind: MapKind::Custom,
        }
    }

    /// A user-supplied map; the stated constant is trusted but can be
    /// spot-checked with [`Self::spot_check_lipschitz`].
    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lipschitz: f64,
        vanishes_at_zero: bool,
    ) -> Result<Self, CoeffError> {
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            return Err(CoeffError::BadLipschitz { l: lipschitz });
        }
        Ok(Self { f: Arc::new(f), lipschitz, vanishes_at_zero, kind: MapKind::Custom })
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn lipschitz_constant(&self) -> f64 {
        self.lipschitz
    }

    pub fn vanishes_at_zero(&self) -> bool {
        self.vanishes_at_zero
    }

    pub fn is_zero_map(&self) -> bool {
        self.kind == MapKind::Zero
    }

    pub fn is_one_map(&self) -> bool {
        self.kind == MapKind::One
    }

    /// Check `|f(a)−f(b)| ≤ L|a−b|` on `pairs` random pairs in `[-range, range]`.
    pub fn spot_check_lipschitz(&self, pairs: usize, range: f64, seed: u64) -> Result<(), CoeffError> {
        for i in 0..pairs {
            let a = range * standard_normal(seed, 0, i as u64, 0, 11).tanh();
            let b = range * standard_normal(seed, 0, i as u64, 1, 11).tanh();
            let diff = (self.eval(a) - self.eval(b)).abs();
            let bound = self.lipschitz * (a - b).abs() * (1.0 + 1e-12) + 1e-14;
            if diff > bound {
                return Err(CoeffError::LipschitzViolated { a, b, diff, bound });
            }
        }
        Ok(())
    }
}

/// Which example regime the built-in kernels encode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Space-time white noise in d = 1.
    WhiteD1,
    /// Trace-class noise with uniformly bounded eigenfunctions.
    ColoredQ0,
    /// Trace-class noise with `C^ε` eigenfunctions.
    ColoredQeps { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum KernelFn {
    /// `coeff · t^{−exponent}`
    Power { coeff: f64, exponent: f64 },
    Constant(f64),
    /// `(Σ_n e^{−2λ_n t})^{1/2}`, the white-noise diffusion envelope.
    WhiteDiffusion,
}

impl KernelFn {
    fn eval(&self, t: f64) -> f64 {
        match self {
            KernelFn::Power { coeff, exponent } => coeff * t.powf(-exponent),
            KernelFn::Constant(c) => *c,
            KernelFn::WhiteDiffusion => white_diffusion_kernel_sq(t).sqrt(),
        }
    }
}

/// The four kernels `(K_F, K_G, K_{F,γ}, K_{G,γ})` of a regime, all
/// nonnegative and nonincreasing on (0, T].
#[derive(Debug, Clone)]
pub struct KernelFamily {
    pub regime: Regime,
    pub gamma: f64,
    k_f: KernelFn,
    k_g: KernelFn,
    k_f_gamma: KernelFn,
    k_g_gamma: KernelFn,
}

impl KernelFamily {
    pub fn k_f(&self, t: f64) -> f64 {
        self.k_f.eval(t)
    }

    pub fn k_g(&self, t: f64) -> f64 {
        self.k_g.eval(t)
    }

    pub fn k_f_gamma(&self, t: f64) -> f64 {
        self.k_f_gamma.eval(t)
    }

    pub fn k_g_gamma(&self, t: f64) -> f64 {
        self.k_g_gamma.eval(t)
    }
}

/// `Σ_{n≥1} e^{−2(nπ)²t}`, evaluated exactly for every `t > 0`.
///
/// For small `t` the sum is taken in its Poisson-resummed form
/// `((2πt)^{−1/2}·Σ_k e^{−k²/(2t)} − 1)/2`, which converges in a handful of
/// terms exactly where the direct sum would need `O(t^{−1/2})` of them.
pub fn white_diffusion_kernel_sq(t: f64) -> f64 {
    assert!(t > 0.0, "white diffusion kernel needs t > 0");
    if t >= 0.05 {
        let mut acc = 0.0;
        let mut n = 1usize;
        loop {
            let term = (-2.0 * (n as f64 * PI).powi(2) * t).exp();
            acc += term;
            if term < acc * 1e-18 + 1e-300 {
                break;
            }
            n += 1;
        }
        acc
    } else {
        let mut theta = 1.0;
        for k in 1..=5 {
            theta += 2.0 * (-(k * k) as f64 / (2.0 * t)).exp();
        }
        0.5 * (theta / (2.0 * PI * t).sqrt() - 1.0)
    }
}

/// Built-in kernel family for a regime, with every constant normalized to 1.
///
/// Preconditions mirror the regime constraints: white noise requires γ = 0,
/// bounded-eigenfunction colored noise requires γ < 1, Hölder-eigenfunction
/// colored noise requires γ < ε with γ = 1/2 excluded.
pub fn builtin_kernels(regime: Regime, gamma: f64) -> Result<KernelFamily, CoeffError> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(CoeffError::IncompatibleRegime {
            detail: format!("gamma must be nonnegative, got {gamma}"),
        });
    }
    let drift = KernelFn::Power { coeff: 1.0, exponent: 0.5 };
    match regime {
        Regime::WhiteD1 => {
            if gamma != 0.0 {
                return Err(CoeffError::IncompatibleRegime {
                    detail: format!("white noise in d=1 requires gamma = 0, got {gamma}"),
                });
            }
            Ok(KernelFamily {
                regime,
                gamma,
                k_f: drift,
                k_g: KernelFn::WhiteDiffusion,
                k_f_gamma: drift,
                k_g_gamma: KernelFn::WhiteDiffusion,
            })
        }
        Regime::ColoredQ0 => {
            if gamma >= 1.0 {
                return Err(CoeffError::IncompatibleRegime {
                    detail: format!("bounded-eigenfunction regime requires gamma < 1, got {gamma}"),
                });
            }
            Ok(KernelFamily {
                regime,
                gamma,
                k_f: drift,
                k_g: KernelFn::Constant(1.0),
                k_f_gamma: drift,
                k_g_gamma: KernelFn::Power { coeff: 1.0, exponent: gamma / 2.0 },
            })
        }
        Regime::ColoredQeps { epsilon } => {
            if !(epsilon > 0.0 && epsilon <= 1.0) {
                return Err(CoeffError::IncompatibleRegime {
                    detail: format!("epsilon must lie in (0, 1], got {epsilon}"),
                });
            }
            if gamma >= epsilon {
                return Err(CoeffError::IncompatibleRegime {
                    detail: format!("requires gamma < epsilon, got gamma = {gamma}, epsilon = {epsilon}"),
                });
            }
            if gamma == 0.5 {
                return Err(CoeffError::IncompatibleRegime {
                    detail: "gamma = 1/2 is excluded in the Hölder-eigenfunction regime".into(),
                });
            }
            Ok(KernelFamily {
                regime,
                gamma,
                k_f: drift,
                k_g: KernelFn::Constant(1.0),
                k_f_gamma: drift,
                k_g_gamma: KernelFn::Constant(1.0),
            })
        }
    }
}

/// Weak-form drift: sine coefficients of `∂_ξ f(x(·))`, an element of `Ḣ^{−1}`.
///
/// The n-th coefficient is `⟨∂_ξ f(x), e_n⟩ = −nπ·√2·∫₀¹ f(x(ξ)) cos(nπξ) dξ`.
/// It is evaluated through the sine expansion of `f(x) − f(0)` (the
/// constant differentiates away and the remainder is Dirichlet-compatible)
/// and the analytic coupling `⟨∂_ξ e_m, e_n⟩ = 4mn/(n²−m²)` for `m+n` odd:
/// exact for band-limited compositions, aliasing-limited otherwise.
///
/// Returns [`AliasStatus::Aliased`] when the grid violates the `M ≥ 2N`
/// anti-aliasing rule; the coefficients are still computed.
pub fn apply_f(
    x: &SpectralVector,
    f: &ScalarLipschitz,
    plan: &DstPlan,
) -> (SpectralVector, AliasStatus) {
    let n_modes = x.n_modes();
    let m_grid = plan.grid_size();
    let status =
        if m_grid >= 2 * n_modes { AliasStatus::Resolved } else { AliasStatus::Aliased };
    if f.is_zero_map() {
        return (SpectralVector::zero(n_modes), status);
    }
    let (field, _) = plan.synthesize(x);
    let f0 = f.eval(0.0);
    let composed: Vec<f64> = field.values().iter().map(|&u| f.eval(u) - f0).collect();
    let (sine, _) =
        plan.analyze(&crate::spectral::PhysicalField::from_raw(composed), m_grid);
    let b = sine.coeffs();
    let mut coeffs = vec![0.0; n_modes];
    for (i, c) in coeffs.iter_mut().enumerate() {
        let n = i + 1;
        let mut acc = 0.0;
        // only opposite-parity modes couple
        let start = if n % 2 == 0 { 1 } else { 2 };
        let mut m = start;
        while m <= m_grid {
            let num = 4.0 * (m * n) as f64;
            let den = (n * n) as f64 - (m * m) as f64;
            acc += num / den * b[m - 1];
            m += 2;
        }
        *c = acc;
    }
    (SpectralVector::from_raw(coeffs), status)
}

/// Diffusion increment: sine coefficients of `g(x(·))·Σ_n ΔW_n e_n(·)`.
///
/// `dw_row` are the per-mode increments (the `√q_n` weight is already baked
/// into them by the sampler); the noise basis coincides with the PDE
/// eigenbasis. With `g ≡ 1` this returns `dw_row` itself up to transform
/// accuracy, and exactly via a short-circuit.
pub fn apply_g_increment(
    x: &SpectralVector,
    g: &ScalarLipschitz,
    dw_row: &[f64],
    plan: &DstPlan,
) -> (SpectralVector, AliasStatus) {
    let n_modes = x.n_modes();
    assert_eq!(dw_row.len(), n_modes, "increment row does not match mode count");
    let status =
        if plan.grid_size() >= 2 * n_modes { AliasStatus::Resolved } else { AliasStatus::Aliased };
    if g.is_zero_map() {
        return (SpectralVector::zero(n_modes), status);
    }
    if g.is_one_map() {
        return (SpectralVector::from_raw(dw_row.to_vec()), status);
    }
    let (field, _) = plan.synthesize(x);
    let dw_vec = SpectralVector::from_raw(dw_row.to_vec());
    let (noise_field, _) = plan.synthesize(&dw_vec);
    let product: Vec<f64> = field
        .values()
        .iter()
        .zip(noise_field.values())
        .map(|(&u, &w)| g.eval(u) * w)
        .collect();
    let (coeffs, _) = plan.analyze(&crate::spectral::PhysicalField::from_raw(product), n_modes);
    (coeffs, status)
}

/// One verified kernel integral: its value and the convergence flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionEntry {
    pub value: f64,
    pub convergent: bool,
}

/// The six integrability quantities of the kernel conditions:
/// `K_F⁰ = ∫K_F`, `K_G⁰ = (∫K_G²)^{1/2}`, their γ-counterparts, and the
/// singular-weight variants `K_F^{γ,α} = ∫t^{−α}K_{F,γ}`,
/// `K_G^{γ,α} = (∫t^{−2α}K_{G,γ}²)^{1/2}`.
#[derive(Debug, Clone, Copy)]
pub struct AssumptionReport {
    pub kf0: AssumptionEntry,
    pub kg0: AssumptionEntry,
    pub kf_gamma: AssumptionEntry,
    pub kg_gamma: AssumptionEntry,
    pub kf_gamma_alpha: AssumptionEntry,
    pub kg_gamma_alpha: AssumptionEntry,
}

impl AssumptionReport {
    pub fn entries(&self) -> [(&'static str, AssumptionEntry); 6] {
        [
            ("KF0", self.kf0),
            ("KG0", self.kg0),
            ("KFgamma", self.kf_gamma),
            ("KGgamma", self.kg_gamma),
            ("KFgammaAlpha", self.kf_gamma_alpha),
            ("KGgammaAlpha", self.kg_gamma_alpha),
        ]
    }
}

/// Evaluate the six kernel integrals by graded-mesh quadrature.
///
/// G-type entries report the square root of the integral; a divergent flag
/// means the partial sums failed to decay geometrically and the reported
/// value is the resolved partial mass only.
pub fn verify_assumptions(
    kernels: &KernelFamily,
    alpha: f64,
    t_horizon: f64,
) -> Result<AssumptionReport, CoeffError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CoeffError::AlphaOutOfRange { alpha });
    }
    if !(t_horizon > 0.0) || !t_horizon.is_finite() {
        return Err(CoeffError::BadHorizon { t: t_horizon });
    }
    let rule = GlRule::new(16);
    let drift = |k: KernelFn| {
        integrate_graded(move |t| k.eval(t), t_horizon, DEFAULT_PANELS, &rule)
            .map(|g| AssumptionEntry { value: g.value, convergent: g.convergent })
    };
    let diff = |k: KernelFn| {
        integrate_graded(move |t| k.eval(t).powi(2), t_horizon, DEFAULT_PANELS, &rule)
            .map(|g| AssumptionEntry { value: g.value.max(0.0).sqrt(), convergent: g.convergent })
    };
    let drift_alpha = |k: KernelFn| {
        integrate_graded(move |t| t.powf(-alpha) * k.eval(t), t_horizon, DEFAULT_PANELS, &rule)
            .map(|g| AssumptionEntry { value: g.value, convergent: g.convergent })
    };
    let diff_alpha = |k: KernelFn| {
        integrate_graded(
            move |t| t.powf(-2.0 * alpha) * k.eval(t).powi(2),
            t_horizon,
            DEFAULT_PANELS,
            &rule,
        )
        .map(|g| AssumptionEntry { value: g.value.max(0.0).sqrt(), convergent: g.convergent })
    };
    Ok(AssumptionReport {
        kf0: drift(kernels.k_f)?,
        kg0: diff(kernels.k_g)?,
        kf_gamma: drift(kernels.k_f_gamma)?,
        kg_gamma: diff(kernels.k_g_gamma)?,
        kf_gamma_alpha: drift_alpha(kernels.k_f_gamma)?,
        kg_gamma_alpha: diff_alpha(kernels.k_g_gamma)?,
    })
}
