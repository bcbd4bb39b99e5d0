//! Run configuration: a single JSON document with every numeric default
//! stated here (see the schema table in the README). The master seed is
//! required — there is no silent nondeterminism.

use std::f64::consts::{PI, SQRT_2};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use spde_core::coefficients::ScalarLipschitz;
use spde_core::noise::NoiseSpec;
use spde_core::solver::ProblemSpec;
use spde_core::spectral::SpectralVector;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config field `{field}`: {detail}")]
    Invalid { field: &'static str, detail: String },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

fn invalid(field: &'static str, detail: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, detail: detail.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentTag {
    OuWhite,
    SheWhite,
    SheColoredQ0,
    SheColoredQeps,
    GronwallSuite,
    AssumptionSuite,
    FactorizationCheck,
}

impl ExperimentTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentTag::OuWhite => "ou_white",
            ExperimentTag::SheWhite => "she_white",
            ExperimentTag::SheColoredQ0 => "she_colored_q0",
            ExperimentTag::SheColoredQeps => "she_colored_qeps",
            ExperimentTag::GronwallSuite => "gronwall_suite",
            ExperimentTag::AssumptionSuite => "assumption_suite",
            ExperimentTag::FactorizationCheck => "factorization_check",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentTag,
    #[serde(default)]
    pub problem: ProblemConfig,
    pub mc: McConfig,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default)]
    pub gronwall: GronwallSuiteConfig,
    #[serde(default)]
    pub assumption: AssumptionSuiteConfig,
    #[serde(default)]
    pub factorization: FactorizationConfig,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub dump_paths: bool,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    /// Required: every run is a pure function of its config.
    pub master_seed: u64,
    /// Worker threads for path-level parallelism; 0 = all cores.
    #[serde(default)]
    pub parallel: usize,
}

fn default_n_paths() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub n_modes: usize,
    /// Physical grid size; defaults to 2·n_modes (anti-aliasing rule).
    pub grid_size: Option<usize>,
    pub horizon: f64,
    pub n_steps: usize,
    pub x0: X0Config,
    pub drift: FnConfig,
    pub diffusion: FnConfig,
    pub noise: NoiseConfig,
    pub beta_claim: f64,
    pub gamma_claim: f64,
    pub alpha_claim: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            n_modes: 256,
            grid_size: None,
            horizon: 1.0,
            n_steps: 4096,
            x0: X0Config::Zero,
            drift: FnConfig::Zero,
            diffusion: FnConfig::One,
            noise: NoiseConfig::White,
            beta_claim: 0.5,
            gamma_claim: 0.0,
            alpha_claim: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FnConfig {
    Zero,
    One,
    Identity,
    ScaledIdentity { scale: f64 },
    ScaledSin { scale: f64 },
    /// `u ↦ offset + scale·u` (Lipschitz constant `|scale|`).
    Affine { offset: f64, scale: f64 },
}

impl FnConfig {
    pub fn build(&self) -> ScalarLipschitz {
        match self {
            FnConfig::Zero => ScalarLipschitz::zero(),
            FnConfig::One => ScalarLipschitz::one(),
            FnConfig::Identity => ScalarLipschitz::identity(),
            FnConfig::ScaledIdentity { scale } => ScalarLipschitz::scaled_identity(*scale),
            FnConfig::ScaledSin { scale } => ScalarLipschitz::scaled_sin(*scale),
            FnConfig::Affine { offset, scale } => {
                let (o, c) = (*offset, *scale);
                ScalarLipschitz::custom(move |u| o + c * u, c.abs(), o == 0.0)
                    .expect("affine coefficients are always valid")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    White,
    /// `q_n = n^{−decay}` with bounded eigenfunctions.
    TraceClass { decay: f64 },
    /// `q_n = n^{−decay}` with Hölder exponent ε eigenfunctions.
    HolderEigen { decay: f64, epsilon: f64 },
}

impl NoiseConfig {
    pub fn build(&self, n_modes: usize) -> Result<NoiseSpec, ConfigError> {
        match self {
            NoiseConfig::White => Ok(NoiseSpec::white(n_modes)),
            NoiseConfig::TraceClass { decay } => NoiseSpec::trace_class_power(n_modes, *decay)
                .map_err(|e| invalid("problem.noise", e.to_string())),
            NoiseConfig::HolderEigen { decay, epsilon } => {
                NoiseSpec::holder_eigen_power(n_modes, *decay, *epsilon)
                    .map_err(|e| invalid("problem.noise", e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum X0Config {
    Zero,
    /// `amplitude · e_index`.
    Mode { index: usize, amplitude: f64 },
    /// `amplitude · ξ(1−ξ)`, coefficients `amplitude·4√2/(n³π³)` for odd n.
    Parabola { amplitude: f64 },
    /// `v_n = amplitude · n^{−decay}`.
    PowerDecay { amplitude: f64, decay: f64 },
}

impl X0Config {
    pub fn build(&self, n_modes: usize) -> Result<SpectralVector, ConfigError> {
        match self {
            X0Config::Zero => Ok(SpectralVector::zero(n_modes)),
            X0Config::Mode { index, amplitude } => {
                if *index < 1 || *index > n_modes {
                    return Err(invalid("problem.x0.index", format!("mode {index} out of range")));
                }
                Ok(SpectralVector::unit_mode(n_modes, *index, *amplitude))
            }
            X0Config::Parabola { amplitude } => {
                let coeffs = (1..=n_modes)
                    .map(|n| {
                        if n % 2 == 1 {
                            amplitude * 4.0 * SQRT_2 / ((n * n * n) as f64 * PI.powi(3))
                        } else {
                            0.0
                        }
                    })
                    .collect();
                SpectralVector::new(coeffs).map_err(|e| invalid("problem.x0", e.to_string()))
            }
            X0Config::PowerDecay { amplitude, decay } => {
                let coeffs = (1..=n_modes).map(|n| amplitude * (n as f64).powf(-decay)).collect();
                SpectralVector::new(coeffs).map_err(|e| invalid("problem.x0", e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    /// Moment order for the Hölder estimator.
    pub p: f64,
    /// Claim-side moment order used for the predicted region. Moment
    /// scaling estimates the exponent uniformly in p for these Gaussian-type
    /// fields, so the claimed bounds are judged at a large p by default.
    pub claim_p: f64,
    /// Spatial indices to estimate the temporal exponent at.
    pub thetas: Vec<f64>,
    /// Verdict slack on the exponent scale.
    pub slack: f64,
    /// Confidence-interval half-width in standard errors.
    pub ci_multiplier: f64,
    pub n_lags: usize,
    /// Smallest lag in grid steps.
    pub lag_lo_steps: usize,
    /// Largest lag as a fraction of the horizon (must stay ≤ 1/4).
    pub lag_hi_fraction: f64,
    /// Spatial indices for the moment profile / divergence flags.
    pub profile_thetas: Vec<f64>,
    /// Moment order for the profile.
    pub profile_p: f64,
    /// Sampled grid times for profile and moment statistics.
    pub profile_time_samples: usize,
    /// Whether the claimed bounds are optimal (below-band estimates then
    /// count as violations rather than nested memberships).
    pub optimality_claimed: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            p: 4.0,
            claim_p: 100.0,
            thetas: vec![0.0],
            slack: 0.05,
            ci_multiplier: 2.0,
            n_lags: 8,
            lag_lo_steps: 4,
            lag_hi_fraction: 1.0 / 32.0,
            profile_thetas: vec![0.3, 0.7],
            profile_p: 2.0,
            profile_time_samples: 64,
            optimality_claimed: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GronwallSuiteConfig {
    pub n_cases: usize,
    pub grid_points: usize,
    /// Kernel exponents are drawn uniformly from [0, exponent_max].
    pub exponent_max: f64,
    pub target_mass: f64,
    pub mass_tol: f64,
}

impl Default for GronwallSuiteConfig {
    fn default() -> Self {
        Self {
            n_cases: 100,
            grid_points: 192,
            exponent_max: 0.9,
            target_mass: 0.5,
            mass_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssumptionSuiteConfig {
    pub alphas: Vec<f64>,
    pub horizon: f64,
    /// γ for the bounded-eigenfunction colored regime.
    pub gamma_q0: f64,
    /// (ε, γ) for the Hölder-eigenfunction colored regime.
    pub qeps_epsilon: f64,
    pub gamma_qeps: f64,
}

impl Default for AssumptionSuiteConfig {
    fn default() -> Self {
        Self { alphas: vec![0.2, 0.3, 0.4], horizon: 1.0, gamma_q0: 0.5, qeps_epsilon: 1.0, gamma_qeps: 0.25 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FactorizationConfig {
    pub alpha: f64,
    pub n_modes: usize,
    pub n_steps: usize,
    pub n_paths: usize,
    /// Also run at 2·n_steps to expose the refinement trend.
    pub refine: bool,
}

impl Default for FactorizationConfig {
    fn default() -> Self {
        Self { alpha: 0.2, n_modes: 8, n_steps: 4096, n_paths: 8, refine: true }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.mc.n_paths == 0 {
            return Err(invalid("mc.n_paths", "must be >= 1"));
        }
        let r = &self.report;
        if !(r.p >= 2.0) {
            return Err(invalid("report.p", "must be >= 2"));
        }
        if r.thetas.is_empty() {
            return Err(invalid("report.thetas", "must be non-empty"));
        }
        if !(r.slack >= 0.0) {
            return Err(invalid("report.slack", "must be >= 0"));
        }
        if r.n_lags < 4 {
            return Err(invalid("report.n_lags", "need at least 4 lags"));
        }
        if !(r.lag_hi_fraction > 0.0 && r.lag_hi_fraction <= 0.25) {
            return Err(invalid("report.lag_hi_fraction", "must lie in (0, 1/4]"));
        }
        if r.profile_time_samples == 0 {
            return Err(invalid("report.profile_time_samples", "must be >= 1"));
        }
        if !(self.factorization.alpha > 0.0 && self.factorization.alpha < 0.5) {
            return Err(invalid("factorization.alpha", "must lie in (0, 1/2)"));
        }
        if self.gronwall.n_cases == 0 {
            return Err(invalid("gronwall.n_cases", "must be >= 1"));
        }
        if !(self.gronwall.exponent_max >= 0.0 && self.gronwall.exponent_max < 1.0) {
            return Err(invalid("gronwall.exponent_max", "must lie in [0, 1)"));
        }
        if !(self.gronwall.target_mass > 0.0 && self.gronwall.target_mass < 1.0) {
            return Err(invalid("gronwall.target_mass", "must lie in (0, 1)"));
        }
        for a in &self.assumption.alphas {
            if !(*a > 0.0 && *a < 1.0) {
                return Err(invalid("assumption.alphas", format!("alpha {a} outside (0, 1)")));
            }
        }
        match self.experiment {
            ExperimentTag::OuWhite => {
                if self.problem.drift != FnConfig::Zero || self.problem.diffusion != FnConfig::One {
                    return Err(invalid(
                        "problem",
                        "ou_white requires drift = zero and diffusion = one",
                    ));
                }
                spde_core::regularity::ou_region(self.problem.gamma_claim, self.problem.alpha_claim)
                    .map_err(|e| invalid("problem.alpha_claim", e.to_string()))?;
            }
            ExperimentTag::SheWhite
            | ExperimentTag::SheColoredQ0
            | ExperimentTag::SheColoredQeps => {
                if matches!(self.experiment, ExperimentTag::SheColoredQ0 | ExperimentTag::SheColoredQeps)
                    && matches!(self.problem.noise, NoiseConfig::White)
                {
                    return Err(invalid("problem.noise", "colored experiments need colored noise"));
                }
                spde_core::regularity::predicted_region(
                    self.problem.beta_claim,
                    self.problem.gamma_claim,
                    self.problem.alpha_claim,
                    self.report.claim_p,
                )
                .map_err(|e| invalid("problem claims", e.to_string()))?;
            }
            _ => {}
        }
        self.build_problem().map(|_| ())
    }

    /// Materialize the core problem description from the config.
    pub fn build_problem(&self) -> Result<ProblemSpec, ConfigError> {
        let p = &self.problem;
        let grid = p.grid_size.unwrap_or(2 * p.n_modes);
        ProblemSpec::new(
            p.n_modes,
            grid,
            p.horizon,
            p.n_steps,
            p.x0.build(p.n_modes)?,
            p.drift.build(),
            p.diffusion.build(),
            p.noise.build(p.n_modes)?,
            p.beta_claim,
            p.gamma_claim,
            p.alpha_claim,
        )
        .map_err(|e| invalid("problem", e.to_string()))
    }
}
