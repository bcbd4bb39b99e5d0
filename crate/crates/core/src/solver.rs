//! Mild-solution trajectories and the factorization operators.
//!
//! The exponential Euler step applies the exact semigroup outside an Euler
//! update, matching the mild-solution structure term by term:
//! `X_{k+1} = S(Δt)[X_k + Δt·F(X_k) + G(X_k)ΔW_k]`. The Picard scheme
//! iterates the discrete fixed-point map
//! `X ↦ S(t)X₀ + Σ_j ∫_panel S(t−r)dr·F(X_j) + Σ_j S(t−t_j)G(X_j)ΔW_j`
//! on the full grid; deterministic convolutions use panel-exact semigroup
//! weights, stochastic sums use the adapted left-point rule. Both schemes
//! consume the same increments, so they are coupled pathwise.
//!
//! The factorization pair splits the stochastic convolution into the
//! singular-weight integral `G_α(t) = ∫₀ᵗ (t−r)^{−α} S(t−r) G(X(r)) dW(r)`
//! followed by the smoothing operator
//! `R_α f(t) = ∫₀ᵗ (t−r)^{α−1} S(t−r) f(r) dr`; the composition scaled by
//! `sin(πα)/π` reproduces the stochastic convolution.

use std::io::Write;

use statrs::function::gamma::{gamma, gamma_lr};
use thiserror::Error;

use crate::coefficients::{apply_f, apply_g_increment, ScalarLipschitz};
use crate::noise::{NoiseSpec, WienerIncrements};
use crate::rng::{standard_normal, SALT_OU, SALT_OU_RESIDUAL};
use crate::spectral::{eigenvalue, DstPlan, SpectralVector};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid problem: {detail}")]
    InvalidProblem { detail: String },
    #[error("increments do not match the problem: {detail}")]
    IncrementMismatch { detail: String },
    #[error("non-finite state at step {step} (blow-up)")]
    BlowUp { step: usize },
    #[error("Picard iteration did not converge in {max_iter} iterations; residuals {residuals:?}")]
    PicardNonConvergence { max_iter: usize, residuals: Vec<f64> },
    #[error("exact OU sampling requires zero drift and unit diffusion")]
    OuContract,
    #[error("alpha = {alpha} outside the admissible range {range}")]
    AlphaOutOfRange { alpha: f64, range: &'static str },
    #[error("trajectory does not match the problem: {detail}")]
    TrajectoryMismatch { detail: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Which scheme produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ExpEuler,
    Picard { iterations: usize },
    ExactOu,
    /// Direct discrete stochastic convolution `S⋄G`.
    StochConv,
    /// The singular-weight stochastic integral `G_α`.
    GAlpha,
    /// The deterministic smoothing convolution `R_α`.
    RAlpha,
    /// Externally supplied data (synthetic inputs, test fixtures).
    External,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::ExpEuler => write!(f, "exp_euler"),
            Scheme::Picard { iterations } => write!(f, "picard({iterations})"),
            Scheme::ExactOu => write!(f, "exact_ou"),
            Scheme::StochConv => write!(f, "stoch_conv"),
            Scheme::GAlpha => write!(f, "g_alpha"),
            Scheme::RAlpha => write!(f, "r_alpha"),
            Scheme::External => write!(f, "external"),
        }
    }
}

/// One sample path on a uniform grid, with its seed lineage.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<SpectralVector>,
    seed: u64,
    path_index: u64,
    scheme: Scheme,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        states: Vec<SpectralVector>,
        seed: u64,
        path_index: u64,
        scheme: Scheme,
    ) -> Result<Self, SolverError> {
        if times.len() != states.len() || times.is_empty() {
            return Err(SolverError::TrajectoryMismatch {
                detail: "times and states must share a positive length".into(),
            });
        }
        if !states.iter().all(|s| s.is_finite()) {
            return Err(SolverError::TrajectoryMismatch { detail: "non-finite state".into() });
        }
        Ok(Self { times, states, seed, path_index, scheme })
    }

    fn from_parts(
        times: Vec<f64>,
        states: Vec<SpectralVector>,
        seed: u64,
        path_index: u64,
        scheme: Scheme,
    ) -> Self {
        Self { times, states, seed, path_index, scheme }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SpectralVector] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &SpectralVector {
        &self.states[k]
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn n_modes(&self) -> usize {
        self.states[0].n_modes()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Coefficient-wise scaling, e.g. by `sin(πα)/π` after composing the
    /// factorization operators.
    pub fn scaled(&self, c: f64) -> Trajectory {
        let states = self
            .states
            .iter()
            .map(|s| SpectralVector::new(s.coeffs().iter().map(|x| c * x).collect()).unwrap())
            .collect();
        Trajectory::from_parts(self.times.clone(), states, self.seed, self.path_index, self.scheme)
    }

    /// CSV dump: header `t,mode_1,...,mode_N`, one row per grid time,
    /// 17-significant-digit decimal floats.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "t")?;
        for n in 1..=self.n_modes() {
            write!(w, ",mode_{n}")?;
        }
        writeln!(w)?;
        for (t, state) in self.times.iter().zip(&self.states) {
            write!(w, "{t:.16e}")?;
            for c in state.coeffs() {
                write!(w, ",{c:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// RMS-over-time of the `Ḣ^0` distance between two trajectories on the
/// same grid.
pub fn grid_l2_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    assert_eq!(a.times.len(), b.times.len(), "grids differ");
    let sum: f64 =
        a.states.iter().zip(&b.states).map(|(x, y)| x.l2_distance(y).powi(2)).sum();
    (sum / a.times.len() as f64).sqrt()
}

/// Problem data: truncation, grid, horizon, coefficients, noise and the
/// claimed regularity exponents for downstream reporting.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub n_modes: usize,
    pub grid_size: usize,
    pub horizon: f64,
    pub n_steps: usize,
    pub x0: SpectralVector,
    pub drift: ScalarLipschitz,
    pub diffusion: ScalarLipschitz,
    pub noise: NoiseSpec,
    pub beta_claim: f64,
    pub gamma_claim: f64,
    pub alpha_claim: f64,
}

impl ProblemSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_modes: usize,
        grid_size: usize,
        horizon: f64,
        n_steps: usize,
        x0: SpectralVector,
        drift: ScalarLipschitz,
        diffusion: ScalarLipschitz,
        noise: NoiseSpec,
        beta_claim: f64,
        gamma_claim: f64,
        alpha_claim: f64,
    ) -> Result<Self, SolverError> {
        let invalid = |detail: String| Err(SolverError::InvalidProblem { detail });
        if n_modes == 0 {
            return invalid("n_modes must be >= 1".into());
        }
        if grid_size < 2 * n_modes {
            return invalid(format!(
                "anti-aliasing requires grid_size >= 2·n_modes, got {grid_size} < {}",
                2 * n_modes
            ));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        if n_steps == 0 {
            return invalid("n_steps must be >= 1".into());
        }
        if x0.n_modes() != n_modes {
            return invalid(format!("x0 has {} modes, expected {n_modes}", x0.n_modes()));
        }
        if noise.n_modes() != n_modes {
            return invalid(format!("noise has {} modes, expected {n_modes}", noise.n_modes()));
        }
        if !x0.sobolev_norm(beta_claim).is_finite() {
            return invalid(format!("x0 has non-finite Ḣ^{beta_claim} norm"));
        }
        Ok(Self {
            n_modes,
            grid_size,
            horizon,
            n_steps,
            x0,
            drift,
            diffusion,
            noise,
            beta_claim,
            gamma_claim,
            alpha_claim,
        })
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time_grid(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n_steps).map(|k| k as f64 * dt).collect()
    }

    fn check_increments(&self, w: &WienerIncrements) -> Result<(), SolverError> {
        if w.n_steps() != self.n_steps || w.n_modes() != self.n_modes {
            return Err(SolverError::IncrementMismatch {
                detail: format!(
                    "increments are {}x{}, problem needs {}x{}",
                    w.n_steps(),
                    w.n_modes(),
                    self.n_steps,
                    self.n_modes
                ),
            });
        }
        let dt = self.dt();
        if (w.dt() - dt).abs() > 1e-12 * dt.max(1.0) {
            return Err(SolverError::IncrementMismatch {
                detail: format!("increment dt {} vs problem dt {}", w.dt(), dt),
            });
        }
        Ok(())
    }
}

/// Exponential Euler: exact semigroup applied to the Euler update. Aborts
/// with the offending step index if a state goes non-finite.
pub fn solve_exp_euler(p: &ProblemSpec, w: &WienerIncrements) -> Result<Trajectory, SolverError> {
    p.check_increments(w)?;
    let dt = p.dt();
    let plan = DstPlan::new(p.grid_size);
    let decay: Vec<f64> = (1..=p.n_modes).map(|n| (-eigenvalue(n) * dt).exp()).collect();
    let mut states = Vec::with_capacity(p.n_steps + 1);
    states.push(p.x0.clone());
    let mut current = p.x0.clone();
    for k in 0..p.n_steps {
        let drift_term = if p.drift.is_zero_map() {
            None
        } else {
            Some(apply_f(&current, &p.drift, &plan).0)
        };
        let (noise_term, _) = apply_g_increment(&current, &p.diffusion, w.row(k), &plan);
        let mut next = Vec::with_capacity(p.n_modes);
        for (n, d) in decay.iter().enumerate() {
            let f_n = drift_term.as_ref().map_or(0.0, |df| df.coeffs()[n]);
            let v = d * (current.coeffs()[n] + dt * f_n + noise_term.coeffs()[n]);
            if !v.is_finite() {
                return Err(SolverError::BlowUp { step: k + 1 });
            }
            next.push(v);
        }
        current = SpectralVector::new(next).map_err(|_| SolverError::BlowUp { step: k + 1 })?;
        states.push(current.clone());
    }
    Ok(Trajectory::from_parts(p.time_grid(), states, w.seed(), w.path_index(), Scheme::ExpEuler))
}

/// Picard iteration of the discrete mild-solution map, reusing the same
/// increments as the exponential Euler scheme. Returns the fixed point
/// with its iteration count; non-convergence carries the residual history.
pub fn picard_solve(
    p: &ProblemSpec,
    w: &WienerIncrements,
    max_iter: usize,
    tol: f64,
) -> Result<Trajectory, SolverError> {
    p.check_increments(w)?;
    let n = p.n_steps;
    let modes = p.n_modes;
    let dt = p.dt();
    let plan = DstPlan::new(p.grid_size);

    // per-mode lag tables: decay_pow[n][d] = e^{−λ_n d Δt},
    // drift_w[n][d] = ∫_{panel at lag d} e^{−λ_n (t_k − r)} dr
    let mut decay_pow = vec![vec![0.0; n + 1]; modes];
    let mut drift_w = vec![vec![0.0; n + 1]; modes];
    for m in 0..modes {
        let lam = eigenvalue(m + 1);
        let step_decay = (-lam * dt).exp();
        let panel = -(-lam * dt).exp_m1() / lam; // ∫₀^{Δt} e^{−λ u} du
        decay_pow[m][0] = 1.0;
        for d in 1..=n {
            decay_pow[m][d] = decay_pow[m][d - 1] * step_decay;
        }
        for d in 1..=n {
            drift_w[m][d] = decay_pow[m][d - 1] * panel;
        }
    }

    // initial iterate: the freely-evolved initial datum S(t)X₀
    let mut iterate: Vec<SpectralVector> = (0..=n)
        .map(|k| {
            SpectralVector::new(
                (0..modes).map(|m| decay_pow[m][k] * p.x0.coeffs()[m]).collect(),
            )
            .unwrap()
        })
        .collect();

    let mut residuals = Vec::new();
    for iter in 1..=max_iter {
        // coefficient terms at the current iterate
        let mut drift_terms: Vec<Option<SpectralVector>> = Vec::with_capacity(n);
        let mut noise_terms: Vec<SpectralVector> = Vec::with_capacity(n);
        for (j, state) in iterate.iter().take(n).enumerate() {
            drift_terms.push(if p.drift.is_zero_map() {
                None
            } else {
                Some(apply_f(state, &p.drift, &plan).0)
            });
            noise_terms.push(apply_g_increment(state, &p.diffusion, w.row(j), &plan).0);
        }
        let mut residual: f64 = 0.0;
        let mut next: Vec<SpectralVector> = Vec::with_capacity(n + 1);
        next.push(p.x0.clone());
        for k in 1..=n {
            let mut coeffs = Vec::with_capacity(modes);
            for m in 0..modes {
                let mut acc = decay_pow[m][k] * p.x0.coeffs()[m];
                for j in 0..k {
                    let d = k - j;
                    if let Some(df) = &drift_terms[j] {
                        acc += drift_w[m][d] * df.coeffs()[m];
                    }
                    acc += decay_pow[m][d] * noise_terms[j].coeffs()[m];
                }
                if !acc.is_finite() {
                    return Err(SolverError::BlowUp { step: k });
                }
                coeffs.push(acc);
            }
            let state = SpectralVector::new(coeffs).unwrap();
            residual = residual.max(state.l2_distance(&iterate[k]));
            next.push(state);
        }
        iterate = next;
        residuals.push(residual);
        if residual <= tol {
            return Ok(Trajectory::from_parts(
                p.time_grid(),
                iterate,
                w.seed(),
                w.path_index(),
                Scheme::Picard { iterations: iter },
            ));
        }
    }
    Err(SolverError::PicardNonConvergence { max_iter, residuals })
}

fn require_ou_contract(p: &ProblemSpec) -> Result<(), SolverError> {
    for u in [-2.0, -0.5, 0.0, 0.7, 1.9] {
        if p.drift.eval(u).abs() > 1e-12 || (p.diffusion.eval(u) - 1.0).abs() > 1e-12 {
            return Err(SolverError::OuContract);
        }
    }
    Ok(())
}

/// Distributionally exact Ornstein–Uhlenbeck sampling at the grid times:
/// per mode, `X_n(t+Δ) = e^{−λ_n Δ} X_n(t) + ζ_n` with
/// `ζ_n ~ N(0, q_n (1−e^{−2λ_n Δ})/(2λ_n))`. Requires zero drift and unit
/// diffusion.
pub fn exact_ou(p: &ProblemSpec, seed: u64, path_index: u64) -> Result<Trajectory, SolverError> {
    require_ou_contract(p)?;
    let dt = p.dt();
    let modes = p.n_modes;
    let q = p.noise.q();
    let decay: Vec<f64> = (1..=modes).map(|n| (-eigenvalue(n) * dt).exp()).collect();
    let sigma: Vec<f64> = (0..modes)
        .map(|m| {
            let lam = eigenvalue(m + 1);
            (q[m] * (1.0 - decay[m] * decay[m]) / (2.0 * lam)).sqrt()
        })
        .collect();
    let mut states = Vec::with_capacity(p.n_steps + 1);
    states.push(p.x0.clone());
    let mut current: Vec<f64> = p.x0.coeffs().to_vec();
    for k in 0..p.n_steps {
        for m in 0..modes {
            let z = if sigma[m] == 0.0 {
                0.0
            } else {
                sigma[m] * standard_normal(seed, path_index, k as u64, m as u64, SALT_OU)
            };
            current[m] = decay[m] * current[m] + z;
        }
        states.push(SpectralVector::new(current.clone()).unwrap());
    }
    Ok(Trajectory::from_parts(p.time_grid(), states, seed, path_index, Scheme::ExactOu))
}

/// Exact OU sampling pathwise-coupled to a given increment matrix: the
/// panel noise is split into its projection onto the plain increment plus
/// an independent residual, so the trajectory is distributionally exact
/// while remaining strongly comparable to schemes driven by `w`.
pub fn exact_ou_coupled(p: &ProblemSpec, w: &WienerIncrements) -> Result<Trajectory, SolverError> {
    require_ou_contract(p)?;
    p.check_increments(w)?;
    let dt = p.dt();
    let modes = p.n_modes;
    let q = p.noise.q();
    let mut states = Vec::with_capacity(p.n_steps + 1);
    states.push(p.x0.clone());
    let mut current: Vec<f64> = p.x0.coeffs().to_vec();
    let mut proj = Vec::with_capacity(modes);
    let mut resid = Vec::with_capacity(modes);
    let mut decay = Vec::with_capacity(modes);
    for (m, q_m) in q.iter().enumerate() {
        let lam = eigenvalue(m + 1);
        let d = (-lam * dt).exp();
        // a = Cov(∫ e^{−λ(Δ−s)}dW, ΔW)/Var(ΔW) = (1−e^{−λΔ})/(λΔ)
        let a = (1.0 - d) / (lam * dt);
        let full_var = q_m * (1.0 - d * d) / (2.0 * lam);
        let b = (full_var - a * a * q_m * dt).max(0.0).sqrt();
        decay.push(d);
        proj.push(a);
        resid.push(b);
    }
    for k in 0..p.n_steps {
        let row = w.row(k);
        for m in 0..modes {
            let eta = if resid[m] == 0.0 {
                0.0
            } else {
                resid[m]
                    * standard_normal(w.seed(), w.path_index(), k as u64, m as u64, SALT_OU_RESIDUAL)
            };
            current[m] = decay[m] * current[m] + proj[m] * row[m] + eta;
        }
        states.push(SpectralVector::new(current.clone()).unwrap());
    }
    Ok(Trajectory::from_parts(p.time_grid(), states, w.seed(), w.path_index(), Scheme::ExactOu))
}

/// Per-step Nemytskii diffusion increments `G(X_j)ΔW_j` for a trajectory.
fn noise_increments(
    p: &ProblemSpec,
    w: &WienerIncrements,
    traj: &Trajectory,
    plan: &DstPlan,
) -> Result<Vec<SpectralVector>, SolverError> {
    if traj.n_steps() != p.n_steps || traj.n_modes() != p.n_modes {
        return Err(SolverError::TrajectoryMismatch {
            detail: format!(
                "trajectory is {} steps x {} modes, problem needs {} x {}",
                traj.n_steps(),
                traj.n_modes(),
                p.n_steps,
                p.n_modes
            ),
        });
    }
    Ok((0..p.n_steps)
        .map(|j| apply_g_increment(traj.state(j), &p.diffusion, w.row(j), plan).0)
        .collect())
}

/// The plain discrete stochastic convolution
/// `S⋄G(t_k) = Σ_{j<k} S(t_k−t_j) G(X_j) ΔW_j` (adapted left-point rule).
pub fn direct_stochastic_convolution(
    p: &ProblemSpec,
    w: &WienerIncrements,
    traj: &Trajectory,
) -> Result<Trajectory, SolverError> {
    p.check_increments(w)?;
    let plan = DstPlan::new(p.grid_size);
    let incs = noise_increments(p, w, traj, &plan)?;
    let states = convolve_modes(p, &incs, |d, dt, lam| (-lam * d as f64 * dt).exp());
    Ok(Trajectory::from_parts(p.time_grid(), states, w.seed(), w.path_index(), Scheme::StochConv))
}

/// The factorization integrand `G_α`: singular-weight stochastic integral
/// with the adapted left-point rule; the weight on the final panel (where
/// `(t_k − r)^{−α}` blows up) is its exact panel average.
pub fn factorized_g_alpha(
    p: &ProblemSpec,
    w: &WienerIncrements,
    traj: &Trajectory,
    alpha: f64,
) -> Result<Trajectory, SolverError> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(SolverError::AlphaOutOfRange { alpha, range: "(0, 1/2)" });
    }
    p.check_increments(w)?;
    let plan = DstPlan::new(p.grid_size);
    let incs = noise_increments(p, w, traj, &plan)?;
    let dt = p.dt();
    let omega: Vec<f64> = (0..=p.n_steps)
        .map(|d| match d {
            0 => 0.0,
            1 => dt.powf(-alpha) / (1.0 - alpha),
            _ => (d as f64 * dt).powf(-alpha),
        })
        .collect();
    let states =
        convolve_modes(p, &incs, |d, dt, lam| omega[d] * (-lam * d as f64 * dt).exp());
    Ok(Trajectory::from_parts(p.time_grid(), states, w.seed(), w.path_index(), Scheme::GAlpha))
}

/// Shared per-mode lag convolution `out_k = Σ_{j<k} weight(k−j)·inc_j`.
fn convolve_modes(
    p: &ProblemSpec,
    incs: &[SpectralVector],
    weight: impl Fn(usize, f64, f64) -> f64,
) -> Vec<SpectralVector> {
    let n = p.n_steps;
    let modes = p.n_modes;
    let dt = p.dt();
    let mut out = vec![vec![0.0; modes]; n + 1];
    for m in 0..modes {
        let lam = eigenvalue(m + 1);
        let w: Vec<f64> = (0..=n).map(|d| weight(d, dt, lam)).collect();
        for (k, row) in out.iter_mut().enumerate().skip(1) {
            let mut acc = 0.0;
            for (j, inc) in incs.iter().take(k).enumerate() {
                acc += w[k - j] * inc.coeffs()[m];
            }
            row[m] = acc;
        }
    }
    out.into_iter()
        .map(SpectralVector::new)
        .collect::<Result<Vec<_>, _>>()
        .expect("convolution produced non-finite state")
}

/// The smoothing operator `R_α f(t_k) = ∫₀^{t_k} (t_k−r)^{α−1} S(t_k−r) f(r) dr`
/// with the weight and semigroup integrated exactly on every panel
/// (incomplete-gamma closed form per mode) against right-endpoint samples
/// of `f`. Applying it to `G_α` and scaling by `sin(πα)/π` reconstructs
/// the stochastic convolution.
pub fn r_alpha(f_traj: &Trajectory, alpha: f64) -> Result<Trajectory, SolverError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SolverError::AlphaOutOfRange { alpha, range: "(0, 1)" });
    }
    let n = f_traj.n_steps();
    let modes = f_traj.n_modes();
    let dt = f_traj.dt();
    if n == 0 || dt <= 0.0 {
        return Err(SolverError::TrajectoryMismatch { detail: "need a positive time grid".into() });
    }
    let gamma_alpha = gamma(alpha);
    let mut out = vec![vec![0.0; modes]; n + 1];
    for m in 0..modes {
        let lam = eigenvalue(m + 1);
        // w[d] = ∫_{(d−1)Δt}^{dΔt} u^{α−1} e^{−λu} du = Γ(α)λ^{−α}·ΔP(α, λu)
        let mut w = vec![0.0; n + 1];
        let scale = gamma_alpha * lam.powf(-alpha);
        let mut prev = 0.0;
        for (d, w_d) in w.iter_mut().enumerate().skip(1) {
            let x = lam * dt * d as f64;
            let cur = if x > 700.0 { 1.0 } else { gamma_lr(alpha, x) };
            *w_d = scale * (cur - prev);
            prev = cur;
        }
        for (k, row) in out.iter_mut().enumerate().skip(1) {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += w[k - j + 1] * f_traj.state(j).coeffs()[m];
            }
            row[m] = acc;
        }
    }
    let states = out
        .into_iter()
        .map(SpectralVector::new)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| SolverError::TrajectoryMismatch { detail: "non-finite R_alpha output".into() })?;
    Ok(Trajectory::from_parts(
        f_traj.times().to_vec(),
        states,
        f_traj.seed(),
        f_traj.path_index(),
        Scheme::RAlpha,
    ))
}
