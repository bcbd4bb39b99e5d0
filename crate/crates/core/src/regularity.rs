//! Statistical regularity instruments: temporal Hölder exponent estimation
//! by moment-scaling regression, spatial Sobolev moment profiles with
//! truncation diagnostics, and the predicted admissible exponent regions
//! the estimates are judged against.
//!
//! The Hölder estimator regresses `log E‖X(t+h)−X(t)‖_θ^p` (averaged over
//! grid offsets and paths) on `log h` over a geometric lag set; the
//! estimate is `slope / p` with a confidence interval from the regression
//! standard error. Moment scaling is the faithful observable for
//! `L^p(Ω; C^δ)`-type statements; pathwise oscillation ratios are not used.

use thiserror::Error;

use crate::solver::Trajectory;

#[derive(Debug, Error)]
pub enum RegularityError {
    #[error("need at least 4 lags, got {n}")]
    TooFewLags { n: usize },
    #[error("lags must span at least 1.5 decades inside (0, T/4]; got [{lo}, {hi}] with T = {horizon}")]
    BadLagSpan { lo: f64, hi: f64, horizon: f64 },
    #[error("need at least {min} paths, got {n}")]
    TooFewPaths { min: usize, n: usize },
    #[error("moment order p must be >= 2, got {p}")]
    BadMomentOrder { p: f64 },
    #[error("degenerate increments: empirical moment vanished at lag {lag}")]
    DegenerateIncrements { lag: f64 },
    #[error("trajectory incompatible with accumulator: {detail}")]
    Mismatch { detail: String },
    #[error("parameter constraint violated: {constraint}")]
    RegionConstraint { constraint: String },
}

/// Minimum ensemble size for a Hölder estimate.
pub const MIN_PATHS: usize = 30;
/// Default verdict slack on the exponent scale.
pub const DEFAULT_SLACK: f64 = 0.05;
/// Default confidence-interval half-width in standard errors.
pub const DEFAULT_CI_MULTIPLIER: f64 = 2.0;

/// Geometric lag set from `lo` to `hi` (inclusive endpoints).
pub fn geometric_lags(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && hi > lo && lo > 0.0);
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| lo * ratio.powi(i as i32)).collect()
}

/// Result of the moment-scaling regression.
#[derive(Debug, Clone)]
pub struct HolderEstimate {
    pub theta: f64,
    pub p: f64,
    pub delta_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub n_paths: usize,
    /// The lag set actually used (rounded to grid multiples).
    pub lags: Vec<f64>,
    /// Empirical `E‖X(t+h)−X(t)‖_θ^p` per lag.
    pub moments: Vec<f64>,
}

/// Streaming accumulator for the Hölder estimator: ingest one trajectory at
/// a time, merge partials in any grouping, finish once.
#[derive(Debug, Clone)]
pub struct HolderAccumulator {
    theta: f64,
    p: f64,
    dt: f64,
    lag_steps: Vec<usize>,
    sums: Vec<f64>,
    counts: Vec<u64>,
    n_paths: usize,
}

impl HolderAccumulator {
    pub fn new(
        theta: f64,
        p: f64,
        dt: f64,
        horizon: f64,
        lags: &[f64],
    ) -> Result<Self, RegularityError> {
        if !(p >= 2.0) {
            return Err(RegularityError::BadMomentOrder { p });
        }
        if lags.len() < 4 {
            return Err(RegularityError::TooFewLags { n: lags.len() });
        }
        let lo = lags.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = lags.iter().cloned().fold(0.0, f64::max);
        if !(lo > 0.0) || hi > horizon / 4.0 * (1.0 + 1e-12) || hi / lo < 31.62 {
            return Err(RegularityError::BadLagSpan { lo, hi, horizon });
        }
        let mut lag_steps: Vec<usize> =
            lags.iter().map(|h| ((h / dt).round() as usize).max(1)).collect();
        lag_steps.dedup();
        if lag_steps.len() < 4 {
            return Err(RegularityError::TooFewLags { n: lag_steps.len() });
        }
        let n = lag_steps.len();
        Ok(Self {
            theta,
            p,
            dt,
            lag_steps,
            sums: vec![0.0; n],
            counts: vec![0; n],
            n_paths: 0,
        })
    }

    /// Actual lags after rounding to grid multiples.
    pub fn lags(&self) -> Vec<f64> {
        self.lag_steps.iter().map(|s| *s as f64 * self.dt).collect()
    }

    pub fn ingest(&mut self, traj: &Trajectory) -> Result<(), RegularityError> {
        if (traj.dt() - self.dt).abs() > 1e-12 * self.dt {
            return Err(RegularityError::Mismatch {
                detail: format!("trajectory dt {} vs accumulator dt {}", traj.dt(), self.dt),
            });
        }
        let n = traj.n_steps();
        for (li, &s) in self.lag_steps.iter().enumerate() {
            if s > n {
                return Err(RegularityError::Mismatch {
                    detail: format!("lag of {s} steps exceeds trajectory length {n}"),
                });
            }
            let mut acc = 0.0;
            for i in 0..=(n - s) {
                let mut d2 = 0.0;
                let a = traj.state(i + s).coeffs();
                let b = traj.state(i).coeffs();
                for (m, (x, y)) in a.iter().zip(b).enumerate() {
                    let w = crate::spectral::eigenvalue(m + 1).powf(self.theta);
                    d2 += w * (x - y) * (x - y);
                }
                acc += d2.powf(self.p / 2.0);
            }
            self.sums[li] += acc;
            self.counts[li] += (n - s + 1) as u64;
        }
        self.n_paths += 1;
        Ok(())
    }

    pub fn merge(mut self, other: Self) -> Self {
        assert_eq!(self.lag_steps, other.lag_steps, "incompatible accumulators");
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n_paths += other.n_paths;
        self
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn finish(&self) -> Result<HolderEstimate, RegularityError> {
        self.finish_with(DEFAULT_CI_MULTIPLIER)
    }

    pub fn finish_with(&self, ci_multiplier: f64) -> Result<HolderEstimate, RegularityError> {
        if self.n_paths < MIN_PATHS {
            return Err(RegularityError::TooFewPaths { min: MIN_PATHS, n: self.n_paths });
        }
        let lags = self.lags();
        let mut moments = Vec::with_capacity(lags.len());
        for (li, &lag) in lags.iter().enumerate() {
            let m = self.sums[li] / self.counts[li] as f64;
            if !(m > 0.0) || !m.is_finite() {
                return Err(RegularityError::DegenerateIncrements { lag });
            }
            moments.push(m);
        }
        let pts: Vec<(f64, f64)> =
            lags.iter().zip(&moments).map(|(h, m)| (h.ln(), m.ln())).collect();
        let (slope, se) = ols_with_se(&pts);
        let delta_hat = slope / self.p;
        let half = ci_multiplier * se / self.p;
        Ok(HolderEstimate {
            theta: self.theta,
            p: self.p,
            delta_hat,
            ci_lo: delta_hat - half,
            ci_hi: delta_hat + half,
            slope,
            slope_se: se,
            n_paths: self.n_paths,
            lags,
            moments,
        })
    }
}

/// One-shot Hölder estimate over a stored ensemble.
pub fn estimate_holder(
    paths: &[Trajectory],
    theta: f64,
    p: f64,
    lags: &[f64],
) -> Result<HolderEstimate, RegularityError> {
    let first = paths.first().ok_or(RegularityError::TooFewPaths { min: MIN_PATHS, n: 0 })?;
    let horizon = *first.times().last().unwrap();
    let mut acc = HolderAccumulator::new(theta, p, first.dt(), horizon, lags)?;
    for traj in paths {
        acc.ingest(traj)?;
    }
    acc.finish()
}

fn ols_with_se(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let xbar: f64 = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ybar: f64 = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.0 - xbar)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (slope * p.0 + intercept);
            r * r
        })
        .sum();
    let dof = (pts.len() as f64 - 2.0).max(1.0);
    let se = (ss_res / dof / sxx).sqrt();
    (slope, se)
}

/// One spatial profile point: sup-in-time p-th moment of `‖X(t)‖_θ` with
/// the half-spectrum truncation diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct SpatialProfilePoint {
    pub theta: f64,
    pub p: f64,
    /// `sup_t` of the empirical p-th moment over all modes.
    pub sup_moment: f64,
    /// Same quantity with the top half of the modes zeroed.
    pub sup_moment_half: f64,
    /// `(full/half)^{2/p}` at the argmax time — the variance-scale ratio.
    pub ratio: f64,
    /// Divergence threshold `1 + 1/√N` the ratio is compared against.
    pub threshold: f64,
    pub divergent: bool,
}

/// Streaming accumulator for the spatial profile over a sampled time set.
#[derive(Debug, Clone)]
pub struct SpatialAccumulator {
    p: f64,
    thetas: Vec<f64>,
    time_indices: Vec<usize>,
    n_modes: usize,
    full: Vec<f64>, // theta-major [theta][time]
    half: Vec<f64>,
    n_paths: usize,
}

impl SpatialAccumulator {
    /// `time_samples` grid indices are spread evenly over `(0, n_steps]`
    /// (the initial time is excluded: a deterministic datum there carries
    /// no information about the noise response).
    pub fn new(p: f64, thetas: &[f64], n_steps: usize, n_modes: usize, time_samples: usize) -> Self {
        assert!(p >= 1.0 && !thetas.is_empty());
        let count = time_samples.clamp(1, n_steps);
        let time_indices: Vec<usize> =
            (1..=count).map(|i| (i * n_steps) / count).collect();
        let cells = thetas.len() * time_indices.len();
        Self {
            p,
            thetas: thetas.to_vec(),
            time_indices,
            n_modes,
            full: vec![0.0; cells],
            half: vec![0.0; cells],
            n_paths: 0,
        }
    }

    pub fn ingest(&mut self, traj: &Trajectory) -> Result<(), RegularityError> {
        if traj.n_modes() != self.n_modes {
            return Err(RegularityError::Mismatch {
                detail: format!("trajectory has {} modes, expected {}", traj.n_modes(), self.n_modes),
            });
        }
        let nt = self.time_indices.len();
        for (ti, &k) in self.time_indices.iter().enumerate() {
            let coeffs = traj.state(k).coeffs();
            for (qi, &theta) in self.thetas.iter().enumerate() {
                let mut full = 0.0;
                let mut half = 0.0;
                for (m, c) in coeffs.iter().enumerate() {
                    let w = crate::spectral::eigenvalue(m + 1).powf(theta) * c * c;
                    full += w;
                    if m < self.n_modes / 2 {
                        half += w;
                    }
                }
                self.full[qi * nt + ti] += full.powf(self.p / 2.0);
                self.half[qi * nt + ti] += half.powf(self.p / 2.0);
            }
        }
        self.n_paths += 1;
        Ok(())
    }

    pub fn merge(mut self, other: Self) -> Self {
        assert_eq!(self.time_indices, other.time_indices);
        for (a, b) in self.full.iter_mut().zip(&other.full) {
            *a += b;
        }
        for (a, b) in self.half.iter_mut().zip(&other.half) {
            *a += b;
        }
        self.n_paths += other.n_paths;
        self
    }

    pub fn finish(&self) -> Vec<SpatialProfilePoint> {
        let nt = self.time_indices.len();
        let inv = 1.0 / self.n_paths.max(1) as f64;
        let threshold = 1.0 + 1.0 / (self.n_modes as f64).sqrt();
        self.thetas
            .iter()
            .enumerate()
            .map(|(qi, &theta)| {
                let mut sup = 0.0f64;
                let mut sup_half = 0.0f64;
                let mut ratio_at_sup = 1.0;
                for ti in 0..nt {
                    let f = self.full[qi * nt + ti] * inv;
                    let h = self.half[qi * nt + ti] * inv;
                    if f > sup {
                        sup = f;
                        ratio_at_sup = if h > 0.0 {
                            (f / h).powf(2.0 / self.p)
                        } else if f > 0.0 {
                            f64::INFINITY
                        } else {
                            1.0
                        };
                    }
                    sup_half = sup_half.max(h);
                }
                SpatialProfilePoint {
                    theta,
                    p: self.p,
                    sup_moment: sup,
                    sup_moment_half: sup_half,
                    ratio: ratio_at_sup,
                    threshold,
                    divergent: ratio_at_sup > threshold,
                }
            })
            .collect()
    }
}

/// One-shot spatial profile over a stored ensemble (all grid times sampled).
pub fn spatial_profile(
    paths: &[Trajectory],
    p: f64,
    thetas: &[f64],
) -> Result<Vec<SpatialProfilePoint>, RegularityError> {
    let first = paths.first().ok_or(RegularityError::TooFewPaths { min: 1, n: 0 })?;
    let mut acc = SpatialAccumulator::new(p, thetas, first.n_steps(), first.n_modes(), first.n_steps());
    for t in paths {
        acc.ingest(t)?;
    }
    Ok(acc.finish())
}

/// Admissible-δ formula of one membership claim.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundFormula {
    /// `δ < value` (open supremum).
    OpenSup { value: f64 },
    /// `δ = intercept + slope·θ` (membership at this exponent; smaller δ nests).
    Affine { intercept: f64, slope: f64 },
    /// Initial-datum branch `min((β−θ)/2, 1)`.
    DatumDecay { beta: f64 },
}

impl BoundFormula {
    pub fn delta_bound(&self, theta: f64) -> f64 {
        match self {
            BoundFormula::OpenSup { value } => *value,
            BoundFormula::Affine { intercept, slope } => intercept + slope * theta,
            BoundFormula::DatumDecay { beta } => ((beta - theta) / 2.0).min(1.0),
        }
    }
}

/// One membership claim: a θ window and the δ exponent admitted on it.
#[derive(Debug, Clone)]
pub struct Membership {
    pub label: &'static str,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
    pub formula: BoundFormula,
}

impl Membership {
    pub fn contains_theta(&self, theta: f64) -> bool {
        let above = if self.lo_open { theta > self.theta_lo } else { theta >= self.theta_lo };
        let below = if self.hi_open { theta < self.theta_hi } else { theta <= self.theta_hi };
        above && below
    }

    pub fn delta_bound(&self, theta: f64) -> Option<f64> {
        self.contains_theta(theta).then(|| self.formula.delta_bound(theta))
    }
}

/// The enumerated union of admissible `(δ, θ)` memberships for the claimed
/// `(β, γ, α, p)`. Each membership is reported separately downstream.
#[derive(Debug, Clone)]
pub struct PredictedRegion {
    pub beta: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub p: f64,
    pub memberships: Vec<Membership>,
}

impl PredictedRegion {
    /// All membership bounds applicable at a given θ.
    pub fn bounds_at(&self, theta: f64) -> Vec<(&Membership, f64)> {
        self.memberships
            .iter()
            .filter_map(|m| m.delta_bound(theta).map(|b| (m, b)))
            .collect()
    }

    /// The largest admissible δ at θ across memberships, if any applies.
    pub fn best_bound_at(&self, theta: f64) -> Option<f64> {
        self.bounds_at(theta).into_iter().map(|(_, b)| b).fold(None, |acc, b| {
            Some(acc.map_or(b, |a: f64| a.max(b)))
        })
    }
}

/// Admissible exponent region for the mild solution under the claimed
/// parameters. Preconditions: `β ≥ γ ≥ 0`, `p > 2`, `α ∈ (1/p, 1/2)`;
/// violations name the failing inequality.
pub fn predicted_region(
    beta: f64,
    gamma: f64,
    alpha: f64,
    p: f64,
) -> Result<PredictedRegion, RegularityError> {
    let fail = |constraint: &str| {
        Err(RegularityError::RegionConstraint { constraint: constraint.to_string() })
    };
    if !(gamma >= 0.0) {
        return fail("gamma >= 0");
    }
    if !(beta >= gamma) {
        return fail("beta >= gamma");
    }
    if !(p > 2.0) {
        return fail("p > 2");
    }
    if !(alpha > 1.0 / p) {
        return fail("alpha > 1/p");
    }
    if !(alpha < 0.5) {
        return fail("alpha < 1/2");
    }
    let base = alpha - 1.0 / p;
    let mut memberships = Vec::new();
    if gamma == 0.0 {
        memberships.push(Membership {
            label: "base",
            theta_lo: 0.0,
            theta_hi: 0.0,
            lo_open: false,
            hi_open: false,
            formula: BoundFormula::OpenSup { value: base },
        });
        memberships.push(Membership {
            label: "intermediate",
            theta_lo: 0.0,
            theta_hi: 2.0 * base,
            lo_open: true,
            hi_open: true,
            formula: BoundFormula::Affine { intercept: base, slope: -0.5 },
        });
    } else {
        memberships.push(Membership {
            label: "base",
            theta_lo: gamma,
            theta_hi: gamma,
            lo_open: false,
            hi_open: false,
            formula: BoundFormula::OpenSup { value: base },
        });
        memberships.push(Membership {
            label: "below_gamma",
            theta_lo: 0.0,
            theta_hi: gamma,
            lo_open: true,
            hi_open: true,
            formula: BoundFormula::Affine { intercept: base, slope: 0.0 },
        });
        memberships.push(Membership {
            label: "intermediate",
            theta_lo: gamma,
            theta_hi: gamma + 2.0 * base,
            lo_open: true,
            hi_open: true,
            formula: BoundFormula::Affine { intercept: base + gamma / 2.0, slope: -0.5 },
        });
    }
    memberships.push(Membership {
        label: "datum",
        theta_lo: 0.0,
        theta_hi: beta,
        lo_open: false,
        hi_open: false,
        formula: BoundFormula::DatumDecay { beta },
    });
    Ok(PredictedRegion { beta, gamma, alpha, p, memberships })
}

/// Admissible region for the stochastic convolution alone (the
/// Ornstein–Uhlenbeck process): `δ < α` on `θ ∈ [0, γ]` and
/// `δ < α − (θ−γ)/2` on `θ ∈ (γ, γ+2α)`. `alpha` is the supremum of
/// admissible singular-weight exponents (1/2 included for trace-class
/// covariance), so both branches are open suprema.
pub fn ou_region(gamma: f64, alpha: f64) -> Result<PredictedRegion, RegularityError> {
    if !(gamma >= 0.0) {
        return Err(RegularityError::RegionConstraint { constraint: "gamma >= 0".into() });
    }
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(RegularityError::RegionConstraint { constraint: "alpha in (0, 1/2]".into() });
    }
    Ok(PredictedRegion {
        beta: gamma,
        gamma,
        alpha,
        p: f64::INFINITY,
        memberships: vec![
            Membership {
                label: "base",
                theta_lo: 0.0,
                theta_hi: gamma,
                lo_open: false,
                hi_open: false,
                formula: BoundFormula::OpenSup { value: alpha },
            },
            Membership {
                label: "intermediate",
                theta_lo: gamma,
                theta_hi: gamma + 2.0 * alpha,
                lo_open: true,
                hi_open: true,
                formula: BoundFormula::Affine { intercept: alpha + gamma / 2.0, slope: -0.5 },
            },
        ],
    })
}

/// Machine-readable verdict codes: 0 consistent, 1 inconclusive, 2 violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconclusive,
    Violated,
}

impl Verdict {
    pub fn code(&self) -> u8 {
        match self {
            Verdict::Consistent => 0,
            Verdict::Inconclusive => 1,
            Verdict::Violated => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    None,
    /// Measured smoother than the bound permits (flags a modeling error
    /// when the bound is optimal).
    Above,
    /// Measured rougher than the claimed membership.
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerdictDetail {
    pub verdict: Verdict,
    pub direction: Direction,
}

/// Compare an estimate against a membership bound.
///
/// Consistent when the confidence interval overlaps the slack band around
/// the bound. A membership claim is one-sided, so away from the band the
/// verdict depends on whether the bound is claimed optimal: a smoother
/// estimate (above) flags a modeling error only against an optimal bound,
/// and a rougher estimate (below) is a violation only when optimality pins
/// the exponent — otherwise Hölder classes nest and the estimate stays
/// consistent in the smoother direction while genuinely contradicting the
/// membership in the rougher one.
pub fn consistency_verdict(
    est: &HolderEstimate,
    bound: f64,
    slack: f64,
    optimality_claimed: bool,
) -> VerdictDetail {
    let band_lo = bound - slack;
    let band_hi = bound + slack;
    let width = est.ci_hi - est.ci_lo;
    if est.ci_lo <= band_hi && est.ci_hi >= band_lo {
        return VerdictDetail { verdict: Verdict::Consistent, direction: Direction::None };
    }
    if est.ci_lo > band_hi {
        if !optimality_claimed {
            return VerdictDetail { verdict: Verdict::Consistent, direction: Direction::Above };
        }
        if est.ci_lo - band_hi > width {
            return VerdictDetail { verdict: Verdict::Violated, direction: Direction::Above };
        }
        return VerdictDetail { verdict: Verdict::Inconclusive, direction: Direction::Above };
    }
    // interval entirely below the band
    if !optimality_claimed {
        return VerdictDetail { verdict: Verdict::Consistent, direction: Direction::Below };
    }
    if band_lo - est.ci_hi > width {
        return VerdictDetail { verdict: Verdict::Violated, direction: Direction::Below };
    }
    VerdictDetail { verdict: Verdict::Inconclusive, direction: Direction::Below }
}

/// One report row: estimate vs bound at a θ.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub theta: f64,
    pub p: f64,
    pub delta_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bound: f64,
    pub verdict: VerdictDetail,
    pub membership: &'static str,
}

/// Estimated exponents with predicted bounds and verdicts, serializable to
/// the report CSV `theta,p,delta_hat,ci_lo,ci_hi,bound,verdict`.
#[derive(Debug, Clone, Default)]
pub struct RegularityReport {
    pub rows: Vec<ReportRow>,
}

impl RegularityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,p,delta_hat,ci_lo,ci_hi,bound,verdict\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                r.theta,
                r.p,
                r.delta_hat,
                r.ci_lo,
                r.ci_hi,
                r.bound,
                r.verdict.verdict.code()
            ));
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::from("regularity summary\n");
        for r in &self.rows {
            let dir = match r.verdict.direction {
                Direction::None => "",
                Direction::Above => " (above: smoother than the bound)",
                Direction::Below => " (below: rougher than the bound)",
            };
            out.push_str(&format!(
                "theta={:.4} p={:.1} [{}]: delta_hat={:.4} ci=[{:.4},{:.4}] bound={:.4} -> {:?}{}\n",
                r.theta,
                r.p,
                r.membership,
                r.delta_hat,
                r.ci_lo,
                r.ci_hi,
                r.bound,
                r.verdict.verdict,
                dir
            ));
        }
        out
    }

    pub fn any_violated(&self) -> bool {
        self.rows.iter().any(|r| r.verdict.verdict == Verdict::Violated)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::ScalarLipschitz;
    use crate::noise::NoiseSpec;
    use crate::rng::{standard_normal, SALT_SYNTHETIC};
    use crate::solver::{exact_ou, ProblemSpec, Scheme, Trajectory};
    use crate::spectral::SpectralVector;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Exact fractional Brownian motion on a uniform grid by Cholesky
    /// factorization of the covariance — the calibration oracle.
    fn fbm_paths(h: f64, n_steps: usize, horizon: f64, n_paths: usize, seed: u64) -> Vec<Trajectory> {
        let dt = horizon / n_steps as f64;
        let times: Vec<f64> = (0..=n_steps).map(|k| k as f64 * dt).collect();
        let n = n_steps;
        // covariance of increments-free grid values (t_1..t_n)
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let ti = times[i + 1];
                let tj = times[j + 1];
                cov[i * n + j] =
                    0.5 * (ti.powf(2.0 * h) + tj.powf(2.0 * h) - (ti - tj).abs().powf(2.0 * h));
            }
        }
        // in-place Cholesky
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = cov[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    l[i * n + i] = s.max(1e-18).sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        (0..n_paths)
            .map(|path| {
                let z: Vec<f64> = (0..n)
                    .map(|k| standard_normal(seed, path as u64, k as u64, 0, SALT_SYNTHETIC))
                    .collect();
                let mut states = Vec::with_capacity(n + 1);
                states.push(SpectralVector::zero(1));
                for i in 0..n {
                    let mut v = 0.0;
                    for k in 0..=i {
                        v += l[i * n + k] * z[k];
                    }
                    states.push(SpectralVector::new(vec![v]).unwrap());
                }
                Trajectory::new(times.clone(), states, seed, path as u64, Scheme::External).unwrap()
            })
            .collect()
    }

    #[test]
    fn estimator_recovers_brownian_scaling() {
        // Brownian motion: δ̂ ≈ 1/2 at p = 2
        let paths = fbm_paths(0.5, 512, 1.0, 64, 3);
        let lags = geometric_lags(4.0 / 512.0, 0.25, 8);
        let est = estimate_holder(&paths, 0.0, 2.0, &lags).unwrap();
        assert!((est.delta_hat - 0.5).abs() < 0.05, "delta {}", est.delta_hat);
    }

    #[test]
    fn estimator_calibration_on_fbm() {
        for h in [0.1, 0.2, 0.3, 0.45] {
            let paths = fbm_paths(h, 512, 1.0, 200, 11);
            let lags = geometric_lags(4.0 / 512.0, 0.25, 8);
            let est = estimate_holder(&paths, 0.0, 2.0, &lags).unwrap();
            assert!(
                (est.delta_hat - h).abs() < 0.03,
                "H = {h}: recovered {}",
                est.delta_hat
            );
        }
    }

    #[test]
    fn brownian_embedded_in_mode_one_via_tiny_horizon_ou() {
        // 1-mode OU at tiny T: e^{−λt} ≈ 1, so the path is Brownian; p = 2
        // gives δ̂ ≈ 0.5 ± 0.05.
        let p = ProblemSpec::new(
            1,
            2,
            1e-3,
            2048,
            SpectralVector::zero(1),
            ScalarLipschitz::zero(),
            ScalarLipschitz::one(),
            NoiseSpec::white(1),
            0.0,
            0.0,
            0.2,
        )
        .unwrap();
        let paths: Vec<Trajectory> = (0..64).map(|i| exact_ou(&p, 5, i).unwrap()).collect();
        let lags = geometric_lags(4.0 * p.dt(), 1e-3 / 4.0, 8);
        let est = estimate_holder(&paths, 0.0, 2.0, &lags).unwrap();
        assert!((est.delta_hat - 0.5).abs() < 0.05, "delta {}", est.delta_hat);
    }

    #[test]
    fn deterministic_smooth_path_saturates() {
        // X(t) = S(t)X₀ with X₀ ∈ Ḣ²: Lipschitz in time in H, so the
        // regression saturates near slope p.
        let n_modes = 32;
        let n_steps = 4096;
        let x0 = SpectralVector::new(
            (1..=n_modes).map(|n| (n as f64).powf(-3.0)).collect(),
        )
        .unwrap();
        let dt = 1.0 / n_steps as f64;
        let times: Vec<f64> = (0..=n_steps).map(|k| k as f64 * dt).collect();
        let states: Vec<SpectralVector> =
            times.iter().map(|t| x0.apply_semigroup(*t).unwrap()).collect();
        let traj = Trajectory::new(times, states, 0, 0, Scheme::External).unwrap();
        let paths: Vec<Trajectory> = (0..MIN_PATHS).map(|_| traj.clone()).collect();
        // short lags: stay below the semigroup saturation scale 1/λ₁
        let lags = geometric_lags(4.0 * dt, 0.0316, 8);
        let est = estimate_holder(&paths, 0.0, 2.0, &lags).unwrap();
        assert!(est.delta_hat >= 0.95, "delta {}", est.delta_hat);
    }

    #[test]
    fn degenerate_and_precondition_errors() {
        let times: Vec<f64> = (0..=512).map(|k| k as f64 / 512.0).collect();
        let states: Vec<SpectralVector> = (0..=512).map(|_| SpectralVector::zero(2)).collect();
        let traj = Trajectory::new(times, states, 0, 0, Scheme::External).unwrap();
        let paths: Vec<Trajectory> = (0..MIN_PATHS).map(|_| traj.clone()).collect();
        let lags = geometric_lags(4.0 / 512.0, 0.25, 8);
        assert!(matches!(
            estimate_holder(&paths, 0.0, 2.0, &lags),
            Err(RegularityError::DegenerateIncrements { .. })
        ));
        // too few lags
        assert!(matches!(
            estimate_holder(&paths, 0.0, 2.0, &lags[..3]),
            Err(RegularityError::TooFewLags { .. })
        ));
        // insufficient span
        let narrow = geometric_lags(0.1, 0.25, 5);
        assert!(matches!(
            estimate_holder(&paths, 0.0, 2.0, &narrow),
            Err(RegularityError::BadLagSpan { .. })
        ));
        // p < 2
        assert!(matches!(
            estimate_holder(&paths, 0.0, 1.0, &lags),
            Err(RegularityError::BadMomentOrder { .. })
        ));
        // too few paths
        assert!(matches!(
            estimate_holder(&paths[..4], 0.0, 2.0, &lags),
            Err(RegularityError::TooFewPaths { .. })
        ));
    }

    #[test]
    fn spatial_profile_flags_ou_cutoff() {
        // E‖W_A(t)‖²_θ = Σ λ_n^{θ−1}(1−e^{−2λ_n t})/2: θ = 0.3 summable,
        // θ = 0.7 not. Mode-sum oracle cross-check included.
        for n_modes in [64usize, 128] {
            let p = ProblemSpec::new(
                n_modes,
                2 * n_modes,
                1.0,
                256,
                SpectralVector::zero(n_modes),
                ScalarLipschitz::zero(),
                ScalarLipschitz::one(),
                NoiseSpec::white(n_modes),
                0.0,
                0.0,
                0.2,
            )
            .unwrap();
            let paths: Vec<Trajectory> = (0..120).map(|i| exact_ou(&p, 7, i).unwrap()).collect();
            let prof = spatial_profile(&paths, 2.0, &[0.3, 0.7]).unwrap();
            assert!(!prof[0].divergent, "theta=0.3 flagged divergent at N={n_modes}: {prof:?}");
            assert!(prof[1].divergent, "theta=0.7 not flagged at N={n_modes}: {prof:?}");

            for point in &prof {
                let oracle = |count: usize| -> f64 {
                    (1..=count)
                        .map(|n| {
                            let lam = crate::spectral::eigenvalue(n);
                            lam.powf(point.theta - 1.0) * (1.0 - (-2.0 * lam).exp()) / 2.0
                        })
                        .sum()
                };
                let oracle_ratio = oracle(n_modes) / oracle(n_modes / 2);
                assert!(
                    (point.ratio - oracle_ratio).abs() < 0.05 * oracle_ratio,
                    "theta={}: ratio {} vs oracle {}",
                    point.theta,
                    point.ratio,
                    oracle_ratio
                );
            }
        }
    }

    #[test]
    fn spatial_profile_single_decaying_mode() {
        // zero noise, X₀ = e₁: ‖X(t)‖_θ^p = λ₁^{θp/2} e^{−λ₁ t p}; sup at the
        // first sampled time, convergent.
        let n_steps = 32;
        let dt = 1.0 / n_steps as f64;
        let times: Vec<f64> = (0..=n_steps).map(|k| k as f64 * dt).collect();
        let x0 = SpectralVector::unit_mode(8, 1, 1.0);
        let states: Vec<SpectralVector> =
            times.iter().map(|t| x0.apply_semigroup(*t).unwrap()).collect();
        let traj = Trajectory::new(times, states, 0, 0, Scheme::External).unwrap();
        let prof = spatial_profile(&[traj], 2.0, &[0.5]).unwrap();
        let lam = crate::spectral::eigenvalue(1);
        let expect = lam.powf(0.5) * (-2.0 * lam * dt).exp();
        assert_relative_eq!(prof[0].sup_moment, expect, max_relative = 1e-12);
        assert!(!prof[0].divergent);
    }

    #[test]
    fn profile_at_theta_zero_is_the_plain_second_moment() {
        // θ = 0, p = 2: the profile and the moment-bound check compute the
        // same quantity
        let p = ProblemSpec::new(
            8,
            16,
            0.5,
            64,
            SpectralVector::zero(8),
            ScalarLipschitz::zero(),
            ScalarLipschitz::one(),
            NoiseSpec::white(8),
            0.0,
            0.0,
            0.2,
        )
        .unwrap();
        let paths: Vec<Trajectory> = (0..40).map(|i| exact_ou(&p, 3, i).unwrap()).collect();
        let prof = spatial_profile(&paths, 2.0, &[0.0]).unwrap();
        let manual = (1..=64)
            .map(|k| {
                paths.iter().map(|t| t.state(k).sobolev_norm(0.0).powi(2)).sum::<f64>()
                    / paths.len() as f64
            })
            .fold(0.0f64, f64::max);
        assert_relative_eq!(prof[0].sup_moment, manual, max_relative = 1e-12);
    }

    #[test]
    fn predicted_region_examples() {
        // γ=0, α=0.24, p=100, β=0.5
        let r = predicted_region(0.5, 0.0, 0.24, 100.0).unwrap();
        let at0 = r.best_bound_at(0.0).unwrap();
        assert_relative_eq!(at0, 0.25, max_relative = 1e-12); // datum branch (β−0)/2 = 0.25
        let base: Vec<_> =
            r.bounds_at(0.0).into_iter().filter(|(m, _)| m.label == "base").collect();
        assert_relative_eq!(base[0].1, 0.23, max_relative = 1e-12);
        let inter: Vec<_> =
            r.bounds_at(0.4).into_iter().filter(|(m, _)| m.label == "intermediate").collect();
        assert_relative_eq!(inter[0].1, 0.03, max_relative = 1e-10);

        // γ=0.4, α=0.4, p=100: θ=0.2 < γ admits δ up to α−1/p = 0.39
        let r = predicted_region(0.5, 0.4, 0.4, 100.0).unwrap();
        let below: Vec<_> =
            r.bounds_at(0.2).into_iter().filter(|(m, _)| m.label == "below_gamma").collect();
        assert_relative_eq!(below[0].1, 0.39, max_relative = 1e-12);

        // datum boundary: θ₂ = β gives exponent 0
        let datum: Vec<_> =
            r.bounds_at(0.5).into_iter().filter(|(m, _)| m.label == "datum").collect();
        assert_relative_eq!(datum[0].1, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn predicted_region_constraint_errors() {
        assert!(predicted_region(0.5, 0.6, 0.3, 10.0).is_err()); // beta < gamma
        assert!(predicted_region(0.5, 0.0, 0.05, 10.0).is_err()); // alpha <= 1/p
        assert!(predicted_region(0.5, 0.0, 0.5, 10.0).is_err()); // alpha >= 1/2
        assert!(predicted_region(0.5, 0.0, 0.3, 2.0).is_err()); // p <= 2
        assert!(predicted_region(0.5, -0.1, 0.3, 10.0).is_err());
    }

    #[test]
    fn ou_region_white_case() {
        let r = ou_region(0.0, 0.25).unwrap();
        assert_relative_eq!(r.best_bound_at(0.0).unwrap(), 0.25, max_relative = 1e-12);
        assert_relative_eq!(r.best_bound_at(0.3).unwrap(), 0.10, max_relative = 1e-10);
        assert!(r.best_bound_at(0.6).is_none());
    }

    proptest! {
        #[test]
        fn region_antitone_in_theta(beta in 0.3f64..2.0, gamma_frac in 0.0f64..1.0,
                                     p in 2.5f64..64.0, alpha_frac in 0.05f64..0.95,
                                     t1 in 0.0f64..2.0, dtheta in 0.0f64..1.0) {
            let gamma = beta * gamma_frac;
            let alpha = 1.0 / p + alpha_frac * (0.5 - 1.0 / p) * 0.999;
            prop_assume!(alpha > 1.0 / p && alpha < 0.5);
            let r = predicted_region(beta, gamma, alpha, p).unwrap();
            let t2 = t1 + dtheta;
            for m in &r.memberships {
                if m.contains_theta(t1) && m.contains_theta(t2) {
                    let b1 = m.delta_bound(t1).unwrap();
                    let b2 = m.delta_bound(t2).unwrap();
                    prop_assert!(b2 <= b1 + 1e-12, "{}: bound({t2}) = {b2} > bound({t1}) = {b1}", m.label);
                }
            }
        }
    }

    #[test]
    fn verdict_examples() {
        let mk = |hat: f64, half: f64| HolderEstimate {
            theta: 0.0,
            p: 4.0,
            delta_hat: hat,
            ci_lo: hat - half,
            ci_hi: hat + half,
            slope: 4.0 * hat,
            slope_se: 2.0 * half,
            n_paths: 100,
            lags: vec![],
            moments: vec![],
        };
        // overlap → consistent
        let v = consistency_verdict(&mk(0.24, 0.03), 0.25, 0.05, true);
        assert_eq!(v.verdict, Verdict::Consistent);
        // far above → violated (smoother than the optimal bound predicts)
        let v = consistency_verdict(&mk(0.50, 0.02), 0.25, 0.05, true);
        assert_eq!(v.verdict, Verdict::Violated);
        assert_eq!(v.direction, Direction::Above);
        // without an optimality claim, smoother simply nests
        let v = consistency_verdict(&mk(0.50, 0.02), 0.25, 0.05, false);
        assert_eq!(v.verdict, Verdict::Consistent);
        assert_eq!(v.direction, Direction::Above);
        // far below with optimality → violated; without → consistent (nesting)
        let v = consistency_verdict(&mk(0.10, 0.02), 0.25, 0.05, true);
        assert_eq!(v.verdict, Verdict::Violated);
        assert_eq!(v.direction, Direction::Below);
        let v = consistency_verdict(&mk(0.10, 0.02), 0.25, 0.05, false);
        assert_eq!(v.verdict, Verdict::Consistent);
        // just outside the band but within a CI width → inconclusive
        let v = consistency_verdict(&mk(0.335, 0.03), 0.25, 0.05, true);
        assert_eq!(v.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn nesting_monotonicity_across_theta() {
        // On a diagonal OU ensemble, a higher spatial index cannot look
        // temporally smoother: δ̂(θ') ≤ δ̂(θ) + slack for θ' > θ.
        let n_modes = 128;
        let p = ProblemSpec::new(
            n_modes,
            2 * n_modes,
            1.0,
            1024,
            SpectralVector::zero(n_modes),
            ScalarLipschitz::zero(),
            ScalarLipschitz::one(),
            NoiseSpec::white(n_modes),
            0.0,
            0.0,
            0.2,
        )
        .unwrap();
        let paths: Vec<Trajectory> = (0..60).map(|i| exact_ou(&p, 23, i).unwrap()).collect();
        let lags = geometric_lags(4.0 / 1024.0, 0.25, 8);
        let est0 = estimate_holder(&paths, 0.0, 2.0, &lags).unwrap();
        let est2 = estimate_holder(&paths, 0.2, 2.0, &lags).unwrap();
        let est4 = estimate_holder(&paths, 0.4, 2.0, &lags).unwrap();
        assert!(est2.delta_hat <= est0.delta_hat + 0.05);
        assert!(est4.delta_hat <= est2.delta_hat + 0.05);
    }

    #[test]
    fn report_csv_shape() {
        let est = HolderEstimate {
            theta: 0.0,
            p: 4.0,
            delta_hat: 0.24,
            ci_lo: 0.21,
            ci_hi: 0.27,
            slope: 0.96,
            slope_se: 0.06,
            n_paths: 200,
            lags: vec![],
            moments: vec![],
        };
        let verdict = consistency_verdict(&est, 0.25, 0.05, true);
        let report = RegularityReport {
            rows: vec![ReportRow {
                theta: 0.0,
                p: 4.0,
                delta_hat: est.delta_hat,
                ci_lo: est.ci_lo,
                ci_hi: est.ci_hi,
                bound: 0.25,
                verdict,
                membership: "base",
            }],
        };
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "theta,p,delta_hat,ci_lo,ci_hi,bound,verdict");
        assert!(lines.next().unwrap().ends_with(",0"));
        assert!(!report.any_violated());
    }
}
