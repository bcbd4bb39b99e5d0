//! Graded-mesh quadrature for kernels with an integrable singularity at 0.
//!
//! The interval (0, T] is split into geometrically shrinking panels
//! `[T·2^{−k−1}, T·2^{−k}]`; each panel is integrated by Gauss–Legendre.
//! Power-law integrands give exactly geometric panel sums, so the decay
//! ratio of the deepest panels both classifies convergence and supplies a
//! geometric extrapolation of the unresolved mass below the last panel.
//! The divergence rule (ratio ≥ 0.999 over the last panels) is a
//! documented finite-resolution heuristic, not a proof.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("integrand evaluated to a non-finite value at t = {t}")]
    NonFiniteEval { t: f64 },
    #[error("integration horizon must be positive, got {t_max}")]
    BadHorizon { t_max: f64 },
}

/// Panel-sum decay ratio at or above which the integral is flagged divergent.
pub const DIVERGENCE_RATIO: f64 = 0.999;
/// Default number of dyadic panels (resolves down to `T·2^{−60}`).
pub const DEFAULT_PANELS: usize = 60;
/// Number of trailing panels used for the decay-ratio estimate.
const RATIO_WINDOW: usize = 10;

#[derive(Debug, Clone)]
pub struct GradedIntegral {
    /// Panel sums plus (when convergent) the extrapolated tail.
    pub value: f64,
    pub convergent: bool,
    /// Estimated geometric ratio of successive panel sums near the origin.
    pub decay_ratio: f64,
    /// Extrapolated mass below the deepest panel (0 when divergent).
    pub tail: f64,
}

/// Gauss–Legendre nodes/weights on [-1, 1], computed once by Newton iteration
/// on the Legendre recurrence (accurate to machine precision).
#[derive(Debug, Clone)]
pub struct GlRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GlRule {
    pub fn new(order: usize) -> Self {
        assert!(order >= 2);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev-based initial guess for the i-th root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre P_n(x) and its derivative by the three-term recurrence.
                let mut p0 = 1.0;
                let mut p1 = x;
                for k in 2..=n {
                    let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = pk;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> Result<f64, QuadratureError> {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let t = c + h * x;
            let v = f(t);
            if !v.is_finite() {
                return Err(QuadratureError::NonFiniteEval { t });
            }
            acc += w * v;
        }
        Ok(h * acc)
    }
}

/// `∫_0^{t_max} f(t) dt` for a nonnegative `f` that may blow up at 0.
///
/// `panels` dyadic panels are resolved; the remainder is extrapolated from
/// the geometric decay of the deepest panel sums. When the panel sums fail
/// to decay (ratio ≥ [`DIVERGENCE_RATIO`]) the result is flagged divergent
/// and `value` holds the partial mass only.
pub fn integrate_graded<F: Fn(f64) -> f64>(
    f: F,
    t_max: f64,
    panels: usize,
    rule: &GlRule,
) -> Result<GradedIntegral, QuadratureError> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(QuadratureError::BadHorizon { t_max });
    }
    let mut sums = Vec::with_capacity(panels);
    let mut total = 0.0;
    for k in 0..panels {
        let hi = t_max * 0.5f64.powi(k as i32);
        let lo = 0.5 * hi;
        let s = rule.integrate(&f, lo, hi)?;
        total += s;
        sums.push(s);
    }
    let (decay_ratio, usable) = trailing_ratio(&sums);
    let convergent = !usable || decay_ratio < DIVERGENCE_RATIO;
    let mut tail = 0.0;
    if convergent && usable && decay_ratio > 0.0 {
        let last = *sums.last().unwrap();
        tail = last * decay_ratio / (1.0 - decay_ratio);
        total += tail;
    }
    Ok(GradedIntegral { value: total, convergent, decay_ratio, tail })
}

/// Geometric-mean ratio of successive sums over the trailing window.
/// Returns `(ratio, usable)`; not usable when the trailing sums vanish
/// (kernel has no mass near the origin — trivially convergent).
fn trailing_ratio(sums: &[f64]) -> (f64, bool) {
    let n = sums.len();
    if n < 2 {
        return (0.0, false);
    }
    let w = RATIO_WINDOW.min(n - 1);
    let first = sums[n - 1 - w];
    let last = sums[n - 1];
    let scale = sums.iter().map(|s| s.abs()).fold(0.0, f64::max);
    if scale == 0.0 || last.abs() <= scale * 1e-300 || first.abs() <= 0.0 {
        return (0.0, false);
    }
    let ratio = (last / first).abs().powf(1.0 / w as f64);
    (ratio, true)
}
