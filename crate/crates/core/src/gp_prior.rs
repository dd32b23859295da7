//! Goal-conditioned GP prior generated by the constant-velocity LTV-SDE
//! (white noise injected in acceleration) with a time-varying noise power.
//!
//! The prior is never held as a dense covariance. Only the block-tridiagonal
//! precision is assembled: for every interval `[t_i, t_{i+1}]`
//!
//! ```text
//! diag[i]   += Φᵀ Q⁻¹ Φ
//! diag[i+1] += Q⁻¹
//! off[i]     = -Q⁻¹ Φ          (block (i+1, i))
//! ```
//!
//! plus `σ₀⁻² I` on the first and `σ_N⁻² I` on the last diagonal block for the
//! start prior and the fictitious goal observation.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{StateVector, Trajectory};

const GAUSS3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Panels used when integrating a user-supplied power profile.
pub const CUSTOM_PROFILE_PANELS: usize = 16;

/// Isotropic power-spectral density `q_c(t)` of the acceleration noise.
#[derive(Clone)]
pub enum NoiseProfile {
    /// Homoscedastic prior, `q_c(t) = q_c`.
    Constant { q_c: f64 },
    /// `q_c(t) = (t - t_total/2)²`: large at both ends, zero at the midpoint.
    Parabolic { t_total: f64 },
    /// Any non-negative function of time.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for NoiseProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseProfile::Constant { q_c } => f.debug_struct("Constant").field("q_c", q_c).finish(),
            NoiseProfile::Parabolic { t_total } => f.debug_struct("Parabolic").field("t_total", t_total).finish(),
            NoiseProfile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl NoiseProfile {
    /// Constant power whose integral over `[0, t_total]` equals that of the
    /// parabolic profile: `t_total² / 12`.
    pub fn matched_constant(t_total: f64) -> Self {
        NoiseProfile::Constant {
            q_c: t_total * t_total / 12.0,
        }
    }

    pub fn power_at(&self, t: f64) -> f64 {
        match self {
            NoiseProfile::Constant { q_c } => *q_c,
            NoiseProfile::Parabolic { t_total } => {
                let s = t - 0.5 * t_total;
                s * s
            }
            NoiseProfile::Custom(f) => f(t),
        }
    }

    /// True when every interval of an equidistant grid sees the same noise.
    pub fn is_stationary(&self) -> bool {
        matches!(self, NoiseProfile::Constant { .. })
    }

    fn checked_power(&self, t: f64) -> Result<f64> {
        let q = self.power_at(t);
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::NegativeNoise { t, value: q });
        }
        Ok(q)
    }

    /// `[∫q, ∫q·(t_b - s), ∫q·(t_b - s)²]` over `[t_a, t_b]`.
    fn moments(&self, t_a: f64, t_b: f64) -> Result<[f64; 3]> {
        let h = t_b - t_a;
        match self {
            NoiseProfile::Constant { q_c } => {
                if !(*q_c >= 0.0) || !q_c.is_finite() {
                    return Err(Error::NegativeNoise { t: t_a, value: *q_c });
                }
                Ok([q_c * h, q_c * h * h / 2.0, q_c * h * h * h / 3.0])
            }
            // q is quadratic, so the integrands have degree ≤ 4 and a single
            // 3-point Gauss-Legendre panel is exact.
            NoiseProfile::Parabolic { .. } => self.gauss_moments(t_a, t_b, t_b, 1),
            NoiseProfile::Custom(_) => self.gauss_moments(t_a, t_b, t_b, CUSTOM_PROFILE_PANELS),
        }
    }

    fn gauss_moments(&self, t_a: f64, t_b: f64, end: f64, panels: usize) -> Result<[f64; 3]> {
        let width = (t_b - t_a) / panels as f64;
        let mut m = [0.0; 3];
        for p in 0..panels {
            let lo = t_a + p as f64 * width;
            let mid = lo + 0.5 * width;
            for (x, w) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS) {
                let s = mid + 0.5 * width * x;
                let q = self.checked_power(s)? * w * 0.5 * width;
                let u = end - s;
                m[0] += q;
                m[1] += q * u;
                m[2] += q * u * u;
            }
        }
        Ok(m)
    }
}

/// Equidistant support times `t_i = i·dt`, `i = 0..n_support`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_total: f64,
    n_support: usize,
}

impl TimeGrid {
    pub fn new(t_total: f64, n_support: usize) -> Result<Self> {
        if n_support < 2 {
            return Err(Error::invalid("a time grid needs at least two support states"));
        }
        if !(t_total > 0.0) || !t_total.is_finite() {
            return Err(Error::invalid(format!("t_total must be positive, got {t_total}")));
        }
        Ok(Self { t_total, n_support })
    }

    pub fn t_total(&self) -> f64 {
        self.t_total
    }

    pub fn n_support(&self) -> usize {
        self.n_support
    }

    pub fn n_intervals(&self) -> usize {
        self.n_support - 1
    }

    pub fn dt(&self) -> f64 {
        self.t_total / self.n_intervals() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    /// Index of the interval containing `tau`; the last interval is closed.
    pub fn interval_of(&self, tau: f64) -> usize {
        let i = (tau / self.dt()).floor();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.n_intervals() - 1)
        }
    }
}

/// Tightness of the start prior and of the fictitious goal observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchors {
    pub start_var: f64,
    pub goal_var: f64,
}

impl Default for Anchors {
    fn default() -> Self {
        Self {
            start_var: 1e-6,
            goal_var: 1e-6,
        }
    }
}

/// Mean of the GP at the support states, plus how to evaluate it in between.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorMean {
    /// Constant-velocity line; `μ(τ)` is evaluated analytically.
    StraightLine {
        start: Vec<f64>,
        goal: Vec<f64>,
        support: Trajectory,
    },
    /// Arbitrary support values; `μ(τ)` is obtained by applying the same
    /// Λ/Ψ interpolation to the mean itself.
    Support(Trajectory),
}

impl PriorMean {
    pub fn straight_line(start: &[f64], goal: &[f64], grid: TimeGrid) -> Result<Self> {
        let states = straight_line_mean(start, goal, grid)?;
        Ok(PriorMean::StraightLine {
            start: start.to_vec(),
            goal: goal.to_vec(),
            support: Trajectory::from_states(grid, &states)?,
        })
    }

    pub fn support(&self) -> &Trajectory {
        match self {
            PriorMean::StraightLine { support, .. } | PriorMean::Support(support) => support,
        }
    }
}

/// State transition `Φ(t + dt, t) = [[I, dt·I], [0, I]]`.
pub fn transition(dt: f64, dim: usize) -> Result<DMatrix<f64>> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("transition needs dt >= 0, got {dt}")));
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let mut phi = DMatrix::identity(2 * dim, 2 * dim);
    for k in 0..dim {
        phi[(k, dim + k)] = dt;
    }
    Ok(phi)
}

/// `Q_{a,b} = ∫ Φ(t_b,s) L q_c(s) Lᵀ Φ(t_b,s)ᵀ ds` with `L = [0; I]`.
pub fn process_noise_block(t_a: f64, t_b: f64, noise: &NoiseProfile, dim: usize) -> Result<DMatrix<f64>> {
    if !(t_b > t_a) {
        return Err(Error::invalid(format!(
            "process noise needs t_b > t_a (got {t_a}, {t_b})"
        )));
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let [m0, m1, m2] = noise.moments(t_a, t_b)?;
    let mut q = DMatrix::zeros(2 * dim, 2 * dim);
    for k in 0..dim {
        q[(k, k)] = m2;
        q[(k, dim + k)] = m1;
        q[(dim + k, k)] = m1;
        q[(dim + k, dim + k)] = m0;
    }
    Ok(q)
}

/// Constant-velocity line from `start` to `goal` over the grid.
pub fn straight_line_mean(start: &[f64], goal: &[f64], grid: TimeGrid) -> Result<Vec<StateVector>> {
    if start.len() != goal.len() || start.is_empty() {
        return Err(Error::invalid(format!(
            "start and goal dimensions differ ({} vs {})",
            start.len(),
            goal.len()
        )));
    }
    let n = grid.n_intervals() as f64;
    let velocity: Vec<f64> = start.iter().zip(goal).map(|(s, g)| (g - s) / grid.t_total()).collect();
    (0..grid.n_support())
        .map(|i| {
            let frac = i as f64 / n;
            let position = start.iter().zip(goal).map(|(s, g)| s + frac * (g - s)).collect();
            StateVector::new(position, velocity.clone())
        })
        .collect()
}

pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = m.clone().cholesky()?.inverse();
    Some((&inv + inv.transpose()) * 0.5)
}

/// Goal-conditioned GP prior over the support states.
#[derive(Debug, Clone)]
pub struct GpPrior {
    pub mean: PriorMean,
    /// `N + 1` diagonal blocks of the precision.
    pub precision_diag: Vec<DMatrix<f64>>,
    /// `N` blocks below the diagonal; entry `i` is block `(i+1, i)`.
    pub precision_offdiag: Vec<DMatrix<f64>>,
    pub time_grid: TimeGrid,
    pub noise: NoiseProfile,
    pub anchor_cov_start: f64,
    pub anchor_cov_goal: f64,
    /// `Q_{i,i+1}` for every interval, reused by interpolation.
    pub interval_noise: Vec<DMatrix<f64>>,
    dim: usize,
}

pub fn build_prior(
    start: &[f64],
    goal: &[f64],
    grid: TimeGrid,
    noise: NoiseProfile,
    anchors: Anchors,
) -> Result<GpPrior> {
    for (name, v) in [("start", anchors.start_var), ("goal", anchors.goal_var)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!(
                "{name} anchor variance must be positive, got {v}"
            )));
        }
    }
    let mean = PriorMean::straight_line(start, goal, grid)?;
    let dim = start.len();
    let n = 2 * dim;
    let phi = transition(grid.dt(), dim)?;

    let mut diag = vec![DMatrix::zeros(n, n); grid.n_support()];
    let mut offdiag = Vec::with_capacity(grid.n_intervals());
    let mut interval_noise = Vec::with_capacity(grid.n_intervals());
    for i in 0..grid.n_intervals() {
        let q = process_noise_block(grid.time(i), grid.time(i + 1), &noise, dim)?;
        let q_inv = spd_inverse(&q).ok_or(Error::SingularNoise { interval: i })?;
        let q_inv_phi = &q_inv * &phi;
        diag[i] += phi.transpose() * &q_inv_phi;
        diag[i + 1] += &q_inv;
        offdiag.push(-q_inv_phi);
        interval_noise.push(q);
    }
    let last = grid.n_intervals();
    for k in 0..n {
        diag[0][(k, k)] += 1.0 / anchors.start_var;
        diag[last][(k, k)] += 1.0 / anchors.goal_var;
    }
    for block in &mut diag {
        *block = (&*block + block.transpose()) * 0.5;
    }
    if diag.iter().chain(&offdiag).any(|b| b.iter().any(|v| !v.is_finite())) {
        return Err(Error::Invariant("precision has non-finite entries".into()));
    }

    Ok(GpPrior {
        mean,
        precision_diag: diag,
        precision_offdiag: offdiag,
        time_grid: grid,
        noise,
        anchor_cov_start: anchors.start_var,
        anchor_cov_goal: anchors.goal_var,
        interval_noise,
        dim,
    })
}

/// Largest support-state count for which dense helpers are allowed.
pub const DENSE_MAX_INTERVALS: usize = 50;

impl GpPrior {
    /// Workspace dimension `D`; each state has `2D` entries.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state_len(&self) -> usize {
        2 * self.dim
    }

    pub fn total_len(&self) -> usize {
        self.state_len() * self.time_grid.n_support()
    }

    /// Same covariance, different mean.
    pub fn with_mean(&self, mean: PriorMean) -> Result<Self> {
        let support = mean.support();
        if support.dim() != self.dim || support.len() != self.time_grid.n_support() {
            return Err(Error::invalid("mean does not match the prior's shape"));
        }
        Ok(Self { mean, ..self.clone() })
    }

    /// Dense block-tridiagonal precision.
    pub fn dense_precision(&self) -> DMatrix<f64> {
        let n = self.state_len();
        let total = self.total_len();
        let mut p = DMatrix::zeros(total, total);
        for (i, block) in self.precision_diag.iter().enumerate() {
            p.view_mut((i * n, i * n), (n, n)).copy_from(block);
        }
        for (i, block) in self.precision_offdiag.iter().enumerate() {
            p.view_mut(((i + 1) * n, i * n), (n, n)).copy_from(block);
            p.view_mut((i * n, (i + 1) * n), (n, n)).copy_from(&block.transpose());
        }
        p
    }

    /// Dense covariance `K = (K⁻¹)⁻¹`, for validation on small grids.
    pub fn dense_kernel(&self) -> Result<DMatrix<f64>> {
        if self.time_grid.n_intervals() > DENSE_MAX_INTERVALS {
            return Err(Error::invalid(format!(
                "dense kernel limited to N <= {DENSE_MAX_INTERVALS}"
            )));
        }
        let chol = self
            .dense_precision()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { block: 0 })?;
        let k = chol.inverse();
        Ok((&k + k.transpose()) * 0.5)
    }
}
