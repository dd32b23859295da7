//! Dense querying between support states:
//!
//! ```text
//! θ(τ) = μ(τ) + Λ(τ)(θ_i − μ_i) + Ψ(τ)(θ_{i+1} − μ_{i+1})
//! Ψ(τ) = Q_{i,τ} Φ(t_{i+1},τ)ᵀ Q_{i,i+1}⁻¹
//! Λ(τ) = Φ(τ,t_i) − Ψ(τ) Φ(t_{i+1},t_i)
//! ```
//!
//! For a fixed number of steps per interval the coefficient pairs only depend
//! on the interval, so they are tabulated once per prior.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gp_prior::{process_noise_block, transition, GpPrior, NoiseProfile, PriorMean, TimeGrid};
use crate::trajectory::{StateVector, Trajectory};

/// `(Λ, Ψ)` for one query time.
pub type Coeffs = (DMatrix<f64>, DMatrix<f64>);

pub fn interp_coeffs(t_i: f64, t_next: f64, tau: f64, noise: &NoiseProfile, dim: usize) -> Result<Coeffs> {
    coeffs_for_interval(0, t_i, t_next, tau, noise, dim)
}

fn coeffs_for_interval(
    interval: usize,
    t_i: f64,
    t_next: f64,
    tau: f64,
    noise: &NoiseProfile,
    dim: usize,
) -> Result<Coeffs> {
    if !(t_i <= tau && tau <= t_next) || !(t_i < t_next) {
        return Err(Error::invalid(format!(
            "query time {tau} outside interval [{t_i}, {t_next}]"
        )));
    }
    let n = 2 * dim;
    if tau == t_i {
        return Ok((DMatrix::identity(n, n), DMatrix::zeros(n, n)));
    }
    if tau == t_next {
        return Ok((DMatrix::zeros(n, n), DMatrix::identity(n, n)));
    }
    let q_full = process_noise_block(t_i, t_next, noise, dim)?;
    let q_tau = process_noise_block(t_i, tau, noise, dim)?;
    let phi_next_tau = transition(t_next - tau, dim)?;
    let phi_tau_i = transition(tau - t_i, dim)?;
    let phi_next_i = transition(t_next - t_i, dim)?;

    // Ψᵀ = Q_{i,i+1}⁻¹ Φ(t_{i+1},τ) Q_{i,τ}, both Q symmetric.
    let chol = q_full.cholesky().ok_or(Error::SingularNoise { interval })?;
    let psi = chol.solve(&(&phi_next_tau * &q_tau)).transpose();
    let lambda = phi_tau_i - &psi * phi_next_i;
    Ok((lambda, psi))
}

/// Query time of step `j` inside interval `i` when it is split in `steps`.
pub fn query_time(grid: &TimeGrid, i: usize, j: usize, steps: usize) -> f64 {
    grid.time(i) + j as f64 * (grid.dt() / steps as f64)
}

/// Coefficient pairs for the interior steps `j = 1..steps` of one interval.
#[derive(Debug, Clone)]
pub struct InterpTable {
    pub coeffs: Vec<Coeffs>,
}

/// Tabulated interpolation for one prior and step count.
#[derive(Debug, Clone)]
pub struct Interpolator {
    grid: TimeGrid,
    dim: usize,
    steps: usize,
    noise: NoiseProfile,
    /// One entry per interval; entries share storage for a stationary profile.
    tables: Vec<Arc<InterpTable>>,
}

impl Interpolator {
    pub fn new(prior: &GpPrior, steps: usize) -> Result<Self> {
        Self::with_profile(prior.time_grid, prior.dim(), prior.noise.clone(), steps)
    }

    pub fn with_profile(grid: TimeGrid, dim: usize, noise: NoiseProfile, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("steps per interval must be at least 1"));
        }
        let build = |i: usize| -> Result<Arc<InterpTable>> {
            let coeffs = (1..steps)
                .map(|j| {
                    let tau = query_time(&grid, i, j, steps);
                    coeffs_for_interval(i, grid.time(i), grid.time(i + 1), tau, &noise, dim)
                })
                .collect::<Result<_>>()?;
            Ok(Arc::new(InterpTable { coeffs }))
        };
        let tables = if noise.is_stationary() {
            let shared = build(0)?;
            vec![shared; grid.n_intervals()]
        } else {
            (0..grid.n_intervals()).map(build).collect::<Result<_>>()?
        };
        Ok(Self {
            grid,
            dim,
            steps,
            noise,
            tables,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn table(&self, interval: usize) -> &InterpTable {
        &self.tables[interval]
    }

    /// Number of densified states, `N·S + 1`.
    pub fn dense_len(&self) -> usize {
        self.grid.n_intervals() * self.steps + 1
    }

    fn check(&self, traj: &Trajectory, mean: &PriorMean) -> Result<()> {
        let m = mean.support();
        if traj.dim() != self.dim || m.dim() != self.dim {
            return Err(Error::invalid("trajectory dimension does not match interpolator"));
        }
        if traj.len() != self.grid.n_support() || m.len() != self.grid.n_support() {
            return Err(Error::invalid("trajectory length does not match the time grid"));
        }
        Ok(())
    }

    /// Appends the `N·S + 1` densified states (flat) to `out`.
    pub fn densify_into(&self, traj: &Trajectory, mean: &PriorMean, out: &mut Vec<f64>) -> Result<()> {
        self.check(traj, mean)?;
        let n = 2 * self.dim;
        out.reserve(self.dense_len() * n);
        let mut buf = vec![0.0; n];
        for i in 0..self.grid.n_intervals() {
            out.extend_from_slice(traj.state_slice(i));
            for (j, (lambda, psi)) in (1..self.steps).zip(&self.tables[i].coeffs) {
                let tau = query_time(&self.grid, i, j, self.steps);
                apply(traj, mean, i, tau, lambda, psi, &self.grid, &mut buf);
                out.extend_from_slice(&buf);
            }
        }
        out.extend_from_slice(traj.state_slice(self.grid.n_intervals()));
        Ok(())
    }

    pub fn densify_flat(&self, traj: &Trajectory, mean: &PriorMean) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        self.densify_into(traj, mean, &mut out)?;
        Ok(out)
    }

    pub fn densify(&self, traj: &Trajectory, mean: &PriorMean) -> Result<Vec<StateVector>> {
        let flat = self.densify_flat(traj, mean)?;
        Ok(flat.chunks(2 * self.dim).map(StateVector::from_flat).collect())
    }

    /// Single query without tables.
    pub fn interpolate(&self, traj: &Trajectory, mean: &PriorMean, tau: f64) -> Result<StateVector> {
        self.check(traj, mean)?;
        interpolate(traj, mean, tau, &self.noise)
    }
}

/// `θ(τ)` for any `τ ∈ [0, t_total]`, computing the coefficients on the fly.
pub fn interpolate(traj: &Trajectory, mean: &PriorMean, tau: f64, noise: &NoiseProfile) -> Result<StateVector> {
    let grid = *traj.grid();
    if !(0.0..=grid.t_total()).contains(&tau) {
        return Err(Error::invalid(format!(
            "query time {tau} outside [0, {}]",
            grid.t_total()
        )));
    }
    if mean.support().values().len() != traj.values().len() {
        return Err(Error::invalid("mean and trajectory shapes differ"));
    }
    let i = grid.interval_of(tau);
    let (t_i, t_next) = (grid.time(i), grid.time(i + 1));
    if tau == t_i {
        return Ok(traj.state(i));
    }
    if tau >= t_next {
        return Ok(traj.state(i + 1));
    }
    let (lambda, psi) = coeffs_for_interval(i, t_i, t_next, tau, noise, traj.dim())?;
    let mut buf = vec![0.0; traj.state_len()];
    apply(traj, mean, i, tau, &lambda, &psi, &grid, &mut buf);
    Ok(StateVector::from_flat(&buf))
}

#[allow(clippy::too_many_arguments)]
fn apply(
    traj: &Trajectory,
    mean: &PriorMean,
    i: usize,
    tau: f64,
    lambda: &DMatrix<f64>,
    psi: &DMatrix<f64>,
    grid: &TimeGrid,
    out: &mut [f64],
) {
    let n = out.len();
    let support = mean.support();
    let (m_i, m_next) = (support.state_slice(i), support.state_slice(i + 1));
    match mean {
        PriorMean::StraightLine { start, goal, .. } => {
            let d = start.len();
            let frac = tau / grid.t_total();
            for k in 0..d {
                let delta = goal[k] - start[k];
                out[k] = start[k] + frac * delta;
                out[d + k] = delta / grid.t_total();
            }
        }
        PriorMean::Support(_) => {
            for r in 0..n {
                let mut acc = 0.0;
                for c in 0..n {
                    acc += lambda[(r, c)] * m_i[c] + psi[(r, c)] * m_next[c];
                }
                out[r] = acc;
            }
        }
    }
    let (x_i, x_next) = (traj.state_slice(i), traj.state_slice(i + 1));
    for r in 0..n {
        let mut acc = 0.0;
        for c in 0..n {
            acc += lambda[(r, c)] * (x_i[c] - m_i[c]) + psi[(r, c)] * (x_next[c] - m_next[c]);
        }
        out[r] += acc;
    }
}
