//! Cross-entropy style planner that only moves the GP mean.
//!
//! Each iteration draws `K` trajectories from `GP(μ, K)` (sample 0 is the
//! mean itself), scores them with the collision cost, returns the first
//! zero-cost sample in index order, and otherwise replaces `μ` by the
//! `1/cost`-weighted mean of the `M` cheapest samples. The precision factor
//! is computed once and reused for every iteration.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::{trajectory_cost, CostParams, SignedDistanceField, ZERO_COST};
use crate::error::{Error, Result};
use crate::gp_prior::{GpPrior, PriorMean};
use crate::interpolation::Interpolator;
use crate::sampler::{factorize, sample_indexed, PrecisionFactor};
use crate::trajectory::Trajectory;

/// Sample streams are `(iteration << SAMPLE_STREAM_BITS) | k`.
pub const SAMPLE_STREAM_BITS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub k_samples: usize,
    pub m_elites: usize,
    /// Wall-clock budget; `None` runs exactly up to `max_iters` (deterministic mode).
    pub time_budget: Option<Duration>,
    pub max_iters: usize,
    pub steps_per_interval: usize,
    pub seed: u64,
    pub worker_count: usize,
    /// Keep a copy of the mean at the start of every iteration.
    pub record_history: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            k_samples: 400,
            m_elites: 3,
            time_budget: Some(Duration::from_secs(1)),
            max_iters: 1000,
            steps_per_interval: 5,
            seed: 0,
            worker_count: std::thread::available_parallelism().map_or(1, |n| n.get()),
            record_history: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_elites == 0 || self.m_elites > self.k_samples {
            return Err(Error::Config(format!(
                "need 1 <= M <= K (M = {}, K = {})",
                self.m_elites, self.k_samples
            )));
        }
        if self.k_samples >= 1 << SAMPLE_STREAM_BITS {
            return Err(Error::Config(format!("K = {} is too large", self.k_samples)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.time_budget.is_some_and(|b| b.is_zero()) {
            return Err(Error::Config("time budget must be positive".into()));
        }
        if self.steps_per_interval == 0 || self.worker_count == 0 {
            return Err(Error::Config(
                "steps per interval and worker count must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Solved {
        trajectory: Trajectory,
        /// Mean the solution was sampled around; needed to densify it.
        mean: PriorMean,
        iteration: usize,
        sample_index: usize,
    },
    Failed {
        best_trajectory: Trajectory,
        best_mean: PriorMean,
        best_cost: f64,
    },
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub outcome: Outcome,
    pub iterations: usize,
    pub samples_evaluated: usize,
    pub elapsed: Duration,
    /// Lowest cost seen up to and including each iteration.
    pub best_cost_history: Vec<f64>,
    pub mean_history: Option<Vec<Trajectory>>,
}

impl PlanResult {
    pub fn is_solved(&self) -> bool {
        matches!(self.outcome, Outcome::Solved { .. })
    }

    pub fn trajectory(&self) -> &Trajectory {
        match &self.outcome {
            Outcome::Solved { trajectory, .. } => trajectory,
            Outcome::Failed { best_trajectory, .. } => best_trajectory,
        }
    }

    pub fn mean(&self) -> &PriorMean {
        match &self.outcome {
            Outcome::Solved { mean, .. } => mean,
            Outcome::Failed { best_mean, .. } => best_mean,
        }
    }

    pub fn cost(&self) -> f64 {
        match &self.outcome {
            Outcome::Solved { .. } => 0.0,
            Outcome::Failed { best_cost, .. } => *best_cost,
        }
    }
}

/// Indices of the `m` lowest costs, ties broken by index.
pub fn select_elites(costs: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..costs.len()).collect();
    idx.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    idx.truncate(m);
    idx
}

/// `Σ w_m θ_m / Σ w_m` with `w_m = 1 / cost_m`.
pub fn elite_weighted_mean(elites: &[(&Trajectory, f64)]) -> Result<Trajectory> {
    let Some(&(first, _)) = elites.first() else {
        return Err(Error::Invariant("weighted mean of zero elites".into()));
    };
    let mut acc = vec![0.0; first.values().len()];
    let mut total = 0.0;
    for &(traj, cost) in elites {
        if !(cost > 0.0) || !cost.is_finite() {
            return Err(Error::Invariant(format!("elite cost {cost} cannot be weighted")));
        }
        if traj.values().len() != acc.len() {
            return Err(Error::invalid("elites have different shapes"));
        }
        let w = 1.0 / cost;
        total += w;
        for (a, v) in acc.iter_mut().zip(traj.values()) {
            *a += w * v;
        }
    }
    for a in &mut acc {
        *a /= total;
    }
    Trajectory::from_flat(first.dim(), *first.grid(), acc)
}

/// What the planner did in one iteration, passed to observers.
#[derive(Debug)]
pub struct IterationReport<'a> {
    pub iteration: usize,
    pub factor: &'a PrecisionFactor,
    pub mean: &'a PriorMean,
    /// `None` for samples skipped after the time budget ran out.
    pub costs: &'a [Option<f64>],
    pub best_cost: f64,
    /// Samples of this iteration, for plotting elite fans.
    pub samples: &'a [Option<Trajectory>],
}

/// Planner bound to one prior, environment and configuration.
pub struct Planner<'a> {
    prior: &'a GpPrior,
    sdf: &'a SignedDistanceField,
    params: CostParams,
    config: OptimizerConfig,
    factor: PrecisionFactor,
    interp: Interpolator,
    pool: rayon::ThreadPool,
}

impl<'a> Planner<'a> {
    pub fn new(
        prior: &'a GpPrior,
        sdf: &'a SignedDistanceField,
        params: CostParams,
        config: OptimizerConfig,
    ) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        if prior.dim() != 2 {
            return Err(Error::invalid("planning needs a 2D prior"));
        }
        let factor = factorize(prior)?;
        let interp = Interpolator::new(prior, config.steps_per_interval)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.worker_count)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(Self {
            prior,
            sdf,
            params,
            config,
            factor,
            interp,
            pool,
        })
    }

    pub fn factor(&self) -> &PrecisionFactor {
        &self.factor
    }

    pub fn interpolator(&self) -> &Interpolator {
        &self.interp
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn cost(&self, traj: &Trajectory, mean: &PriorMean) -> Result<f64> {
        trajectory_cost(traj, mean, self.sdf, &self.params, &self.interp)
    }

    pub fn plan(&self) -> Result<PlanResult> {
        self.plan_observed(|_| {})
    }

    pub fn plan_observed(&self, mut observe: impl FnMut(&IterationReport<'_>)) -> Result<PlanResult> {
        let started = Instant::now();
        let deadline = self.config.time_budget.map(|b| started + b);
        let over_budget = || deadline.is_some_and(|d| Instant::now() >= d);
        let k = self.config.k_samples;

        let mut mean = self.prior.mean.clone();
        let mut best: Option<(Trajectory, PriorMean, f64)> = None;
        let mut best_cost_history = Vec::new();
        let mut mean_history = self.config.record_history.then(Vec::new);
        let mut samples_evaluated = 0;
        let mut iterations = 0;

        while iterations < self.config.max_iters && !over_budget() {
            let iteration = iterations;
            iterations += 1;
            if let Some(h) = mean_history.as_mut() {
                h.push(mean.support().clone());
            }
            let base = (iteration as u64) << SAMPLE_STREAM_BITS;
            let evaluated: Vec<Option<(Trajectory, f64)>> = self.pool.install(|| {
                (0..k)
                    .into_par_iter()
                    .map(|idx| {
                        if over_budget() {
                            return Ok(None);
                        }
                        let traj = if idx == 0 {
                            mean.support().clone()
                        } else {
                            sample_indexed(&self.factor, mean.support(), self.config.seed, base | idx as u64)?
                        };
                        let cost = self.cost(&traj, &mean)?;
                        Ok(Some((traj, cost)))
                    })
                    .collect::<Result<_>>()
            })?;

            let costs: Vec<Option<f64>> = evaluated.iter().map(|e| e.as_ref().map(|(_, c)| *c)).collect();
            samples_evaluated += costs.iter().flatten().count();

            let solved = costs.iter().position(|c| c.is_some_and(|c| c <= ZERO_COST));
            let finished: Vec<usize> = (0..k).filter(|&i| costs[i].is_some()).collect();
            let dense_costs: Vec<f64> = finished.iter().map(|&i| costs[i].unwrap()).collect();
            let cheapest = select_elites(&dense_costs, self.config.m_elites);
            if let Some(&c) = cheapest.first() {
                let (idx, cost) = (finished[c], dense_costs[c]);
                if best.as_ref().is_none_or(|b| cost < b.2) {
                    let traj = evaluated[idx].as_ref().unwrap().0.clone();
                    best = Some((traj, mean.clone(), cost));
                }
            }
            let best_cost = best.as_ref().map_or(f64::INFINITY, |b| b.2);
            best_cost_history.push(best_cost);

            let samples: Vec<Option<Trajectory>> =
                evaluated.iter().map(|e| e.as_ref().map(|(t, _)| t.clone())).collect();
            observe(&IterationReport {
                iteration,
                factor: &self.factor,
                mean: &mean,
                costs: &costs,
                best_cost,
                samples: &samples,
            });

            if let Some(idx) = solved {
                let trajectory = evaluated[idx].as_ref().unwrap().0.clone();
                return Ok(PlanResult {
                    outcome: Outcome::Solved {
                        trajectory,
                        mean,
                        iteration,
                        sample_index: idx,
                    },
                    iterations,
                    samples_evaluated,
                    elapsed: started.elapsed(),
                    best_cost_history,
                    mean_history,
                });
            }
            if finished.len() < k || cheapest.is_empty() {
                // Budget ran out mid-batch.
                break;
            }
            let elites: Vec<(&Trajectory, f64)> = cheapest
                .iter()
                .map(|&c| (&evaluated[finished[c]].as_ref().unwrap().0, dense_costs[c]))
                .collect();
            mean = PriorMean::Support(elite_weighted_mean(&elites)?);
        }

        let (best_trajectory, best_mean, best_cost) = match best {
            Some(b) => b,
            None => {
                let support = mean.support().clone();
                let cost = self.cost(&support, &mean)?;
                (support, mean, cost)
            }
        };
        Ok(PlanResult {
            outcome: Outcome::Failed {
                best_trajectory,
                best_mean,
                best_cost,
            },
            iterations,
            samples_evaluated,
            elapsed: started.elapsed(),
            best_cost_history,
            mean_history,
        })
    }
}

/// Builds a [`Planner`] and runs it once.
pub fn plan(
    prior: &GpPrior,
    sdf: &SignedDistanceField,
    params: CostParams,
    config: OptimizerConfig,
) -> Result<PlanResult> {
    Planner::new(prior, sdf, params, config)?.plan()
}
