//! Running planner arms over a corpus and writing the reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hetgp_core::environment::{build_sdf, positions_cost, SignedDistanceField, ZERO_COST};
use hetgp_core::optimizer::{select_elites, OptimizerConfig, Outcome, Planner};
use hetgp_core::{build_prior, GpPrior};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CampaignConfig, Profile};
use crate::corpus::{campaign_problems, Problem};

pub const SUMMARY_HEADER: [&str; 8] = [
    "arm",
    "maze_size",
    "k",
    "t_max_ms",
    "success_rate_pct",
    "mean_ms",
    "median_ms",
    "n",
];

/// One planner run, as stored in `raw.csv`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub arm: String,
    pub problem: String,
    pub maze_size: String,
    pub seed: u64,
    pub solved: bool,
    pub iterations: usize,
    pub samples_evaluated: usize,
    /// Blank in deterministic mode.
    pub elapsed_ms: Option<f64>,
    pub best_cost: Option<f64>,
    /// False when problems were planned concurrently.
    pub timing_comparable: bool,
    pub error: Option<String>,
}

/// Per-run JSON: config echo, outcome and the densified trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDetail {
    pub record: RunRecord,
    pub k_samples: usize,
    pub m_elites: usize,
    pub t_max_ms: Option<u64>,
    pub max_iters: usize,
    pub n_support: usize,
    pub steps_per_interval: usize,
    pub t_total: f64,
    pub robot_radius: f64,
    pub safety_margin: f64,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    /// Support states, `[x, y, vx, vy]` per state.
    pub support: Vec<f64>,
    /// Densified states, `[x, y, vx, vy]` per state.
    pub dense: Vec<f64>,
}

impl RunDetail {
    pub fn dense_positions(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.dense.chunks_exact(4).map(|s| [s[0], s[1]])
    }

    /// Re-checks the stored densified trajectory against an environment.
    pub fn is_collision_free(&self, sdf: &SignedDistanceField) -> bool {
        let params = hetgp_core::environment::CostParams {
            robot_radius: self.robot_radius,
            safety_margin: self.safety_margin,
        };
        positions_cost(self.dense_positions(), sdf, &params) <= ZERO_COST
    }
}

/// Output of [`run_plan`].
#[derive(Debug, Clone)]
pub struct PlanRun {
    pub detail: RunDetail,
    /// Densified elite positions of the last iteration, when requested.
    pub elites: Vec<Vec<[f64; 2]>>,
}

pub fn build_arm_prior(problem: &Problem, cfg: &CampaignConfig, arm: Profile) -> Result<GpPrior> {
    let grid = cfg.time_grid()?;
    Ok(build_prior(
        &problem.meta.start,
        &problem.meta.goal,
        grid,
        arm.noise(cfg.t_total),
        cfg.anchors(),
    )?)
}

/// Plans one problem with one arm. Planner errors become an error string
/// in the record so that campaigns can continue.
pub fn run_plan(
    problem: &Problem,
    sdf: &SignedDistanceField,
    cfg: &CampaignConfig,
    arm: Profile,
    seed: u64,
    capture_elites: bool,
) -> PlanRun {
    let opt = cfg.optimizer(seed);
    let mut record = RunRecord {
        arm: arm.to_string(),
        problem: problem.meta.id.clone(),
        maze_size: problem.size_label(),
        seed,
        solved: false,
        iterations: 0,
        samples_evaluated: 0,
        elapsed_ms: None,
        best_cost: None,
        timing_comparable: !cfg.deterministic && !cfg.parallel_corpus,
        error: None,
    };
    let mut detail = detail_skeleton(cfg, &opt, problem);
    let mut elites = Vec::new();
    match plan_inner(problem, sdf, cfg, arm, &opt, capture_elites, &mut elites) {
        Ok((result, support, dense)) => {
            record.solved = result.is_solved();
            record.iterations = result.iterations;
            record.samples_evaluated = result.samples_evaluated;
            if !cfg.deterministic {
                record.elapsed_ms = Some(result.elapsed.as_secs_f64() * 1e3);
            }
            record.best_cost = Some(match result.outcome {
                Outcome::Failed { best_cost, .. } => best_cost,
                Outcome::Solved { .. } => 0.0,
            });
            detail.support = support;
            detail.dense = dense;
        }
        Err(e) => record.error = Some(format!("{e:#}")),
    }
    detail.record = record;
    PlanRun { detail, elites }
}

fn detail_skeleton(cfg: &CampaignConfig, opt: &OptimizerConfig, problem: &Problem) -> RunDetail {
    RunDetail {
        record: RunRecord::default(),
        k_samples: opt.k_samples,
        m_elites: opt.m_elites,
        t_max_ms: opt.time_budget.map(|b| b.as_millis() as u64),
        max_iters: opt.max_iters,
        n_support: cfg.n_support,
        steps_per_interval: opt.steps_per_interval,
        t_total: cfg.t_total,
        robot_radius: cfg.robot_radius,
        safety_margin: cfg.safety_margin,
        start: problem.meta.start,
        goal: problem.meta.goal,
        support: Vec::new(),
        dense: Vec::new(),
    }
}

fn plan_inner(
    problem: &Problem,
    sdf: &SignedDistanceField,
    cfg: &CampaignConfig,
    arm: Profile,
    opt: &OptimizerConfig,
    capture_elites: bool,
    elites: &mut Vec<Vec<[f64; 2]>>,
) -> Result<(hetgp_core::optimizer::PlanResult, Vec<f64>, Vec<f64>)> {
    let prior = build_arm_prior(problem, cfg, arm)?;
    let planner = Planner::new(&prior, sdf, cfg.cost_params(), opt.clone())?;
    let mut last = Vec::new();
    let result = planner.plan_observed(|rep| {
        if !capture_elites {
            return;
        }
        let costs: Vec<f64> = rep.costs.iter().map(|c| c.unwrap_or(f64::INFINITY)).collect();
        last = select_elites(&costs, opt.m_elites)
            .into_iter()
            .filter_map(|i| rep.samples[i].clone().map(|t| (t, rep.mean.clone())))
            .collect();
    })?;
    for (traj, mean) in &last {
        let dense = planner.interpolator().densify_flat(traj, mean)?;
        elites.push(dense.chunks_exact(4).map(|s| [s[0], s[1]]).collect());
    }
    let support = result.trajectory().values().to_vec();
    let dense = planner
        .interpolator()
        .densify_flat(result.trajectory(), result.mean())?;
    Ok((result, support, dense))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub arm: String,
    pub maze_size: String,
    pub k: usize,
    pub t_max_ms: Option<u64>,
    pub success_rate_pct: f64,
    /// Over solved runs; `None` without timings or solved runs.
    pub mean_ms: Option<f64>,
    pub median_ms: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    pub rows: Vec<SummaryRow>,
    pub runs: Vec<RunDetail>,
}

impl CampaignReport {
    pub fn records(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().map(|r| &r.record)
    }

    pub fn row(&self, arm: &str, maze_size: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.arm == arm && r.maze_size == maze_size)
    }
}

/// Groups records by `(arm, maze_size)` in first-seen order.
pub fn summarize(records: &[&RunRecord], k: usize, t_max_ms: Option<u64>) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in records {
        let key = (r.arm.clone(), r.maze_size.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(arm, size)| {
            let group: Vec<&&RunRecord> = records.iter().filter(|r| r.arm == arm && r.maze_size == size).collect();
            let solved = group.iter().filter(|r| r.solved).count();
            let mut times: Vec<f64> = group.iter().filter(|r| r.solved).filter_map(|r| r.elapsed_ms).collect();
            times.sort_by(f64::total_cmp);
            SummaryRow {
                arm,
                maze_size: size,
                k,
                t_max_ms,
                success_rate_pct: 100.0 * solved as f64 / group.len() as f64,
                mean_ms: (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64),
                median_ms: median(&times),
                n: group.len(),
            }
        })
        .collect()
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

/// Runs every arm on every problem, one problem at a time unless
/// `parallel_corpus` is set.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    cfg.validate()?;
    let problems = campaign_problems(cfg)?;
    run_on(cfg, &problems)
}

pub fn run_on(cfg: &CampaignConfig, problems: &[Problem]) -> Result<CampaignReport> {
    if problems.is_empty() {
        bail!("corpus is empty");
    }
    let one = |p: &Problem| -> Vec<RunDetail> {
        let sdf = build_sdf(&p.occupancy);
        cfg.arms
            .iter()
            .map(|&arm| run_plan(p, &sdf, cfg, arm, p.meta.seed, false).detail)
            .collect()
    };
    let per_problem: Vec<Vec<RunDetail>> = if cfg.parallel_corpus {
        problems.par_iter().map(one).collect()
    } else {
        problems.iter().map(one).collect()
    };
    // Arm-major order: all problems of the first arm, then the next arm.
    let mut runs = Vec::with_capacity(problems.len() * cfg.arms.len());
    for a in 0..cfg.arms.len() {
        runs.extend(per_problem.iter().map(|v| v[a].clone()));
    }
    let records: Vec<&RunRecord> = runs.iter().map(|r| &r.record).collect();
    let t_max = (!cfg.deterministic).then_some(cfg.t_max_ms);
    let rows = summarize(&records, cfg.k_samples, t_max);
    Ok(CampaignReport { rows, runs })
}

fn opt_cell(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(String::new, |x| format!("{x:.digits$}"))
}

pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.arm.clone(),
            r.maze_size.clone(),
            r.k.to_string(),
            r.t_max_ms.map_or_else(String::new, |t| t.to_string()),
            format!("{:.1}", r.success_rate_pct),
            opt_cell(r.mean_ms, 1),
            opt_cell(r.median_ms, 1),
            r.n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_raw_csv<'a>(records: impl IntoIterator<Item = &'a RunRecord>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_raw_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

pub fn run_file_name(record: &RunRecord) -> String {
    let arm: String = record
        .arm
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("{arm}_{}.json", record.problem)
}

pub fn write_report(report: &CampaignReport, dir: &Path, save_runs: bool) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_summary_csv(&report.rows, &dir.join("summary.csv"))?;
    write_raw_csv(report.records(), &dir.join("raw.csv"))?;
    if save_runs {
        let runs = dir.join("runs");
        fs::create_dir_all(&runs).with_context(|| format!("creating {}", runs.display()))?;
        for d in &report.runs {
            let path = runs.join(run_file_name(&d.record));
            fs::write(&path, serde_json::to_string(d)?).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

pub fn read_run(path: &Path) -> Result<RunDetail> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Table I style text: one line per arm and size.
pub fn format_table(rows: &[SummaryRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<18} {:>6} {:>5} {:>8} {:>10}",
        "arm", "size", "K", "t_max", "success/ms"
    );
    for r in rows {
        let t = r.t_max_ms.map_or_else(|| "-".to_string(), |t| format!("{t} ms"));
        let ms = r.mean_ms.map_or_else(|| "-".to_string(), |m| format!("{m:.0}"));
        let _ = writeln!(
            s,
            "{:<18} {:>6} {:>5} {:>8} {:>5.1} / {}",
            r.arm, r.maze_size, r.k, t, r.success_rate_pct, ms
        );
    }
    s
}
