use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hetgp_core::environment::build_sdf;

use crate::campaign::{format_table, run_campaign, run_plan, write_report, CampaignReport, PlanRun};
use crate::config::{CampaignConfig, CorpusKind, Overrides, SEED_ENV};
use crate::corpus::{generate_mazes, generate_scenes, load_problem, write_corpus};
use crate::plot::{prior_svg, EnvironmentPlot, PriorPlot};

#[derive(Debug, Parser)]
#[command(name = "hetgp", version, about = "Sampling-based GP motion planning benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a corpus of mazes or obstructed scenes.
    Generate(GenerateArgs),
    /// Plan one corpus problem.
    Plan(PlanArgs),
    /// Run every arm over a corpus and write summary.csv and raw.csv.
    Campaign(CampaignArgs),
    /// Draw prior samples of both noise profiles.
    PlotPrior(PlotPriorArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Maze side; ignored for obstructed scenes.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = CorpusKind::Maze)]
    pub kind: CorpusKind,
    /// Geometry (extent, wall thickness, resolution, robot radius) from a campaign config.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Problem directory holding meta.json and occupancy.pgm.
    pub problem: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Result JSON path.
    #[arg(long, default_value = "plan.json")]
    pub result: PathBuf,
    /// Also write an SVG of the environment and solution.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Include the last iteration's elites in the plot.
    #[arg(long)]
    pub elites: bool,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct PlotPriorArgs {
    #[arg(long, default_value = "prior.svg")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20.0)]
    pub t_total: f64,
    #[arg(long, default_value_t = 11)]
    pub n_support: usize,
    #[arg(long, default_value_t = 30)]
    pub samples: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => {
            let dirs = cmd_generate(&a)?;
            println!("wrote {} problems to {}", dirs, a.out.display());
        }
        Command::Plan(a) => {
            let run = cmd_plan(&a)?;
            let r = &run.detail.record;
            match &r.error {
                Some(e) => println!("{}: error: {e}", r.problem),
                None => println!(
                    "{}: {} after {} iterations ({} samples), cost {:.3e}",
                    r.problem,
                    if r.solved { "solved" } else { "failed" },
                    r.iterations,
                    r.samples_evaluated,
                    r.best_cost.unwrap_or(f64::NAN)
                ),
            }
        }
        Command::Campaign(a) => {
            let cfg = CampaignConfig::resolve(a.config.as_deref(), &a.overrides)?;
            let report = cmd_campaign(&cfg)?;
            print!("{}", format_table(&report.rows));
            if cfg.parallel_corpus {
                println!("note: problems ran concurrently; timings are not comparable");
            }
        }
        Command::PlotPrior(a) => {
            cmd_plot_prior(&a)?;
            println!("wrote {}", a.out.display());
        }
    }
    Ok(())
}

fn base_config(path: Option<&Path>) -> Result<CampaignConfig> {
    match path {
        Some(p) => CampaignConfig::from_toml_file(p),
        None => Ok(CampaignConfig::default()),
    }
}

/// Returns the number of problems written.
pub fn cmd_generate(a: &GenerateArgs) -> Result<usize> {
    let cfg = base_config(a.config.as_deref())?;
    let problems = match a.kind {
        CorpusKind::Maze => generate_mazes(&cfg, a.n, a.count, a.seed, 0)?,
        CorpusKind::Obstructed => generate_scenes(&cfg, a.count, a.seed)?,
    };
    write_corpus(&problems, &a.out)?;
    Ok(problems.len())
}

pub fn cmd_plan(a: &PlanArgs) -> Result<PlanRun> {
    let cfg = CampaignConfig::resolve(a.config.as_deref(), &a.overrides)?;
    let problem = load_problem(&a.problem)?;
    let sdf = build_sdf(&problem.occupancy);
    let run = run_plan(&problem, &sdf, &cfg, cfg.arms[0], cfg.seed, a.elites);
    fs::write(&a.result, serde_json::to_string_pretty(&run.detail)? + "\n")
        .with_context(|| format!("writing {}", a.result.display()))?;
    if let Some(svg_path) = &a.plot {
        let traj: Vec<[f64; 2]> = run.detail.dense_positions().collect();
        let plot = EnvironmentPlot {
            occupancy: &problem.occupancy,
            start: problem.meta.start,
            goal: problem.meta.goal,
            robot_radius: cfg.robot_radius,
            trajectory: (!traj.is_empty()).then_some(&traj[..]),
            elites: &run.elites,
        };
        fs::write(svg_path, plot.to_svg()).with_context(|| format!("writing {}", svg_path.display()))?;
    }
    Ok(run)
}

pub fn cmd_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    let report = run_campaign(cfg)?;
    write_report(&report, &cfg.output, cfg.save_runs)?;
    Ok(report)
}

pub fn cmd_plot_prior(a: &PlotPriorArgs) -> Result<()> {
    let p = PriorPlot {
        t_total: a.t_total,
        n_support: a.n_support,
        samples: a.samples,
        seed: a.seed,
        ..Default::default()
    };
    fs::write(&a.out, prior_svg(&p)?).with_context(|| format!("writing {}", a.out.display()))
}
