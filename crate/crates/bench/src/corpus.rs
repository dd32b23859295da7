//! Planning problems and their on-disk corpus layout:
//! `<dir>/maze_0001/{occupancy.pgm, occupancy.json, meta.json}`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hetgp_core::environment::{read_grid, write_grid, OccupancyGrid};
use hetgp_core::maze_gen::{generate_maze, MazeSpec};
use serde::{Deserialize, Serialize};

use crate::config::{CampaignConfig, CorpusKind};
use crate::scenes::{generate_scene, SceneSpec};

pub const OCCUPANCY_FILE: &str = "occupancy.pgm";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Origin {
    Maze(MazeSpec),
    Obstructed(SceneSpec),
    /// Hand-made environment with no generator parameters.
    Fixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub id: String,
    pub seed: u64,
    /// Maze side `n`; 0 for non-maze problems.
    pub n: usize,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub meta: Meta,
    pub occupancy: OccupancyGrid,
}

impl Problem {
    /// Label for the `maze_size` report column.
    pub fn size_label(&self) -> String {
        match self.meta.origin {
            Origin::Maze(_) => self.meta.n.to_string(),
            Origin::Obstructed(_) => "scene".into(),
            Origin::Fixture => "fixture".into(),
        }
    }
}

pub fn maze_problem(spec: &MazeSpec, index: usize, robot_radius: f64) -> Result<Problem> {
    let env = generate_maze(spec, robot_radius).with_context(|| format!("maze n={} seed={}", spec.n, spec.seed))?;
    Ok(Problem {
        meta: Meta {
            id: format!("maze_{:04}", index + 1),
            seed: spec.seed,
            n: spec.n,
            start: env.start,
            goal: env.goal,
            origin: Origin::Maze(*spec),
        },
        occupancy: env.occupancy,
    })
}

pub fn scene_problem(spec: &SceneSpec, index: usize, robot_radius: f64) -> Result<Problem> {
    let scene = generate_scene(spec, robot_radius).with_context(|| format!("scene seed={}", spec.seed))?;
    Ok(Problem {
        meta: Meta {
            id: format!("scene_{:04}", index + 1),
            seed: spec.seed,
            n: 0,
            start: scene.start,
            goal: scene.goal,
            origin: Origin::Obstructed(*spec),
        },
        occupancy: scene.occupancy,
    })
}

/// `count` mazes of side `n` with seeds `seed..seed + count`.
pub fn generate_mazes(
    cfg: &CampaignConfig,
    n: usize,
    count: usize,
    seed: u64,
    first_index: usize,
) -> Result<Vec<Problem>> {
    (0..count)
        .map(|k| maze_problem(&cfg.maze_spec(n, seed + k as u64), first_index + k, cfg.robot_radius))
        .collect()
}

pub fn generate_scenes(cfg: &CampaignConfig, count: usize, seed: u64) -> Result<Vec<Problem>> {
    (0..count)
        .map(|k| scene_problem(&SceneSpec::new(seed + k as u64), k, cfg.robot_radius))
        .collect()
}

/// Problems of a campaign: loaded from `cfg.corpus` if set, otherwise
/// generated from `kind`, `sizes`, `count` and `seed`.
pub fn campaign_problems(cfg: &CampaignConfig) -> Result<Vec<Problem>> {
    let problems = match &cfg.corpus {
        Some(dir) => load_corpus(dir)?,
        None => match cfg.kind {
            CorpusKind::Maze => {
                let mut all = Vec::new();
                for &n in &cfg.sizes {
                    let first = all.len();
                    all.extend(generate_mazes(cfg, n, cfg.count, cfg.seed, first)?);
                }
                all
            }
            CorpusKind::Obstructed => generate_scenes(cfg, cfg.count, cfg.seed)?,
        },
    };
    if problems.is_empty() {
        bail!("corpus is empty");
    }
    Ok(problems)
}

pub fn write_problem(problem: &Problem, dir: &Path) -> Result<PathBuf> {
    let sub = dir.join(&problem.meta.id);
    fs::create_dir_all(&sub).with_context(|| format!("creating {}", sub.display()))?;
    write_grid(&problem.occupancy, &sub.join(OCCUPANCY_FILE))?;
    let meta = serde_json::to_string_pretty(&problem.meta)?;
    let path = sub.join(META_FILE);
    fs::write(&path, meta + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(sub)
}

pub fn write_corpus(problems: &[Problem], dir: &Path) -> Result<()> {
    for p in problems {
        write_problem(p, dir)?;
    }
    Ok(())
}

pub fn load_problem(sub: &Path) -> Result<Problem> {
    let path = sub.join(META_FILE);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let meta: Meta = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let occupancy = read_grid(&sub.join(OCCUPANCY_FILE))?;
    Ok(Problem { meta, occupancy })
}

/// Every subdirectory holding a `meta.json`, in name order.
pub fn load_corpus(dir: &Path) -> Result<Vec<Problem>> {
    let entries = fs::read_dir(dir).with_context(|| format!("reading corpus {}", dir.display()))?;
    let mut subs = Vec::new();
    for e in entries {
        let p = e.with_context(|| format!("reading corpus {}", dir.display()))?.path();
        if p.join(META_FILE).is_file() {
            subs.push(p);
        }
    }
    subs.sort();
    subs.iter().map(|s| load_problem(s)).collect()
}
