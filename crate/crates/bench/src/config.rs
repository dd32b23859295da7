//! Campaign configuration: defaults, then a TOML file, then `HETGP_SEED`,
//! then command-line flags of the same names.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Args;
use hetgp_core::environment::CostParams;
use hetgp_core::gp_prior::{Anchors, NoiseProfile, TimeGrid};
use hetgp_core::maze_gen::MazeSpec;
use hetgp_core::optimizer::OptimizerConfig;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const SEED_ENV: &str = "HETGP_SEED";

/// Side length of the square maze footprint, independent of `n`.
pub const DEFAULT_MAZE_EXTENT: f64 = 30.0;

/// Noise profile of one campaign arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `q_c(t) = (t − t_total/2)²`.
    Heteroscedastic,
    /// Constant power with the same integral as the parabolic profile.
    Homoscedastic,
    /// Constant power `q_c`.
    Constant(f64),
}

impl Profile {
    pub fn noise(&self, t_total: f64) -> NoiseProfile {
        match *self {
            Profile::Heteroscedastic => NoiseProfile::Parabolic { t_total },
            Profile::Homoscedastic => NoiseProfile::matched_constant(t_total),
            Profile::Constant(q_c) => NoiseProfile::Constant { q_c },
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Heteroscedastic => f.write_str("heteroscedastic"),
            Profile::Homoscedastic => f.write_str("homoscedastic"),
            Profile::Constant(q) => write!(f, "constant:{q}"),
        }
    }
}

impl FromStr for Profile {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heteroscedastic" | "parabolic" => Ok(Profile::Heteroscedastic),
            "homoscedastic" | "matched" => Ok(Profile::Homoscedastic),
            _ => match s.strip_prefix("constant:") {
                Some(q) => {
                    let q: f64 = q.parse().with_context(|| format!("bad constant power in {s:?}"))?;
                    if !(q > 0.0) {
                        bail!("constant power must be positive, got {q}");
                    }
                    Ok(Profile::Constant(q))
                }
                None => bail!("unknown profile {s:?} (heteroscedastic, homoscedastic, constant:<q>)"),
            },
        }
    }
}

impl Serialize for Profile {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Profile {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusKind {
    /// Wilson mazes with start and goal in opposite corners.
    Maze,
    /// Open rooms with blocks abutting start and goal.
    Obstructed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// Existing corpus directory; when unset the corpus is generated in memory.
    pub corpus: Option<PathBuf>,
    pub kind: CorpusKind,
    pub sizes: Vec<usize>,
    /// Problems per size.
    pub count: usize,
    pub seed: u64,
    pub arms: Vec<Profile>,

    pub k_samples: usize,
    pub m_elites: usize,
    pub t_max_ms: u64,
    pub max_iters: usize,
    pub n_support: usize,
    pub steps_per_interval: usize,
    pub t_total: f64,
    pub anchor_var: f64,
    pub worker_count: usize,
    /// Drop the wall-clock budget and run exactly `max_iters`.
    pub deterministic: bool,

    pub robot_radius: f64,
    pub safety_margin: f64,
    pub maze_extent: f64,
    pub wall_thickness: f64,
    pub resolution: f64,

    pub output: PathBuf,
    /// Write one JSON record per run under `output/runs`.
    pub save_runs: bool,
    /// Plan several problems at once; timings are then not comparable.
    pub parallel_corpus: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            kind: CorpusKind::Maze,
            sizes: vec![3],
            count: 10,
            seed: 0,
            arms: vec![Profile::Heteroscedastic],
            k_samples: 400,
            m_elites: 3,
            t_max_ms: 1000,
            max_iters: 1000,
            n_support: 11,
            steps_per_interval: 5,
            t_total: 20.0,
            anchor_var: 1e-6,
            worker_count: std::thread::available_parallelism().map_or(1, |n| n.get()),
            deterministic: false,
            robot_radius: 0.5,
            safety_margin: 0.1,
            maze_extent: DEFAULT_MAZE_EXTENT,
            wall_thickness: 0.2,
            resolution: 0.1,
            output: PathBuf::from("campaign-out"),
            save_runs: true,
            parallel_corpus: false,
        }
    }
}

impl CampaignConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Loads the optional file, then applies `HETGP_SEED` and the flags.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => Self::from_toml_file(p)?,
            None => Self::default(),
        };
        if let Ok(seed) = std::env::var(SEED_ENV) {
            cfg.seed = seed
                .trim()
                .parse()
                .with_context(|| format!("{SEED_ENV}={seed:?} is not an unsigned integer"))?;
        }
        overrides.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms.is_empty() {
            bail!("a campaign needs at least one arm");
        }
        if self.count == 0 {
            bail!("count must be at least 1");
        }
        if self.corpus.is_none() && self.sizes.is_empty() {
            bail!("no maze sizes given");
        }
        self.optimizer(0).validate()?;
        self.cost_params().validate()?;
        TimeGrid::new(self.t_total, self.n_support)?;
        Ok(())
    }

    pub fn optimizer(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            k_samples: self.k_samples,
            m_elites: self.m_elites,
            time_budget: (!self.deterministic).then(|| Duration::from_millis(self.t_max_ms)),
            max_iters: self.max_iters,
            steps_per_interval: self.steps_per_interval,
            seed,
            worker_count: self.worker_count,
            record_history: false,
        }
    }

    pub fn cost_params(&self) -> CostParams {
        CostParams {
            robot_radius: self.robot_radius,
            safety_margin: self.safety_margin,
        }
    }

    pub fn anchors(&self) -> Anchors {
        Anchors {
            start_var: self.anchor_var,
            goal_var: self.anchor_var,
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        Ok(TimeGrid::new(self.t_total, self.n_support)?)
    }

    pub fn maze_spec(&self, n: usize, seed: u64) -> MazeSpec {
        MazeSpec {
            n,
            cell_size: self.maze_extent / n as f64,
            wall_thickness: self.wall_thickness,
            resolution: self.resolution,
            seed,
        }
    }
}

/// Flags that override config-file fields of the same name.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<CorpusKind>,
    /// Comma-separated maze sizes, e.g. `3,4,5`.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated arms: heteroscedastic, homoscedastic, constant:<q>.
    #[arg(long, value_delimiter = ',')]
    pub arms: Option<Vec<Profile>>,
    #[arg(long)]
    pub k_samples: Option<usize>,
    #[arg(long)]
    pub m_elites: Option<usize>,
    #[arg(long)]
    pub t_max_ms: Option<u64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub n_support: Option<usize>,
    #[arg(long)]
    pub steps_per_interval: Option<usize>,
    #[arg(long)]
    pub t_total: Option<f64>,
    #[arg(long)]
    pub anchor_var: Option<f64>,
    #[arg(long)]
    pub worker_count: Option<usize>,
    #[arg(long)]
    pub deterministic: Option<bool>,
    #[arg(long)]
    pub robot_radius: Option<f64>,
    #[arg(long)]
    pub safety_margin: Option<f64>,
    #[arg(long)]
    pub maze_extent: Option<f64>,
    #[arg(long)]
    pub wall_thickness: Option<f64>,
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub save_runs: Option<bool>,
    #[arg(long)]
    pub parallel_corpus: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut CampaignConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*
            };
        }
        set!(
            kind,
            sizes,
            count,
            seed,
            arms,
            k_samples,
            m_elites,
            t_max_ms,
            max_iters,
            n_support,
            steps_per_interval,
            t_total,
            anchor_var,
            worker_count,
            deterministic,
            robot_radius,
            safety_margin,
            maze_extent,
            wall_thickness,
            resolution,
            output,
            save_runs,
            parallel_corpus
        );
        if let Some(c) = &self.corpus {
            cfg.corpus = Some(c.clone());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_parse_and_print() {
        for s in ["heteroscedastic", "homoscedastic", "constant:2"] {
            assert_eq!(s.parse::<Profile>().unwrap().to_string(), s);
        }
        assert!("constant:-1".parse::<Profile>().is_err());
        assert!("banana".parse::<Profile>().is_err());
    }

    #[test]
    fn toml_fields_and_flag_overrides() {
        let cfg: CampaignConfig = toml::from_str(
            r#"
            sizes = [3, 4]
            count = 7
            arms = ["heteroscedastic", "constant:2"]
            deterministic = true
            "#,
        )
        .unwrap();
        assert_eq!(cfg.sizes, vec![3, 4]);
        assert_eq!(cfg.arms[1], Profile::Constant(2.0));
        assert_eq!(cfg.k_samples, 400);

        let mut cfg = cfg;
        let o = Overrides {
            count: Some(2),
            k_samples: Some(50),
            ..Default::default()
        };
        o.apply(&mut cfg);
        assert_eq!((cfg.count, cfg.k_samples, cfg.sizes.len()), (2, 50, 2));
        assert!(cfg.optimizer(1).time_budget.is_none());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(toml::from_str::<CampaignConfig>("bogus = 1").is_err());
    }

    #[test]
    fn validation() {
        let cfg = CampaignConfig {
            arms: vec![],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = CampaignConfig {
            m_elites: 500,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(CampaignConfig::default().validate().is_ok());
    }
}
