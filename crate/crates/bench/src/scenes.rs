//! Open rooms with an obstacle block abutting the start and another abutting
//! the goal. The straight line between them runs into both blocks, so a
//! feasible path has to swing wide right after leaving the start and right
//! before reaching the goal.

use hetgp_core::environment::{build_sdf, OccupancyGrid};
use hetgp_core::maze_gen::solvable_path_exists;
use hetgp_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: f64,
    pub height: f64,
    pub resolution: f64,
    /// Boundary wall thickness (m).
    pub wall_thickness: f64,
    /// Gap between the start (goal) and the face of its block (m).
    pub gap: f64,
    pub block_thickness: f64,
    /// Range of block lengths across the start-goal line (m).
    pub block_len: (f64, f64),
    /// Largest shift of the block center off the start-goal line (m).
    pub max_offset: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            width: 30.0,
            height: 20.0,
            resolution: 0.1,
            wall_thickness: 0.2,
            gap: 1.5,
            block_thickness: 0.6,
            block_len: (4.0, 7.0),
            max_offset: 1.5,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub occupancy: OccupancyGrid,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub spec: SceneSpec,
}

pub fn generate_scene(spec: &SceneSpec, robot_radius: f64) -> Result<Scene> {
    if !(spec.gap > robot_radius) {
        return Err(Error::Config(format!(
            "gap {} leaves no clearance for radius {robot_radius}",
            spec.gap
        )));
    }
    let res = spec.resolution;
    let w = (spec.width / res).round() as usize + 1;
    let h = (spec.height / res).round() as usize + 1;
    let mut occ = OccupancyGrid::new(w, h, res, [0.0, 0.0])?;
    let (x1, y1) = (spec.width, spec.height);
    let t = spec.wall_thickness;
    occ.fill_box([0.0, 0.0], [x1, t]);
    occ.fill_box([0.0, y1 - t], [x1, y1]);
    occ.fill_box([0.0, 0.0], [t, y1]);
    occ.fill_box([x1 - t, 0.0], [x1, y1]);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mid = 0.5 * y1;
    let start = [0.15 * x1, mid];
    let goal = [0.85 * x1, mid];
    for (p, dir) in [(start, 1.0), (goal, -1.0)] {
        let len = rng.random_range(spec.block_len.0..=spec.block_len.1);
        let off = rng.random_range(-spec.max_offset..=spec.max_offset);
        let near = p[0] + dir * spec.gap;
        let far = near + dir * spec.block_thickness;
        let (xa, xb) = (near.min(far), near.max(far));
        let yc = p[1] + off;
        occ.fill_box([xa, yc - 0.5 * len], [xb, yc + 0.5 * len]);
    }

    let sdf = build_sdf(&occ);
    for (name, p) in [("start", start), ("goal", goal)] {
        let d = sdf.query_distance(p);
        if d <= robot_radius {
            return Err(Error::Config(format!(
                "{name} clearance {d} is not above {robot_radius}"
            )));
        }
    }
    if !solvable_path_exists(&sdf, start, goal, robot_radius) {
        return Err(Error::Config(format!("scene {} has no path", spec.seed)));
    }
    Ok(Scene {
        occupancy: occ,
        start,
        goal,
        spec: *spec,
    })
}
