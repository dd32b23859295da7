//! Perfect mazes from Wilson's algorithm, rasterized into metric occupancy
//! grids.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{OccupancyGrid, SignedDistanceField};
use crate::error::{Error, Result};

/// Random-walk step cap; reaching it means something is badly wrong.
pub const WALK_STEP_CAP: u64 = 10_000_000;

/// Spanning tree over an `n × n` cell graph. Cell `(x, y)` has index
/// `y·n + x`; passages are stored as sorted index pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanningTree {
    pub n: usize,
    pub passages: Vec<(usize, usize)>,
}

impl SpanningTree {
    pub fn has_passage(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.passages.binary_search(&key).is_ok()
    }

    /// Union-find check that the passages form a spanning tree of the grid
    /// graph.
    pub fn is_spanning_tree(&self) -> bool {
        let cells = self.n * self.n;
        if self.passages.len() + 1 != cells {
            return false;
        }
        let mut parent: Vec<usize> = (0..cells).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.passages {
            let adjacent = (b == a + 1 && a % self.n + 1 < self.n) || b == a + self.n;
            if b >= cells || !adjacent {
                return false;
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        true
    }
}

fn neighbors(n: usize, c: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (c % n, c / n);
    [
        (x > 0).then(|| c - 1),
        (x + 1 < n).then(|| c + 1),
        (y > 0).then(|| c - n),
        (y + 1 < n).then(|| c + n),
    ]
    .into_iter()
    .flatten()
}

/// Uniform spanning tree by loop-erased random walks.
pub fn wilson_maze(n: usize, seed: u64) -> Result<SpanningTree> {
    if n < 2 {
        return Err(Error::invalid(format!("maze needs n >= 2, got {n}")));
    }
    let cells = n * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_tree = vec![false; cells];
    let mut next = vec![usize::MAX; cells];
    let mut passages = Vec::with_capacity(cells - 1);
    let mut steps = 0u64;
    let mut nbrs = Vec::with_capacity(4);

    in_tree[rng.random_range(0..cells)] = true;
    for start in 0..cells {
        // Walking overwrites `next`, which erases loops implicitly.
        let mut u = start;
        while !in_tree[u] {
            nbrs.clear();
            nbrs.extend(neighbors(n, u));
            let v = nbrs[rng.random_range(0..nbrs.len())];
            next[u] = v;
            u = v;
            steps += 1;
            if steps > WALK_STEP_CAP {
                return Err(Error::WalkStepCap {
                    seed,
                    steps: WALK_STEP_CAP,
                });
            }
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            passages.push((u.min(next[u]), u.max(next[u])));
            u = next[u];
        }
    }
    passages.sort_unstable();
    Ok(SpanningTree { n, passages })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MazeSpec {
    pub n: usize,
    /// Side of one logical cell, wall center to wall center (m).
    pub cell_size: f64,
    pub wall_thickness: f64,
    /// Raster resolution (m/cell).
    pub resolution: f64,
    pub seed: u64,
}

/// Side of the square maze footprint used by [`MazeSpec::new`] (m).
pub const DEFAULT_EXTENT: f64 = 30.0;

impl MazeSpec {
    /// Fixed `DEFAULT_EXTENT` footprint split into `n` cells per side, so
    /// larger `n` means narrower, longer corridors.
    pub fn new(n: usize, seed: u64) -> Self {
        Self::with_extent(n, DEFAULT_EXTENT, seed)
    }

    pub fn with_extent(n: usize, extent: f64, seed: u64) -> Self {
        Self {
            n,
            cell_size: extent / n.max(1) as f64,
            wall_thickness: 0.2,
            resolution: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("maze needs n >= 2, got {}", self.n)));
        }
        if !(self.wall_thickness > 0.0 && self.wall_thickness < self.cell_size) {
            return Err(Error::Config(format!(
                "wall thickness {} must lie in (0, cell size {})",
                self.wall_thickness, self.cell_size
            )));
        }
        if !(self.resolution > 0.0) {
            return Err(Error::Config("resolution must be positive".into()));
        }
        Ok(())
    }

    /// World center of logical cell `(x, y)`.
    pub fn cell_center(&self, x: usize, y: usize) -> [f64; 2] {
        [(x as f64 + 0.5) * self.cell_size, (y as f64 + 0.5) * self.cell_size]
    }

    /// Logical cell containing a world point.
    pub fn logical_cell(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let x = (p[0] / self.cell_size).floor();
        let y = (p[1] / self.cell_size).floor();
        let n = self.n as f64;
        (x >= 0.0 && y >= 0.0 && x < n && y < n).then_some((x as usize, y as usize))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MazeEnvironment {
    pub occupancy: OccupancyGrid,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub spec: MazeSpec,
    pub tree: SpanningTree,
}

/// Draws walls on every closed edge and the outer boundary, plus a post at
/// every lattice point. Start is the center of cell (0, 0), goal the center
/// of cell (n−1, n−1). No clearance check.
pub fn rasterize(tree: &SpanningTree, spec: &MazeSpec) -> Result<MazeEnvironment> {
    spec.validate()?;
    if tree.n != spec.n {
        return Err(Error::invalid(format!(
            "tree is {0}x{0} but spec asks for {1}x{1}",
            tree.n, spec.n
        )));
    }
    let (n, cs, half, res) = (spec.n, spec.cell_size, 0.5 * spec.wall_thickness, spec.resolution);
    // Cell centers sit on odd multiples of res/2 so that wall faces at
    // multiples of res never coincide with a center.
    let pad = (half / res).ceil() + 2.0;
    let origin = 0.5 * res - pad * res;
    let span = n as f64 * cs - 2.0 * origin;
    let cells = (span / res).ceil() as usize + 1;
    let mut grid = OccupancyGrid::new(cells, cells, res, [origin, origin])?;

    let extent = n as f64 * cs;
    for k in 0..=n {
        let at = k as f64 * cs;
        for l in 0..=n {
            let other = l as f64 * cs;
            grid.fill_box([at - half, other - half], [at + half, other + half]);
        }
    }
    for side in [0.0, extent] {
        grid.fill_box([side - half, -half], [side + half, extent + half]);
        grid.fill_box([-half, side - half], [extent + half, side + half]);
    }
    for y in 0..n {
        for x in 0..n {
            let c = y * n + x;
            if x + 1 < n && !tree.has_passage(c, c + 1) {
                let wx = (x + 1) as f64 * cs;
                grid.fill_box(
                    [wx - half, y as f64 * cs - half],
                    [wx + half, (y + 1) as f64 * cs + half],
                );
            }
            if y + 1 < n && !tree.has_passage(c, c + n) {
                let wy = (y + 1) as f64 * cs;
                grid.fill_box(
                    [x as f64 * cs - half, wy - half],
                    [(x + 1) as f64 * cs + half, wy + half],
                );
            }
        }
    }
    Ok(MazeEnvironment {
        occupancy: grid,
        start: spec.cell_center(0, 0),
        goal: spec.cell_center(n - 1, n - 1),
        spec: *spec,
        tree: tree.clone(),
    })
}

/// Rasterizes the tree and checks that start and goal clear `robot_radius`.
pub fn inflate(tree: &SpanningTree, spec: &MazeSpec, robot_radius: f64) -> Result<MazeEnvironment> {
    let env = rasterize(tree, spec)?;
    let sdf = crate::environment::build_sdf(&env.occupancy);
    for (name, p) in [("start", env.start), ("goal", env.goal)] {
        let d = sdf.query_distance(p);
        if !(d > robot_radius) {
            return Err(Error::Config(format!(
                "{name} clearance {d:.3} m does not exceed robot radius {robot_radius} m \
                 (cell size {}, wall {})",
                spec.cell_size, spec.wall_thickness
            )));
        }
    }
    Ok(env)
}

pub fn generate_maze(spec: &MazeSpec, robot_radius: f64) -> Result<MazeEnvironment> {
    let tree = wilson_maze(spec.n, spec.seed)?;
    inflate(&tree, spec, robot_radius)
}

/// Breadth-first search over raster cells whose distance exceeds
/// `robot_radius`, from the start cell to the goal cell.
pub fn solvable_path_exists(sdf: &SignedDistanceField, start: [f64; 2], goal: [f64; 2], robot_radius: f64) -> bool {
    let (w, h) = (sdf.width(), sdf.height());
    let to_cell = |p: [f64; 2]| -> Option<usize> {
        let gx = ((p[0] - sdf.origin()[0]) / sdf.resolution()).round();
        let gy = ((p[1] - sdf.origin()[1]) / sdf.resolution()).round();
        (gx >= 0.0 && gy >= 0.0 && gx < w as f64 && gy < h as f64).then(|| gy as usize * w + gx as usize)
    };
    let (Some(s), Some(g)) = (to_cell(start), to_cell(goal)) else {
        return false;
    };
    let free = |k: usize| sdf.values()[k] > robot_radius;
    if !free(s) || !free(g) {
        return false;
    }
    let mut seen = vec![false; w * h];
    let mut queue = VecDeque::from([s]);
    seen[s] = true;
    while let Some(k) = queue.pop_front() {
        if k == g {
            return true;
        }
        let (i, j) = (k % w, k / w);
        let nbrs = [
            (i > 0).then(|| k - 1),
            (i + 1 < w).then(|| k + 1),
            (j > 0).then(|| k - w),
            (j + 1 < h).then(|| k + w),
        ];
        for m in nbrs.into_iter().flatten() {
            if !seen[m] && free(m) {
                seen[m] = true;
                queue.push_back(m);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::build_sdf;

    #[test]
    fn two_by_two_has_three_passages() {
        for seed in 0..20 {
            let t = wilson_maze(2, seed).unwrap();
            assert_eq!(t.passages.len(), 3);
            assert!(t.is_spanning_tree());
        }
        assert!(wilson_maze(1, 0).is_err());
    }

    #[test]
    fn trees_for_many_sizes_and_seeds() {
        for n in 2..8 {
            for seed in 0..25 {
                assert!(wilson_maze(n, seed).unwrap().is_spanning_tree(), "n={n} seed={seed}");
            }
        }
    }

    #[test]
    fn spanning_tree_check_rejects_cycles_and_non_edges() {
        let path = SpanningTree {
            n: 2,
            passages: vec![(0, 1), (0, 2), (1, 3)],
        };
        assert!(path.is_spanning_tree());
        let bad = SpanningTree {
            n: 2,
            passages: vec![(0, 1), (0, 3), (1, 3)],
        };
        assert!(!bad.is_spanning_tree());
        let wrap = SpanningTree {
            n: 3,
            passages: vec![(2, 3), (0, 1), (1, 2), (0, 3), (3, 6), (4, 5), (5, 8), (6, 7)],
        };
        assert!(!wrap.is_spanning_tree());
    }

    #[test]
    fn default_inflation_keeps_corridors_clear() {
        for seed in 0..5 {
            let spec = MazeSpec {
                cell_size: 2.0,
                resolution: 0.05,
                ..MazeSpec::new(4, seed)
            };
            let env = generate_maze(&spec, 0.5).unwrap();
            let sdf = build_sdf(&env.occupancy);
            for y in 0..4 {
                for x in 0..4 {
                    let d = sdf.query_distance(env.spec.cell_center(x, y));
                    // Corridor half-width is 0.9 m; logical cell centers fall
                    // between raster centers, hence the half-cell slack.
                    assert!(d >= 0.9 - 0.5 * 0.05, "cell ({x},{y}) clearance {d}");
                }
            }
            assert!(solvable_path_exists(&sdf, env.start, env.goal, 0.5));
            assert_eq!(env.spec.logical_cell(env.start), Some((0, 0)));
            assert_eq!(env.spec.logical_cell(env.goal), Some((3, 3)));
        }
    }

    #[test]
    fn fixed_extent_defaults_are_solvable() {
        for n in 3..=5 {
            let env = generate_maze(&MazeSpec::new(n, 9), 0.5).unwrap();
            assert!((env.spec.cell_size * n as f64 - DEFAULT_EXTENT).abs() < 1e-12);
            let sdf = build_sdf(&env.occupancy);
            assert!(solvable_path_exists(&sdf, env.start, env.goal, 0.5));
        }
    }

    #[test]
    fn closed_edges_are_walls() {
        let spec = MazeSpec {
            cell_size: 2.0,
            ..MazeSpec::new(3, 11)
        };
        let env = generate_maze(&spec, 0.5).unwrap();
        let sdf = build_sdf(&env.occupancy);
        for y in 0..3 {
            for x in 0..2 {
                let c = y * 3 + x;
                let mid = [(x + 1) as f64 * 2.0, (y as f64 + 0.5) * 2.0];
                let d = sdf.query_distance(mid);
                if env.tree.has_passage(c, c + 1) {
                    assert!(d > 0.5);
                } else {
                    assert!(d <= 0.1, "wall between {c} and {} reads {d}", c + 1);
                }
            }
        }
    }

    #[test]
    fn narrow_corridors_are_not_solvable() {
        let spec = MazeSpec {
            n: 3,
            cell_size: 1.2,
            wall_thickness: 0.6,
            resolution: 0.05,
            seed: 3,
        };
        let tree = wilson_maze(3, 3).unwrap();
        assert!(matches!(inflate(&tree, &spec, 0.5), Err(Error::Config(_))));
        let env = rasterize(&tree, &spec).unwrap();
        let sdf = build_sdf(&env.occupancy);
        assert!(!solvable_path_exists(&sdf, env.start, env.goal, 0.5));
        assert!(solvable_path_exists(&sdf, env.start, env.goal, 0.0));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_maze(&MazeSpec::new(5, 77), 0.5).unwrap();
        let b = generate_maze(&MazeSpec::new(5, 77), 0.5).unwrap();
        assert_eq!(a, b);
        let c = generate_maze(&MazeSpec::new(5, 78), 0.5).unwrap();
        assert_ne!(a.tree, c.tree);
    }
}
