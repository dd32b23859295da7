//! 2D workspace: occupancy raster, signed distance field and the hinge
//! collision cost of a circular robot.
//!
//! Cell `(i, j)` has its center at `origin + (i, j) * resolution`; cells are
//! stored row-major with `j` (y) as the row index.

mod io;
mod sdf;

use serde::{Deserialize, Serialize};

pub use io::{read_grid, read_sdf, write_grid, write_sdf, RasterHeader};
pub use sdf::build_sdf;

use crate::error::{Error, Result};
use crate::gp_prior::PriorMean;
use crate::interpolation::Interpolator;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: [f64; 2],
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64, origin: [f64; 2]) -> Result<Self> {
        Self::from_cells(width, height, resolution, origin, vec![false; width * height])
    }

    pub fn from_cells(
        width: usize,
        height: usize,
        resolution: f64,
        origin: [f64; 2],
        cells: Vec<bool>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("grid dimensions must be at least 1"));
        }
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::invalid(format!("resolution must be positive, got {resolution}")));
        }
        if cells.len() != width * height {
            return Err(Error::invalid(format!(
                "{width}x{height} grid needs {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            cells,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn is_occupied(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.width + i]
    }

    pub fn set(&mut self, i: usize, j: usize, occupied: bool) {
        self.cells[j * self.width + i] = occupied;
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.resolution,
            self.origin[1] + j as f64 * self.resolution,
        ]
    }

    /// Nearest cell to a world point, if it lies on the raster.
    pub fn cell_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let gx = ((p[0] - self.origin[0]) / self.resolution).round();
        let gy = ((p[1] - self.origin[1]) / self.resolution).round();
        if gx < 0.0 || gy < 0.0 || gx >= self.width as f64 || gy >= self.height as f64 {
            return None;
        }
        Some((gx as usize, gy as usize))
    }

    /// Marks every cell whose center lies in the axis-aligned box.
    pub fn fill_box(&mut self, min: [f64; 2], max: [f64; 2]) {
        // Candidate index range with one cell of slack; the center test decides.
        let range = |lo: f64, hi: f64, o: f64, n: usize| {
            let a = ((lo - o) / self.resolution).floor() - 1.0;
            let b = ((hi - o) / self.resolution).ceil() + 1.0;
            (a.max(0.0) as usize, (b.max(-1.0) + 1.0).min(n as f64) as usize)
        };
        let (i0, i1) = range(min[0], max[0], self.origin[0], self.width);
        let (j0, j1) = range(min[1], max[1], self.origin[1], self.height);
        for j in j0..j1 {
            for i in i0..i1 {
                let c = self.cell_center(i, j);
                if c[0] >= min[0] && c[0] <= max[0] && c[1] >= min[1] && c[1] <= max[1] {
                    self.set(i, j, true);
                }
            }
        }
    }

    /// Length of the raster diagonal in meters.
    pub fn diagonal(&self) -> f64 {
        self.resolution * ((self.width * self.width + self.height * self.height) as f64).sqrt()
    }
}

/// Signed Euclidean distance (meters) to the occupancy boundary, positive in
/// free space.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedDistanceField {
    width: usize,
    height: usize,
    resolution: f64,
    origin: [f64; 2],
    values: Vec<f64>,
}

impl SignedDistanceField {
    pub fn from_values(
        width: usize,
        height: usize,
        resolution: f64,
        origin: [f64; 2],
        values: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::invalid("distance raster shape mismatch"));
        }
        if !(resolution > 0.0) {
            return Err(Error::invalid("resolution must be positive"));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width + i]
    }

    pub fn diagonal(&self) -> f64 {
        self.resolution * ((self.width * self.width + self.height * self.height) as f64).sqrt()
    }

    /// Bilinear interpolation of the cell values. Points off the raster
    /// report `-diagonal`, i.e. deep collision.
    pub fn query_distance(&self, p: [f64; 2]) -> f64 {
        let gx = (p[0] - self.origin[0]) / self.resolution;
        let gy = (p[1] - self.origin[1]) / self.resolution;
        let (w, h) = (self.width as f64, self.height as f64);
        if !(gx >= -0.5 && gx <= w - 0.5 && gy >= -0.5 && gy <= h - 0.5) {
            return -self.diagonal();
        }
        let (i0, fx) = split_axis(gx, self.width);
        let (j0, fy) = split_axis(gy, self.height);
        let i1 = (i0 + 1).min(self.width - 1);
        let j1 = (j0 + 1).min(self.height - 1);
        let v00 = self.value(i0, j0);
        let v10 = self.value(i1, j0);
        let v01 = self.value(i0, j1);
        let v11 = self.value(i1, j1);
        v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy + v11 * fx * fy
    }
}

fn split_axis(g: f64, n: usize) -> (usize, f64) {
    let g = g.clamp(0.0, (n - 1) as f64);
    let i = (g.floor() as usize).min(n.saturating_sub(2));
    (i, g - i as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub robot_radius: f64,
    pub safety_margin: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            robot_radius: 0.5,
            safety_margin: 0.1,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.robot_radius > 0.0) || !(self.safety_margin >= 0.0) {
            return Err(Error::Config(format!(
                "robot radius must be positive and safety margin non-negative ({self:?})"
            )));
        }
        Ok(())
    }

    /// Clearance at which the hinge switches off, `r + ε`.
    pub fn clearance(&self) -> f64 {
        self.robot_radius + self.safety_margin
    }
}

/// `max(ε + r − d, 0)`.
pub fn hinge_cost(d: f64, params: &CostParams) -> f64 {
    (params.clearance() - d).max(0.0)
}

/// Summed hinge cost over a set of 2D positions.
pub fn positions_cost<'a>(
    positions: impl IntoIterator<Item = [f64; 2]> + 'a,
    sdf: &SignedDistanceField,
    params: &CostParams,
) -> f64 {
    positions
        .into_iter()
        .map(|p| hinge_cost(sdf.query_distance(p), params))
        .sum()
}

/// Collision cost of a trajectory: summed hinge cost over the positions of
/// all `N·S + 1` densified states.
pub fn trajectory_cost(
    traj: &Trajectory,
    mean: &PriorMean,
    sdf: &SignedDistanceField,
    params: &CostParams,
    interp: &Interpolator,
) -> Result<f64> {
    if traj.dim() != 2 {
        return Err(Error::invalid("collision cost needs a 2D trajectory"));
    }
    let dense = interp.densify_flat(traj, mean)?;
    Ok(positions_cost(dense.chunks_exact(4).map(|s| [s[0], s[1]]), sdf, params))
}

/// Costs at or below this count as zero; keeps `1/cost` elite weights finite.
pub const ZERO_COST: f64 = 1e-12;

pub fn is_collision_free(
    traj: &Trajectory,
    mean: &PriorMean,
    sdf: &SignedDistanceField,
    params: &CostParams,
    interp: &Interpolator,
) -> Result<bool> {
    Ok(trajectory_cost(traj, mean, sdf, params, interp)? <= ZERO_COST)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hinge_examples() {
        let p = CostParams {
            robot_radius: 0.5,
            safety_margin: 0.1,
        };
        assert!((hinge_cost(0.3, &p) - 0.3).abs() < 1e-12);
        assert_eq!(hinge_cost(0.6, &p), 0.0);
        assert_eq!(hinge_cost(2.0, &p), 0.0);
        assert!(hinge_cost(0.1, &p) > hinge_cost(0.2, &p));
    }

    #[test]
    fn bilinear_query_contract() {
        let values: Vec<f64> = (0..12).map(|v| v as f64 * 0.25).collect();
        let sdf = SignedDistanceField::from_values(4, 3, 0.5, [1.0, 2.0], values).unwrap();
        for j in 0..3 {
            for i in 0..4 {
                let c = [1.0 + i as f64 * 0.5, 2.0 + j as f64 * 0.5];
                assert_eq!(sdf.query_distance(c), sdf.value(i, j));
            }
        }
        let mid = sdf.query_distance([1.25, 2.5]);
        assert_eq!(mid, 0.5 * (sdf.value(0, 1) + sdf.value(1, 1)));
        assert_eq!(sdf.query_distance([-5.0, 2.0]), -sdf.diagonal());
        assert_eq!(sdf.query_distance([1.0, 3.8]), -sdf.diagonal());
    }

    #[test]
    fn grid_validation() {
        assert!(OccupancyGrid::new(0, 3, 0.1, [0.0, 0.0]).is_err());
        assert!(OccupancyGrid::new(3, 3, 0.0, [0.0, 0.0]).is_err());
        assert!(OccupancyGrid::from_cells(2, 2, 0.1, [0.0, 0.0], vec![false; 3]).is_err());
        let g = OccupancyGrid::new(5, 4, 0.2, [1.0, -1.0]).unwrap();
        assert_eq!(g.cell_of(g.cell_center(3, 2)), Some((3, 2)));
        assert_eq!(g.cell_of([0.0, 0.0]), None);
    }

    #[test]
    fn cost_params_validation() {
        assert!(CostParams::default().validate().is_ok());
        let bad = CostParams {
            robot_radius: 0.0,
            safety_margin: 0.1,
        };
        assert!(bad.validate().is_err());
    }
}
