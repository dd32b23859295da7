use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp_prior::TimeGrid;

/// Position and velocity of one support state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl StateVector {
    pub fn new(position: Vec<f64>, velocity: Vec<f64>) -> Result<Self> {
        if position.is_empty() || position.len() != velocity.len() {
            return Err(Error::invalid(format!(
                "state needs equal, non-zero position/velocity dimensions (got {} and {})",
                position.len(),
                velocity.len()
            )));
        }
        if position.iter().chain(&velocity).any(|v| !v.is_finite()) {
            return Err(Error::invalid("state entries must be finite"));
        }
        Ok(Self { position, velocity })
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    /// Flat `[p_1..p_D, v_1..v_D]` layout used by the precision blocks.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.position.clone();
        out.extend_from_slice(&self.velocity);
        out
    }

    pub fn from_flat(values: &[f64]) -> Self {
        let d = values.len() / 2;
        Self {
            position: values[..d].to_vec(),
            velocity: values[d..].to_vec(),
        }
    }
}

/// Support states of a trajectory on an equidistant time grid, stored flat:
/// state `i` occupies `values[i*2D .. (i+1)*2D]` as `[positions, velocities]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    grid: TimeGrid,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn from_flat(dim: usize, grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("trajectory dimension must be at least 1"));
        }
        let expected = 2 * dim * grid.n_support();
        if values.len() != expected {
            return Err(Error::invalid(format!(
                "trajectory needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self { dim, grid, values })
    }

    pub fn from_states(grid: TimeGrid, states: &[StateVector]) -> Result<Self> {
        let dim = states.first().map(StateVector::dim).unwrap_or(0);
        if states.iter().any(|s| s.dim() != dim) {
            return Err(Error::invalid("states have mixed dimensions"));
        }
        let values = states.iter().flat_map(StateVector::to_flat).collect();
        Self::from_flat(dim, grid, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state_len(&self) -> usize {
        2 * self.dim
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.state_len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn state_slice(&self, i: usize) -> &[f64] {
        let n = self.state_len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.state_slice(i)[..self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.state_slice(i)[self.dim..]
    }

    pub fn state(&self, i: usize) -> StateVector {
        StateVector::from_flat(self.state_slice(i))
    }

    pub fn states(&self) -> Vec<StateVector> {
        (0..self.len()).map(|i| self.state(i)).collect()
    }
}
