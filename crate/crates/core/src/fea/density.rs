use serde::{Deserialize, Serialize};

use super::GridDomain;
use crate::error::{Error, Result};

/// Per-element densities in `[0, 1]`, stored row-major (`row * nelx + col`,
/// row 0 at the top).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    nelx: usize,
    nely: usize,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(nelx: usize, nely: usize, values: Vec<f64>) -> Result<Self> {
        if nelx == 0 || nely == 0 {
            return Err(Error::param("density field must be non-empty"));
        }
        if values.len() != nelx * nely {
            return Err(Error::Shape {
                expected: format!("{} values ({nely}x{nelx})", nelx * nely),
                actual: format!("{} values", values.len()),
            });
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::param(format!(
                "density {v} at element {i} outside [0, 1]"
            )));
        }
        Ok(Self { nelx, nely, values })
    }

    pub fn uniform(grid: &GridDomain, value: f64) -> Result<Self> {
        Self::new(grid.nelx(), grid.nely(), vec![value; grid.element_count()])
    }

    /// Builds a field from single-precision storage.
    pub fn from_f32(nelx: usize, nely: usize, values: &[f32]) -> Result<Self> {
        Self::new(nelx, nely, values.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn nelx(&self) -> usize {
        self.nelx
    }

    pub fn nely(&self) -> usize {
        self.nely
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.nelx + col]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn matches(&self, grid: &GridDomain) -> bool {
        self.nelx == grid.nelx() && self.nely == grid.nely()
    }

    pub(crate) fn check_grid(&self, grid: &GridDomain) -> Result<()> {
        if self.matches(grid) {
            Ok(())
        } else {
            Err(Error::Shape {
                expected: format!("{}x{}", grid.nely(), grid.nelx()),
                actual: format!("{}x{}", self.nely, self.nelx),
            })
        }
    }

    pub fn check_same_shape(&self, other: &DensityField) -> Result<()> {
        if self.nelx == other.nelx && self.nely == other.nely {
            Ok(())
        } else {
            Err(Error::Shape {
                expected: format!("{}x{}", self.nely, self.nelx),
                actual: format!("{}x{}", other.nely, other.nelx),
            })
        }
    }
}
