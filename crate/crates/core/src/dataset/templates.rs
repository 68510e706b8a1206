//! Displacement boundary-condition templates.
//!
//! Templates are plain data: a list of (node set, constrained components)
//! rules plus the rectangle where loads may be placed, in fractional
//! physical coordinates (x right, y up). Alternative readings of the BC
//! figure can be loaded from a config file without code changes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fea::GridDomain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeSet {
    LeftEdge,
    RightEdge,
    BottomEdge,
    TopEdge,
    BottomLeft,
    BottomRight,
    TopLeft,
    TopRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Components {
    X,
    Y,
    Xy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub nodes: NodeSet,
    pub dofs: Components,
}

/// Axis-aligned rectangle in fractional domain coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Region {
    pub const BEAM_RIGHT_HALF: Region = Region {
        x_lo: 0.5,
        x_hi: 1.0,
        y_lo: 0.0,
        y_hi: 1.0,
    };

    fn contains(&self, grid: &GridDomain, x: f64, y: f64) -> bool {
        const EPS: f64 = 1e-9;
        let (bx, by) = (grid.nelx() as f64, grid.nely() as f64);
        x >= self.x_lo * bx - EPS
            && x <= self.x_hi * bx + EPS
            && y >= self.y_lo * by - EPS
            && y <= self.y_hi * by + EPS
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcTemplate {
    pub id: String,
    pub constraints: Vec<Constraint>,
    pub force_region: Region,
}

impl BcTemplate {
    /// Built-in templates: `a`..`e` for dataset generation and `mbb` (the
    /// symmetric half of a simply supported beam) for standalone solves.
    pub fn builtin(id: &str) -> Result<Self> {
        use Components::*;
        use NodeSet::*;
        let c = |nodes, dofs| Constraint { nodes, dofs };
        let constraints = match id {
            "a" => vec![c(LeftEdge, Xy)],
            "b" => vec![c(BottomLeft, Xy), c(BottomRight, Y)],
            "c" => vec![c(LeftEdge, Xy), c(RightEdge, Xy)],
            "d" => vec![c(BottomEdge, Xy)],
            "e" => vec![c(LeftEdge, Xy), c(BottomRight, Y)],
            "mbb" => vec![c(LeftEdge, X), c(BottomRight, Y)],
            other => {
                return Err(Error::param(format!(
                    "unknown BC template '{other}' (expected one of a, b, c, d, e, mbb)"
                )))
            }
        };
        let force_region = if id == "mbb" {
            Region {
                x_lo: 0.0,
                x_hi: 1.0,
                y_lo: 0.0,
                y_hi: 1.0,
            }
        } else {
            Region::BEAM_RIGHT_HALF
        };
        Ok(Self {
            id: id.to_string(),
            constraints,
            force_region,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.force_region;
        let ordered = r.x_lo <= r.x_hi && r.y_lo <= r.y_hi;
        let inside = [r.x_lo, r.x_hi, r.y_lo, r.y_hi]
            .iter()
            .all(|v| (0.0..=1.0).contains(v));
        if !ordered || !inside {
            return Err(Error::param(format!(
                "template '{}' has an invalid force region",
                self.id
            )));
        }
        if self.constraints.is_empty() {
            return Err(Error::param(format!(
                "template '{}' has no constraints",
                self.id
            )));
        }
        Ok(())
    }

    fn nodes(set: NodeSet, grid: &GridDomain) -> Vec<usize> {
        let (nx, ny) = (grid.nelx(), grid.nely());
        match set {
            NodeSet::LeftEdge => (0..=ny).map(|r| grid.node_index(0, r)).collect(),
            NodeSet::RightEdge => (0..=ny).map(|r| grid.node_index(nx, r)).collect(),
            NodeSet::BottomEdge => (0..=nx).map(|c| grid.node_index(c, ny)).collect(),
            NodeSet::TopEdge => (0..=nx).map(|c| grid.node_index(c, 0)).collect(),
            NodeSet::BottomLeft => vec![grid.node_index(0, ny)],
            NodeSet::BottomRight => vec![grid.node_index(nx, ny)],
            NodeSet::TopLeft => vec![grid.node_index(0, 0)],
            NodeSet::TopRight => vec![grid.node_index(nx, 0)],
        }
    }

    /// Sorted constrained DOFs on `grid`. Fails when fewer than three
    /// constraints result.
    pub fn fixed_dofs(&self, grid: &GridDomain) -> Result<Vec<usize>> {
        let mut dofs = BTreeSet::new();
        for c in &self.constraints {
            for n in Self::nodes(c.nodes, grid) {
                if matches!(c.dofs, Components::X | Components::Xy) {
                    dofs.insert(2 * n);
                }
                if matches!(c.dofs, Components::Y | Components::Xy) {
                    dofs.insert(2 * n + 1);
                }
            }
        }
        if dofs.len() < 3 {
            return Err(Error::param(format!(
                "template '{}' yields only {} constraints on a {}x{} grid",
                self.id,
                dofs.len(),
                grid.nely(),
                grid.nelx()
            )));
        }
        Ok(dofs.into_iter().collect())
    }

    /// Nodes inside the force region that keep at least one free DOF.
    pub fn admissible_load_nodes(&self, grid: &GridDomain) -> Result<Vec<usize>> {
        let fixed: BTreeSet<usize> = self.fixed_dofs(grid)?.into_iter().collect();
        Ok((0..grid.node_count())
            .filter(|&n| {
                let (x, y) = grid.node_coords(n);
                self.force_region.contains(grid, x, y)
                    && !(fixed.contains(&(2 * n)) && fixed.contains(&(2 * n + 1)))
            })
            .collect())
    }
}
