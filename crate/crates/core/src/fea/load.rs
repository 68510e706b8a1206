use serde::{Deserialize, Serialize};

use super::GridDomain;
use crate::error::{Error, Result};

/// A concentrated nodal force in newtons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointForce {
    pub node: usize,
    pub fx: f64,
    pub fy: f64,
}

/// Point forces plus the displacement boundary conditions they act against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadCase {
    pub forces: Vec<PointForce>,
    /// Constrained DOF indices, sorted and deduplicated by [`LoadCase::new`].
    pub fixed_dofs: Vec<usize>,
    pub bc_template_id: String,
}

impl LoadCase {
    pub fn new(
        forces: Vec<PointForce>,
        mut fixed_dofs: Vec<usize>,
        bc_template_id: impl Into<String>,
    ) -> Self {
        fixed_dofs.sort_unstable();
        fixed_dofs.dedup();
        Self {
            forces,
            fixed_dofs,
            bc_template_id: bc_template_id.into(),
        }
    }

    pub fn validate(&self, grid: &GridDomain) -> Result<()> {
        if self.fixed_dofs.len() < 3 {
            return Err(Error::param(format!(
                "load case needs at least 3 constrained DOFs, got {}",
                self.fixed_dofs.len()
            )));
        }
        if let Some(d) = self.fixed_dofs.iter().find(|&&d| d >= grid.dof_count()) {
            return Err(Error::param(format!(
                "fixed DOF {d} out of range for {} DOFs",
                grid.dof_count()
            )));
        }
        for f in &self.forces {
            if f.node >= grid.node_count() {
                return Err(Error::param(format!(
                    "force node {} out of range for {} nodes",
                    f.node,
                    grid.node_count()
                )));
            }
            if !f.fx.is_finite() || !f.fy.is_finite() {
                return Err(Error::param(format!("non-finite force at node {}", f.node)));
            }
        }
        Ok(())
    }

    /// Dense global force vector. Forces on constrained DOFs are kept here;
    /// the solver drops them when it eliminates those DOFs.
    pub fn force_vector(&self, grid: &GridDomain) -> Vec<f64> {
        let mut f = vec![0.0; grid.dof_count()];
        for pf in &self.forces {
            f[2 * pf.node] += pf.fx;
            f[2 * pf.node + 1] += pf.fy;
        }
        f
    }

    /// Same case with every force multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for f in &mut out.forces {
            f.fx *= factor;
            f.fy *= factor;
        }
        out
    }
}
