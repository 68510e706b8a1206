//! Plane-stress finite elements on a regular grid of unit squares.

mod band;
mod density;
mod element;
mod grid;
mod load;
mod material;

use serde::{Deserialize, Serialize};

pub use density::DensityField;
pub use element::{
    constitutive, element_stiffness, quadratic_form, strain_displacement, ElementMatrix,
};
pub use grid::GridDomain;
pub use load::{LoadCase, PointForce};
pub use material::MaterialModel;

use crate::error::{Error, Result};
use band::BandMatrix;

/// Relative residual the reduced system must reach.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Target for iterative refinement, one decade tighter than [`RESIDUAL_TOL`].
const REFINE_TOL: f64 = 1e-10;
const MAX_REFINE_STEPS: usize = 4;

/// Displacements and per-element derived fields of one static solve.
/// Element fields are row-major, like [`DensityField`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFields {
    pub displacements: Vec<f64>,
    pub compliance_per_element: Vec<f64>,
    pub von_mises: Vec<f64>,
    pub strain_energy_density: Vec<f64>,
    /// Centroid stresses `[sx, sy, sxy]`.
    pub stresses: Vec<[f64; 3]>,
    /// Centroid strains `[ex, ey, exy]` with tensor (not engineering) shear.
    pub strains: Vec<[f64; 3]>,
    pub total_compliance: f64,
    /// `||K_ff u_f - f_f|| / ||f_f||` after refinement (0 for zero load).
    pub relative_residual: f64,
}

/// von Mises equivalent stress under plane stress.
#[inline]
pub fn von_mises(sx: f64, sy: f64, sxy: f64) -> f64 {
    (sx * sx + sy * sy - sx * sy + 3.0 * sxy * sxy)
        .max(0.0)
        .sqrt()
}

/// Strain-energy density `(sx ex + sy ey + 2 sxy exy) / 2`, with `exy` the
/// tensor shear strain.
#[inline]
pub fn strain_energy_density(sx: f64, sy: f64, sxy: f64, ex: f64, ey: f64, exy: f64) -> f64 {
    (sx * ex + sy * ey + 2.0 * sxy * exy) / 2.0
}

/// Gathers the eight element DOF values from a global vector.
#[inline]
pub fn element_displacements(grid: &GridDomain, u: &[f64], col: usize, row: usize) -> [f64; 8] {
    grid.element_dofs(col, row).map(|d| u[d])
}

/// Assembles `K(rho)`, eliminates the constrained DOFs and solves `K U = F`,
/// then evaluates compliance, centroid stresses and strain-energy density
/// per element.
pub fn solve_system(
    grid: &GridDomain,
    rho: &DensityField,
    mat: &MaterialModel,
    lc: &LoadCase,
) -> Result<SolutionFields> {
    mat.validate()?;
    rho.check_grid(grid)?;
    lc.validate(grid)?;
    let ke = element_stiffness(mat.nu)?;

    let ndof = grid.dof_count();
    let mut reduced = vec![usize::MAX; ndof];
    let mut free = Vec::with_capacity(ndof);
    let mut fixed_iter = lc.fixed_dofs.iter().peekable();
    for dof in 0..ndof {
        if fixed_iter.peek() == Some(&&dof) {
            fixed_iter.next();
        } else {
            reduced[dof] = free.len();
            free.push(dof);
        }
    }

    let force = lc.force_vector(grid);
    let f_free: Vec<f64> = free.iter().map(|&d| force[d]).collect();
    let f_norm = norm(&f_free);

    let moduli: Vec<f64> = rho.values().iter().map(|&r| mat.modulus(r)).collect();
    let mut u = vec![0.0; ndof];
    let mut relative_residual = 0.0;

    if f_norm > 0.0 && !free.is_empty() {
        let mut bw = 0;
        for col in 0..grid.nelx() {
            for row in 0..grid.nely() {
                let idx = grid.element_dofs(col, row).map(|d| reduced[d]);
                let active = idx.iter().filter(|&&r| r != usize::MAX);
                let (lo, hi) = active.fold((usize::MAX, 0), |(lo, hi), &r| (lo.min(r), hi.max(r)));
                if lo != usize::MAX {
                    bw = bw.max(hi - lo);
                }
            }
        }
        let mut k = BandMatrix::zeros(free.len(), bw);
        for col in 0..grid.nelx() {
            for row in 0..grid.nely() {
                let e = moduli[grid.field_index(col, row)];
                let idx = grid.element_dofs(col, row).map(|d| reduced[d]);
                for a in 0..8 {
                    if idx[a] == usize::MAX {
                        continue;
                    }
                    for b in 0..8 {
                        if idx[b] == usize::MAX || idx[b] > idx[a] {
                            continue;
                        }
                        k.add(idx[a], idx[b], e * ke[a][b]);
                    }
                }
            }
        }

        let factor = k.clone().cholesky()?;
        let mut x = factor.solve(&f_free);
        relative_residual = residual_norm(&k, &x, &f_free) / f_norm;
        let mut steps = 0;
        while relative_residual > REFINE_TOL && steps < MAX_REFINE_STEPS {
            let kx = k.mul_vec(&x);
            let r: Vec<f64> = f_free.iter().zip(&kx).map(|(f, v)| f - v).collect();
            let dx = factor.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            relative_residual = residual_norm(&k, &x, &f_free) / f_norm;
            steps += 1;
        }
        if !(relative_residual <= RESIDUAL_TOL) {
            return Err(Error::Solve(format!(
                "relative residual {relative_residual:e} above {RESIDUAL_TOL:e} after refinement"
            )));
        }
        for (&dof, &v) in free.iter().zip(&x) {
            u[dof] = v;
        }
    }

    let nel = grid.element_count();
    let mut compliance_per_element = vec![0.0; nel];
    let mut von_mises_field = vec![0.0; nel];
    let mut sed = vec![0.0; nel];
    let mut stresses = vec![[0.0; 3]; nel];
    let mut strains = vec![[0.0; 3]; nel];
    let b0 = strain_displacement(0.0, 0.0);
    let d_unit = constitutive(1.0, mat.nu);
    for col in 0..grid.nelx() {
        for row in 0..grid.nely() {
            let fi = grid.field_index(col, row);
            let ue = element_displacements(grid, &u, col, row);
            let e = moduli[fi];
            compliance_per_element[fi] = e * quadratic_form(&ke, &ue);

            let eng: [f64; 3] = std::array::from_fn(|r| (0..8).map(|c| b0[r][c] * ue[c]).sum());
            let s: [f64; 3] =
                std::array::from_fn(|r| e * (0..3).map(|c| d_unit[r][c] * eng[c]).sum::<f64>());
            let strain = [eng[0], eng[1], eng[2] / 2.0];
            von_mises_field[fi] = von_mises(s[0], s[1], s[2]);
            sed[fi] = strain_energy_density(s[0], s[1], s[2], strain[0], strain[1], strain[2]);
            stresses[fi] = s;
            strains[fi] = strain;
        }
    }
    let total_compliance = compliance_per_element.iter().sum();
    let all_finite = u
        .iter()
        .chain(&compliance_per_element)
        .chain(&von_mises_field)
        .chain(&sed)
        .all(|v| v.is_finite());
    if !all_finite {
        return Err(Error::Solve("solution contains non-finite values".into()));
    }

    Ok(SolutionFields {
        displacements: u,
        compliance_per_element,
        von_mises: von_mises_field,
        strain_energy_density: sed,
        stresses,
        strains,
        total_compliance,
        relative_residual,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual_norm(k: &BandMatrix, x: &[f64], f: &[f64]) -> f64 {
    debug_assert_eq!(k.dim(), x.len());
    let kx = k.mul_vec(x);
    norm(&kx.iter().zip(f).map(|(a, b)| a - b).collect::<Vec<_>>())
}
