//! Bilinear quadrilateral on the unit square, plane stress, unit thickness.
//!
//! Local node order is lower-left, lower-right, upper-right, upper-left, each
//! carrying `(u_x, u_y)`, which matches [`super::GridDomain::element_dofs`].

use crate::error::{Error, Result};

pub type ElementMatrix = [[f64; 8]; 8];

const NODE_XI: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];
const NODE_ETA: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu < 0.5 {
        Ok(())
    } else {
        Err(Error::param(format!("poisson ratio {nu} outside (0, 0.5)")))
    }
}

/// Plane-stress elasticity matrix for modulus `e`, engineering shear strain.
pub fn constitutive(e: f64, nu: f64) -> [[f64; 3]; 3] {
    let f = e / (1.0 - nu * nu);
    [
        [f, f * nu, 0.0],
        [f * nu, f, 0.0],
        [0.0, 0.0, f * (1.0 - nu) / 2.0],
    ]
}

/// Strain-displacement matrix at natural coordinates `(xi, eta)`.
/// Rows are `eps_x`, `eps_y`, `gamma_xy`.
pub fn strain_displacement(xi: f64, eta: f64) -> [[f64; 8]; 3] {
    let mut b = [[0.0; 8]; 3];
    for a in 0..4 {
        // N_a = (1 + xi_a xi)(1 + eta_a eta) / 4; the unit element maps
        // natural to physical coordinates with a factor 1/2.
        let dndx = NODE_XI[a] * (1.0 + NODE_ETA[a] * eta) / 2.0;
        let dndy = NODE_ETA[a] * (1.0 + NODE_XI[a] * xi) / 2.0;
        b[0][2 * a] = dndx;
        b[1][2 * a + 1] = dndy;
        b[2][2 * a] = dndy;
        b[2][2 * a + 1] = dndx;
    }
    b
}

/// Unit-modulus element stiffness, integrated with 2x2 Gauss points (exact
/// for the bilinear element on a square).
pub fn element_stiffness(nu: f64) -> Result<ElementMatrix> {
    check_nu(nu)?;
    let d = constitutive(1.0, nu);
    let g = 1.0 / 3f64.sqrt();
    let det_j = 0.25;
    let mut ke = [[0.0; 8]; 8];
    for xi in [-g, g] {
        for eta in [-g, g] {
            let b = strain_displacement(xi, eta);
            let mut db = [[0.0; 8]; 3];
            for r in 0..3 {
                for c in 0..8 {
                    db[r][c] = (0..3).map(|k| d[r][k] * b[k][c]).sum();
                }
            }
            for i in 0..8 {
                for j in 0..8 {
                    ke[i][j] += det_j * (0..3).map(|k| b[k][i] * db[k][j]).sum::<f64>();
                }
            }
        }
    }
    // Symmetrize away quadrature round-off.
    for i in 0..8 {
        for j in 0..i {
            let avg = 0.5 * (ke[i][j] + ke[j][i]);
            ke[i][j] = avg;
            ke[j][i] = avg;
        }
    }
    Ok(ke)
}

/// `u^T k u` for an element matrix.
#[inline]
pub fn quadratic_form(k: &ElementMatrix, u: &[f64; 8]) -> f64 {
    let mut acc = 0.0;
    for i in 0..8 {
        let row: f64 = (0..8).map(|j| k[i][j] * u[j]).sum();
        acc += u[i] * row;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form matrix from the 88-line reference code, transcribed
    /// independently of the quadrature above.
    fn reference_ke(nu: f64) -> ElementMatrix {
        let a11 = [
            [12., 3., -6., -3.],
            [3., 12., 3., 0.],
            [-6., 3., 12., -3.],
            [-3., 0., -3., 12.],
        ];
        let a12 = [
            [-6., -3., 0., 3.],
            [-3., -6., -3., -6.],
            [0., -3., -6., 3.],
            [3., -6., 3., -6.],
        ];
        let b11 = [
            [-4., 3., -2., 9.],
            [3., -4., -9., 4.],
            [-2., -9., -4., -3.],
            [9., 4., -3., -4.],
        ];
        let b12 = [
            [2., -3., 4., -9.],
            [-3., 2., 9., -2.],
            [4., 9., 2., 3.],
            [-9., -2., 3., 2.],
        ];
        let mut ke = [[0.0; 8]; 8];
        for i in 0..4 {
            for j in 0..4 {
                let s = 1.0 / (1.0 - nu * nu) / 24.0;
                ke[i][j] = s * (a11[i][j] + nu * b11[i][j]);
                ke[i][j + 4] = s * (a12[i][j] + nu * b12[i][j]);
                ke[i + 4][j] = s * (a12[j][i] + nu * b12[j][i]);
                ke[i + 4][j + 4] = s * (a11[i][j] + nu * b11[i][j]);
            }
        }
        ke
    }

    #[test]
    fn matches_reference_closed_form() {
        for nu in [0.3, 0.1, 0.45] {
            let ke = element_stiffness(nu).unwrap();
            let r = reference_ke(nu);
            for i in 0..8 {
                for j in 0..8 {
                    assert!((ke[i][j] - r[i][j]).abs() < 1e-12, "nu={nu} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn symmetric_with_three_rigid_modes() {
        let ke = element_stiffness(0.3).unwrap();
        let m = nalgebra::SMatrix::<f64, 8, 8>::from_fn(|i, j| ke[i][j]);
        assert_eq!((m - m.transpose()).abs().max(), 0.0);
        let eig = m.symmetric_eigen().eigenvalues;
        let zeros = eig.iter().filter(|v| v.abs() < 1e-10).count();
        assert_eq!(zeros, 3);
        assert!(eig.iter().all(|&v| v > -1e-10));
    }

    #[test]
    fn rejects_bad_poisson() {
        assert!(element_stiffness(0.5).is_err());
        assert!(element_stiffness(0.0).is_err());
        assert!(element_stiffness(-0.1).is_err());
    }
}
