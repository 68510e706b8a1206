use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular grid of unit-square bilinear elements.
///
/// Numbering follows the classic 88-line convention. Nodes and elements are
/// numbered column-major with row 0 at the top of the domain:
///
/// * node `(col, row)` has index `col * (nely + 1) + row`, `col in 0..=nelx`,
///   `row in 0..=nely`;
/// * element `(col, row)` has index `col * nely + row`;
/// * node `n` owns DOFs `2n` (x) and `2n + 1` (y).
///
/// Physical coordinates have `x` pointing right and `y` pointing up, so node
/// `(col, row)` sits at `(col, nely - row)`. Per-element fields exposed to
/// callers ([`crate::fea::DensityField`] and friends) are stored row-major
/// instead, `row * nelx + col`, matching the tensor file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridDomain {
    nelx: usize,
    nely: usize,
}

impl GridDomain {
    pub fn new(nelx: usize, nely: usize) -> Result<Self> {
        if nelx == 0 || nely == 0 {
            return Err(Error::param(format!(
                "grid needs at least one element per axis, got {nelx}x{nely}"
            )));
        }
        Ok(Self { nelx, nely })
    }

    pub fn nelx(&self) -> usize {
        self.nelx
    }

    pub fn nely(&self) -> usize {
        self.nely
    }

    pub fn element_count(&self) -> usize {
        self.nelx * self.nely
    }

    pub fn node_count(&self) -> usize {
        (self.nelx + 1) * (self.nely + 1)
    }

    pub fn dof_count(&self) -> usize {
        2 * self.node_count()
    }

    pub fn node_index(&self, col: usize, row: usize) -> usize {
        debug_assert!(col <= self.nelx && row <= self.nely);
        col * (self.nely + 1) + row
    }

    /// Inverse of [`Self::node_index`]: `(col, row)`.
    pub fn node_position(&self, node: usize) -> (usize, usize) {
        (node / (self.nely + 1), node % (self.nely + 1))
    }

    /// Physical coordinates of a node (x right, y up).
    pub fn node_coords(&self, node: usize) -> (f64, f64) {
        let (col, row) = self.node_position(node);
        (col as f64, (self.nely - row) as f64)
    }

    /// Row-major index used by per-element fields.
    pub fn field_index(&self, col: usize, row: usize) -> usize {
        row * self.nelx + col
    }

    /// The eight DOFs of element `(col, row)`, counter-clockwise from the
    /// lower-left node: lower-left, lower-right, upper-right, upper-left.
    pub fn element_dofs(&self, col: usize, row: usize) -> [usize; 8] {
        let upper_left = self.node_index(col, row);
        let upper_right = self.node_index(col + 1, row);
        let lower_left = upper_left + 1;
        let lower_right = upper_right + 1;
        [
            2 * lower_left,
            2 * lower_left + 1,
            2 * lower_right,
            2 * lower_right + 1,
            2 * upper_right,
            2 * upper_right + 1,
            2 * upper_left,
            2 * upper_left + 1,
        ]
    }

    /// Elements sharing node `node`, as `(col, row)` pairs (1, 2 or 4 of them).
    pub fn elements_around_node(&self, node: usize) -> Vec<(usize, usize)> {
        let (ncol, nrow) = self.node_position(node);
        let mut out = Vec::with_capacity(4);
        for col in [ncol.wrapping_sub(1), ncol] {
            for row in [nrow.wrapping_sub(1), nrow] {
                if col < self.nelx && row < self.nely {
                    out.push((col, row));
                }
            }
        }
        out
    }
}
