use crate::fea::GridDomain;

/// Density floor in the filter denominator.
pub const FILTER_DENSITY_FLOOR: f64 = 1e-3;

/// Cone-weighted sensitivity filter with precomputed neighbourhoods.
///
/// Weights are `max(0, rmin - dist)` between element centres, normalized per
/// element so they sum to one. Everything is indexed row-major.
#[derive(Debug, Clone)]
pub struct SensitivityFilter {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

impl SensitivityFilter {
    pub fn new(grid: &GridDomain, rmin: f64) -> Self {
        let (nelx, nely) = (grid.nelx(), grid.nely());
        let reach = (rmin.ceil() as isize - 1).max(0);
        let mut offsets = Vec::with_capacity(grid.element_count() + 1);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for row in 0..nely as isize {
            for col in 0..nelx as isize {
                let start = neighbors.len();
                let mut total = 0.0;
                for r in (row - reach).max(0)..=(row + reach).min(nely as isize - 1) {
                    for c in (col - reach).max(0)..=(col + reach).min(nelx as isize - 1) {
                        let dist = (((r - row).pow(2) + (c - col).pow(2)) as f64).sqrt();
                        let w = rmin - dist;
                        if w > 0.0 {
                            neighbors.push(grid.field_index(c as usize, r as usize));
                            weights.push(w);
                            total += w;
                        }
                    }
                }
                for w in &mut weights[start..] {
                    *w /= total;
                }
                offsets.push(neighbors.len());
            }
        }
        Self {
            offsets,
            neighbors,
            weights,
        }
    }

    /// `dc_hat_e = sum_i w_i rho_i dc_i / (max(rho_e, floor) sum_i w_i)`.
    pub fn apply(&self, rho: &[f64], dc: &[f64]) -> Vec<f64> {
        debug_assert_eq!(rho.len(), dc.len());
        (0..rho.len())
            .map(|e| {
                let denom = rho[e].max(FILTER_DENSITY_FLOOR);
                let span = self.offsets[e]..self.offsets[e + 1];
                self.neighbors[span.clone()]
                    .iter()
                    .zip(&self.weights[span])
                    .map(|(&i, &w)| dc[i] * (rho[i] / denom) * w)
                    .sum()
            })
            .collect()
    }
}
