//! SIMP minimum-compliance optimization: adjoint sensitivities, cone
//! filtering and optimality-criteria updates under a volume constraint.

mod filter;

use serde::{Deserialize, Serialize};

pub use filter::{SensitivityFilter, FILTER_DENSITY_FLOOR};

use crate::error::{Error, Result};
use crate::fea::{
    element_displacements, element_stiffness, quadratic_form, solve_system, DensityField,
    GridDomain, LoadCase, MaterialModel, SolutionFields,
};

const BRACKET_STEPS: usize = 200;
const BRACKET_FACTOR: f64 = 16.0;
/// Bisection steps allowed once the multiplier is bracketed.
pub const OC_MAX_BISECTIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimpConfig {
    pub volfrac: f64,
    pub rmin: f64,
    pub penal: f64,
    pub move_limit: f64,
    pub change_tol: f64,
    pub max_iters: usize,
    /// Relative tolerance on the volume reached by the multiplier search.
    pub oc_tol: f64,
}

impl Default for SimpConfig {
    fn default() -> Self {
        Self {
            volfrac: 0.5,
            rmin: 1.5,
            penal: 3.0,
            move_limit: 0.2,
            change_tol: 0.01,
            max_iters: 200,
            oc_tol: 1e-4,
        }
    }
}

impl SimpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.volfrac > 0.0 && self.volfrac < 1.0) {
            return Err(Error::param(format!(
                "volfrac {} outside (0, 1)",
                self.volfrac
            )));
        }
        if !(self.rmin > 0.0) || !self.rmin.is_finite() {
            return Err(Error::param(format!("rmin {} must be positive", self.rmin)));
        }
        if !(self.move_limit > 0.0 && self.move_limit <= 1.0) {
            return Err(Error::param(format!(
                "move_limit {} outside (0, 1]",
                self.move_limit
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be at least 1"));
        }
        if !(self.penal >= 1.0) {
            return Err(Error::param(format!("penalty {} below 1", self.penal)));
        }
        if !(self.change_tol > 0.0) || !(self.oc_tol > 0.0) {
            return Err(Error::param("change_tol and oc_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub density: DensityField,
    /// Compliance of the design analysed at each iteration.
    pub compliance_history: Vec<f64>,
    /// Mean density after each update.
    pub volume_history: Vec<f64>,
    /// Max absolute density change of each update.
    pub change_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl OptimizationResult {
    pub fn final_compliance(&self) -> f64 {
        self.compliance_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// `dc/drho_e = -p rho_e^(p-1) (E0 - Emin) u_e^T k0 u_e`, row-major.
pub fn sensitivity_analysis(
    grid: &GridDomain,
    rho: &DensityField,
    mat: &MaterialModel,
    solution: &SolutionFields,
) -> Result<Vec<f64>> {
    rho.check_grid(grid)?;
    let ke = element_stiffness(mat.nu)?;
    let mut dc = vec![0.0; grid.element_count()];
    for col in 0..grid.nelx() {
        for row in 0..grid.nely() {
            let fi = grid.field_index(col, row);
            let ue = element_displacements(grid, &solution.displacements, col, row);
            dc[fi] = -mat.modulus_derivative(rho.values()[fi]) * quadratic_form(&ke, &ue);
        }
    }
    Ok(dc)
}

/// One-shot sensitivity filtering; [`run_simp`] reuses a precomputed
/// [`SensitivityFilter`] instead.
pub fn filter_sensitivities(
    grid: &GridDomain,
    rho: &DensityField,
    dc: &[f64],
    rmin: f64,
) -> Result<Vec<f64>> {
    rho.check_grid(grid)?;
    if !(rmin > 0.0) {
        return Err(Error::param(format!("rmin {rmin} must be positive")));
    }
    if dc.len() != grid.element_count() {
        return Err(Error::Shape {
            expected: grid.element_count().to_string(),
            actual: dc.len().to_string(),
        });
    }
    Ok(SensitivityFilter::new(grid, rmin).apply(rho.values(), dc))
}

/// Optimality-criteria update
/// `rho_new = clamp(rho sqrt(-dc / lambda), [rho - m, rho + m] ∩ [0, 1])`,
/// with the multiplier found by bisection (in log space) so the mean density
/// hits `volfrac` to `oc_tol` relative.
///
/// Sensitivities are normalized by their largest magnitude first; the update
/// is unchanged mathematically and is exactly invariant to load scaling.
pub fn oc_update(rho: &DensityField, dc: &[f64], config: &SimpConfig) -> Result<DensityField> {
    if dc.len() != rho.len() {
        return Err(Error::Shape {
            expected: rho.len().to_string(),
            actual: dc.len().to_string(),
        });
    }
    if let Some(i) = dc.iter().position(|&v| !(v <= 0.0)) {
        return Err(Error::param(format!(
            "sensitivity at element {i} is {} (must be finite and <= 0)",
            dc[i]
        )));
    }
    let scale = dc.iter().fold(0.0f64, |m, &v| m.max(-v));
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Numeric(
            "all sensitivities vanish; nothing drives the update".into(),
        ));
    }
    let x = rho.values();
    let m = config.move_limit;
    let g: Vec<f64> = dc.iter().map(|&v| -v / scale).collect();
    let lower: Vec<f64> = x.iter().map(|&r| (r - m).max(0.0)).collect();
    let upper: Vec<f64> = x.iter().map(|&r| (r + m).min(1.0)).collect();
    let update = |lambda: f64| -> Vec<f64> {
        (0..x.len())
            .map(|e| (x[e] * (g[e] / lambda).sqrt()).clamp(lower[e], upper[e]))
            .collect()
    };
    let n = x.len() as f64;
    let target = config.volfrac * n;
    let excess = |lambda: f64| update(lambda).iter().sum::<f64>() - target;

    // Volume decreases with lambda: find lo with excess >= 0, hi with excess <= 0.
    let (mut lo, mut hi) = (1.0, 1.0);
    let mut steps = 0;
    while excess(lo) < 0.0 {
        lo /= BRACKET_FACTOR;
        steps += 1;
        if steps > BRACKET_STEPS || lo == 0.0 {
            return Err(Error::Numeric(format!(
                "cannot reach volume fraction {}: move limits cap the volume below target",
                config.volfrac
            )));
        }
    }
    while excess(hi) > 0.0 {
        hi *= BRACKET_FACTOR;
        steps += 1;
        if steps > BRACKET_STEPS || !hi.is_finite() {
            return Err(Error::Numeric(format!(
                "cannot reach volume fraction {}: move limits keep the volume above target",
                config.volfrac
            )));
        }
    }

    let tol = config.oc_tol * target;
    for _ in 0..OC_MAX_BISECTIONS {
        let mid = (lo * hi).sqrt();
        let next = update(mid);
        let ex = next.iter().sum::<f64>() - target;
        if ex.abs() <= tol {
            return DensityField::new(rho.nelx(), rho.nely(), next);
        }
        if ex > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numeric(format!(
        "multiplier bisection did not reach the volume tolerance after {OC_MAX_BISECTIONS} steps"
    )))
}

/// Runs the SIMP loop from a uniform `volfrac` start until the largest
/// density change drops below `change_tol` or `max_iters` is hit.
///
/// The penalty in `config` overrides `mat.penal`.
pub fn run_simp(
    grid: &GridDomain,
    mat: &MaterialModel,
    lc: &LoadCase,
    config: &SimpConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    let mat = MaterialModel {
        penal: config.penal,
        ..*mat
    };
    mat.validate()?;
    lc.validate(grid)?;
    let filter = SensitivityFilter::new(grid, config.rmin);
    let mut rho = DensityField::uniform(grid, config.volfrac)?;
    let mut compliance_history = Vec::new();
    let mut volume_history = Vec::new();
    let mut change_history = Vec::new();
    let mut converged = false;

    for _ in 0..config.max_iters {
        let solution = solve_system(grid, &rho, &mat, lc)?;
        compliance_history.push(solution.total_compliance);
        let dc = sensitivity_analysis(grid, &rho, &mat, &solution)?;
        let dc = filter.apply(rho.values(), &dc);
        let next = oc_update(&rho, &dc, config)?;
        let change = rho
            .values()
            .iter()
            .zip(next.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        rho = next;
        volume_history.push(rho.mean());
        change_history.push(change);
        if change < config.change_tol {
            converged = true;
            break;
        }
    }

    Ok(OptimizationResult {
        density: rho,
        iterations: compliance_history.len(),
        compliance_history,
        volume_history,
        change_history,
        converged,
    })
}
