//! Persistence diagrams of density fields under the superlevel (material
//! first) cubical filtration, Betti profiles and the bottleneck distance.

mod bottleneck;
mod cubical;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bottleneck::{bottleneck_distance, bottleneck_with_penalty, DEFAULT_ESSENTIAL_PENALTY};

use crate::error::{Error, Result};
use crate::fea::DensityField;

/// A `(birth, death)` pair of superlevel thresholds, `birth >= death`.
/// Essential classes never die; their death is stored as `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub birth: f64,
    pub death: f64,
    pub essential: bool,
}

impl PersistencePair {
    pub fn finite(birth: f64, death: f64) -> Self {
        Self {
            birth,
            death,
            essential: false,
        }
    }

    pub fn essential(birth: f64) -> Self {
        Self {
            birth,
            death: f64::NEG_INFINITY,
            essential: true,
        }
    }

    pub fn persistence(&self) -> f64 {
        self.birth - self.death
    }

    /// Whether the class is alive in `{f >= t}`.
    pub fn alive_at(&self, t: f64) -> bool {
        self.birth >= t && t > self.death
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub dim0: Vec<PersistencePair>,
    pub dim1: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn dim(&self, k: usize) -> Result<&[PersistencePair]> {
        match k {
            0 => Ok(&self.dim0),
            1 => Ok(&self.dim1),
            _ => Err(Error::param(format!(
                "homology dimension {k} not available (only 0 and 1)"
            ))),
        }
    }

    /// `dim,birth,death,essential` rows; essential deaths print as `-inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,birth,death,essential\n");
        for (k, pairs) in [(0, &self.dim0), (1, &self.dim1)] {
            for p in pairs.iter() {
                let death = if p.essential {
                    "-inf".to_string()
                } else {
                    p.death.to_string()
                };
                let _ = writeln!(out, "{k},{},{death},{}", p.birth, p.essential);
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Betti numbers of the superlevel set `{f >= threshold}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BettiProfile {
    pub threshold: f64,
    pub b0: usize,
    pub b1: usize,
}

fn sort_pairs(pairs: &mut [PersistencePair]) {
    pairs.sort_by(|a, b| {
        b.birth
            .total_cmp(&a.birth)
            .then(b.death.total_cmp(&a.death))
    });
}

/// Persistence of an arbitrary finite field on a `nely x nelx` grid
/// (row-major). Pairs are sorted by decreasing birth, then decreasing death.
pub fn compute_diagram_raw(values: &[f64], nelx: usize, nely: usize) -> Result<PersistenceDiagram> {
    if values.is_empty() || nelx == 0 || nely == 0 {
        return Err(Error::param("cannot compute persistence of an empty field"));
    }
    if values.len() != nelx * nely {
        return Err(Error::Shape {
            expected: format!("{nely}x{nelx}"),
            actual: format!("{} values", values.len()),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::param(format!(
            "non-finite field value at element {i}"
        )));
    }
    let (mut dim0, essential) = cubical::dim0(values, nelx, nely);
    dim0.extend(essential);
    let mut dim1 = cubical::dim1(values, nelx, nely);
    sort_pairs(&mut dim0);
    sort_pairs(&mut dim1);
    Ok(PersistenceDiagram { dim0, dim1 })
}

pub fn compute_diagram(field: &DensityField) -> Result<PersistenceDiagram> {
    compute_diagram_raw(field.values(), field.nelx(), field.nely())
}

/// `b_k` = number of dimension-`k` classes with `birth >= t > death`.
pub fn betti_at_threshold(diagram: &PersistenceDiagram, t: f64) -> Result<BettiProfile> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::param(format!("threshold {t} outside [0, 1]")));
    }
    let count = |pairs: &[PersistencePair]| pairs.iter().filter(|p| p.alive_at(t)).count();
    Ok(BettiProfile {
        threshold: t,
        b0: count(&diagram.dim0),
        b1: count(&diagram.dim1),
    })
}
