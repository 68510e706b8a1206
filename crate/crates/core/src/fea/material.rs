use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isotropic plane-stress material with SIMP modulus interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel {
    pub e0: f64,
    pub emin: f64,
    pub nu: f64,
    pub penal: f64,
}

impl Default for MaterialModel {
    fn default() -> Self {
        Self {
            e0: 1.0,
            emin: 1e-9,
            nu: 0.3,
            penal: 3.0,
        }
    }
}

impl MaterialModel {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.e0, self.emin, self.nu, self.penal]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("material parameters must be finite"));
        }
        if !(self.emin > 0.0 && self.emin < self.e0) {
            return Err(Error::param(format!(
                "need 0 < emin < e0, got emin={} e0={}",
                self.emin, self.e0
            )));
        }
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return Err(Error::param(format!(
                "poisson ratio {} outside (0, 0.5)",
                self.nu
            )));
        }
        if self.penal < 1.0 {
            return Err(Error::param(format!("penalty {} below 1", self.penal)));
        }
        Ok(())
    }

    /// `E(rho) = Emin + rho^p (E0 - Emin)`.
    #[inline]
    pub fn modulus(&self, rho: f64) -> f64 {
        self.emin + rho.powf(self.penal) * (self.e0 - self.emin)
    }

    /// `dE/drho = p rho^(p-1) (E0 - Emin)`.
    #[inline]
    pub fn modulus_derivative(&self, rho: f64) -> f64 {
        self.penal * rho.powf(self.penal - 1.0) * (self.e0 - self.emin)
    }
}
