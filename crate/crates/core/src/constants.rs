//! Physical constants and unit conventions.
//!
//! Every length is in nm, every energy in eV and every time in fs. The
//! constants are carried as a value and injected wherever they are needed,
//! so a test can run with `hbar = 1` without touching global state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in eV·fs.
pub const HBAR_EV_FS: f64 = 0.6582119569;

/// e²/(4πε₀) in eV·nm.
pub const COULOMB_KE2_EV_NM: f64 = 1.4399645;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConstants {
    /// eV·fs
    pub hbar: f64,
    /// eV·nm
    pub coulomb_ke2: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        default_constants()
    }
}

pub fn default_constants() -> PhysicalConstants {
    PhysicalConstants {
        hbar: HBAR_EV_FS,
        coulomb_ke2: COULOMB_KE2_EV_NM,
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, coulomb_ke2: f64) -> Result<Self> {
        let c = PhysicalConstants { hbar, coulomb_ke2 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::config("constants.hbar", "must be finite and > 0"));
        }
        if !(self.coulomb_ke2.is_finite() && self.coulomb_ke2 > 0.0) {
            return Err(Error::config(
                "constants.coulomb_ke2",
                "must be finite and > 0",
            ));
        }
        Ok(())
    }

    /// The prefactor e²/(16πε₀) of the DQD pair energy.
    pub fn pair_prefactor(&self) -> f64 {
        self.coulomb_ke2 / 4.0
    }
}
