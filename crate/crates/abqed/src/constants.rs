//! Physical constants in SI or reduced units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permittivity, F/m (2019 SI).
pub const EPSILON0_SI: f64 = 8.854_187_812_8e-12;
/// Speed of light, m/s (exact).
pub const C_SI: f64 = 299_792_458.0;
/// Reduced Planck constant, J s (exact).
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// Electron charge, C.
pub const ELECTRON_CHARGE: f64 = -1.602_176_634e-19;
/// Electron mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;

/// Unit system selector for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    #[default]
    Si,
    /// epsilon0 = c = hbar = 1 (hence mu0 = 1). Convenient for tests.
    Reduced,
}

/// The constants every field evaluation threads through.
///
/// `mu0` is always derived as 1/(epsilon0 c^2) so the c^2 mu0 epsilon0 = 1
/// identity holds to rounding for any configured values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub epsilon0: f64,
    pub mu0: f64,
    pub c: f64,
    pub hbar: f64,
}

impl PhysicalConstants {
    pub fn si() -> Self {
        Self::from_parts(EPSILON0_SI, C_SI, HBAR_SI)
    }

    pub fn reduced() -> Self {
        Self::from_parts(1.0, 1.0, 1.0)
    }

    pub fn for_units(units: UnitSystem) -> Self {
        match units {
            UnitSystem::Si => Self::si(),
            UnitSystem::Reduced => Self::reduced(),
        }
    }

    /// Build from (epsilon0, c, hbar), deriving mu0.
    pub fn from_parts(epsilon0: f64, c: f64, hbar: f64) -> Self {
        Self {
            epsilon0,
            mu0: 1.0 / (epsilon0 * c * c),
            c,
            hbar,
        }
    }

    /// The default particle for the unit system: an electron in SI,
    /// q = m = 1 in reduced units.
    pub fn default_particle(units: UnitSystem) -> (f64, f64) {
        match units {
            UnitSystem::Si => (ELECTRON_CHARGE, ELECTRON_MASS),
            UnitSystem::Reduced => (1.0, 1.0),
        }
    }

    /// Check c^2 mu0 epsilon0 = 1 to 1e-12 relative.
    pub fn validate(&self) -> Result<()> {
        let product = self.c * self.c * self.mu0 * self.epsilon0;
        if (product - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "constants violate c^2 mu0 eps0 = 1: got {product:.15}"
            )));
        }
        if self.epsilon0 <= 0.0 || self.c <= 0.0 || self.hbar <= 0.0 {
            return Err(Error::InvalidInput(
                "constants must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::si()
    }
}
