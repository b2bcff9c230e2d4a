//! Unit system, physical constants and the numerical tolerance policy.
//!
//! Natural units set `c = epsilon0 = hbar = k_B = 1`. SI values are CODATA 2018.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 constants (SI).
pub mod codata {
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
    pub const REDUCED_PLANCK: f64 = 1.054_571_817e-34;
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
    pub const FINE_STRUCTURE: f64 = 7.297_352_569_3e-3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnitMode {
    Si,
    #[default]
    Natural,
}

impl std::str::FromStr for UnitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "si" => Ok(UnitMode::Si),
            "natural" => Ok(UnitMode::Natural),
            other => Err(Error::Units(format!("unknown unit mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub c: f64,
    pub epsilon0: f64,
    pub hbar: f64,
    pub k_boltzmann: f64,
    pub mode: UnitMode,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::natural()
    }
}

impl UnitSystem {
    pub fn natural() -> Self {
        Self {
            c: 1.0,
            epsilon0: 1.0,
            hbar: 1.0,
            k_boltzmann: 1.0,
            mode: UnitMode::Natural,
        }
    }

    pub fn si() -> Self {
        Self {
            c: codata::SPEED_OF_LIGHT,
            epsilon0: codata::VACUUM_PERMITTIVITY,
            hbar: codata::REDUCED_PLANCK,
            k_boltzmann: codata::BOLTZMANN,
            mode: UnitMode::Si,
        }
    }

    pub fn from_mode(mode: UnitMode) -> Self {
        match mode {
            UnitMode::Si => Self::si(),
            UnitMode::Natural => Self::natural(),
        }
    }

    /// SI-mode system with overridden constants (config files may do this).
    pub fn si_with(c: f64, epsilon0: f64, hbar: f64) -> Result<Self> {
        let u = Self {
            c,
            epsilon0,
            hbar,
            ..Self::si()
        };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c", self.c),
            ("epsilon0", self.epsilon0),
            ("hbar", self.hbar),
            ("k_boltzmann", self.k_boltzmann),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Units(format!("{name} must be strictly positive, got {v}")));
            }
        }
        if self.mode == UnitMode::Natural
            && (self.c != 1.0 || self.epsilon0 != 1.0 || self.hbar != 1.0)
        {
            return Err(Error::Units("natural units require c = epsilon0 = hbar = 1".into()));
        }
        Ok(())
    }

    /// mu0 = 1 / (epsilon0 c^2).
    pub fn mu0(&self) -> f64 {
        1.0 / (self.epsilon0 * self.c * self.c)
    }

    /// Same system with hbar rescaled. Used by hbar-independence checks.
    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }
}

/// e^2 / (4 pi epsilon0 hbar c). Only meaningful with a physical charge, so SI only.
pub fn fine_structure_constant(u: &UnitSystem, e: f64) -> Result<f64> {
    if u.mode != UnitMode::Si {
        return Err(Error::Units(
            "the fine-structure constant needs a physical charge (SI mode)".into(),
        ));
    }
    Ok(e * e / (4.0 * std::f64::consts::PI * u.epsilon0 * u.hbar * u.c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative tolerance for closed-form identities.
    pub rel: f64,
    /// Absolute floor, in observable units.
    pub abs: f64,
    /// Allowed field outside the light cone, relative to the peak inside.
    pub lightcone_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            abs: 1e-14,
            lightcone_rel: 1e-3,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel > 0.0 && self.rel < 1.0) {
            return Err(Error::InvalidArgument(format!("rel must lie in (0, 1), got {}", self.rel)));
        }
        if !(self.abs > 0.0) || !(self.lightcone_rel > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be strictly positive".into()));
        }
        Ok(())
    }

    /// `|a - b| <= max(abs, rel * max(|a|, |b|))`
    pub fn close(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.abs.max(self.rel * a.abs().max(b.abs()))
    }
}
