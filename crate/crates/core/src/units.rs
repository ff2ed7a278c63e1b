//! Unit systems.
//!
//! Kernel and simulation work runs in natural units, where the cutoff (or
//! the oscillator frequency) sets the time unit and η is dimensionless. The
//! audit works in CGS. [`NaturalScale`] converts between the two with time
//! unit `1/Ω`, mass unit `m_B` and action unit `ħ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in erg·s (CODATA 2018, exact in SI).
pub const HBAR_CGS: f64 = 1.054571817e-27;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitMode {
    #[default]
    Natural,
    Cgs,
}

impl std::str::FromStr for UnitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "natural" => Ok(UnitMode::Natural),
            "cgs" => Ok(UnitMode::Cgs),
            other => Err(Error::domain(format!("unknown unit mode '{other}'"))),
        }
    }
}

impl UnitMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            UnitMode::Natural => "natural",
            UnitMode::Cgs => "cgs",
        }
    }
}

/// CGS values of the natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaturalScale {
    /// Seconds per natural time unit.
    pub time: f64,
    /// Grams per natural mass unit.
    pub mass: f64,
    /// erg·s per natural action unit.
    pub action: f64,
}

impl NaturalScale {
    /// Time unit `1/Ω`, mass unit `m_B`, action unit `ħ`.
    pub fn from_cutoff(omega_cut: f64, mass_b: f64, hbar: f64) -> Result<Self> {
        for (name, v) in [("omega_cut", omega_cut), ("mass_b", mass_b), ("hbar", hbar)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(NaturalScale {
            time: 1.0 / omega_cut,
            mass: mass_b,
            action: hbar,
        })
    }

    /// Centimetres per natural length unit, `sqrt(action · time / mass)`.
    pub fn length(&self) -> f64 {
        (self.action * self.time / self.mass).sqrt()
    }

    pub fn rate_to_natural(&self, rate: f64) -> f64 {
        rate * self.time
    }

    pub fn rate_from_natural(&self, rate: f64) -> f64 {
        rate / self.time
    }

    pub fn mass_to_natural(&self, mass: f64) -> f64 {
        mass / self.mass
    }

    /// CGS value of one natural unit of measurement strength (length⁻² time⁻¹).
    pub fn strength_unit(&self) -> f64 {
        1.0 / (self.length().powi(2) * self.time)
    }

    pub fn strength_to_natural(&self, k: f64) -> f64 {
        k / self.strength_unit()
    }

    pub fn strength_from_natural(&self, k: f64) -> f64 {
        k * self.strength_unit()
    }
}
