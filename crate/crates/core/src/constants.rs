//! Physical constants and the internal unit system.
//!
//! Everything in this crate works in femtoseconds, micrometers, and
//! electron-volts; angular frequencies are rad/fs. In these units the
//! quantities of interest (Bloch periods in fs, interaction lengths in μm,
//! hopping rates in fs⁻¹) are all of order unity. Electric fields are V/μm,
//! so with the elementary charge equal to one eV/V the product e·E is an
//! energy gradient in eV/μm. Mass carries eV·fs²/μm².
//!
//! Values are CODATA 2018, truncated to 12 significant digits.

/// Speed of light, μm/fs (exact).
pub const LIGHT_SPEED: f64 = 0.299792458;

/// Reduced Planck constant, eV·fs.
pub const HBAR: f64 = 0.658211956951;

/// Electron rest energy m·c², eV.
pub const ELECTRON_REST_ENERGY: f64 = 510998.950000;

/// Electron mass, eV·fs²/μm² (rest energy divided by c²).
pub const ELECTRON_MASS: f64 = ELECTRON_REST_ENERGY / (LIGHT_SPEED * LIGHT_SPEED);

/// Elementary charge in eV/V. One by construction of the unit system.
pub const ELEMENTARY_CHARGE: f64 = 1.0;

/// The full constant set used by a simulation.
///
/// Exactly one instance (normally [`PhysicalConstants::default`]) feeds an
/// entire run; all derived quantities are recomputed from it so that unit
/// audits have a single source of truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Electron mass, eV·fs²/μm².
    pub electron_mass: f64,
    /// Elementary charge, eV/V.
    pub elementary_charge: f64,
    /// Speed of light, μm/fs.
    pub light_speed: f64,
    /// Reduced Planck constant, eV·fs.
    pub hbar: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            electron_mass: ELECTRON_MASS,
            elementary_charge: ELEMENTARY_CHARGE,
            light_speed: LIGHT_SPEED,
            hbar: HBAR,
        }
    }
}

impl PhysicalConstants {
    /// Electron rest energy m·c² in eV.
    pub fn rest_energy(&self) -> f64 {
        self.electron_mass * self.light_speed * self.light_speed
    }
}
