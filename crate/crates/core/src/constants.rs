//! Physical constants and the model's fundamental scales.
//!
//! The model is parameterized by a single fundamental scale, the discrete
//! time unit `t_P` (taken to be the Planck time), together with `ħ`. Its
//! conjugate energy scale is `E_P = h / t_P` with `h = 2πħ`. Everything the
//! dynamics needs follows from these two numbers; the wider constant set in
//! [`PhysicalConstants`] only enters the scenario evaluator.

use crate::error::{Error, Result};

/// Planck time in seconds (CODATA 2018).
pub const PLANCK_TIME_S: f64 = 5.391_247e-44;

/// Reduced Planck constant in eV·s (CODATA 2018, exact).
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;

/// Speed of light in m/s (exact).
pub const SPEED_OF_LIGHT_M_S: f64 = 2.997_924_58e8;

/// Boltzmann constant in eV/K (exact).
pub const BOLTZMANN_EV_K: f64 = 8.617_333_262e-5;

/// Electron rest energy m_e·c² in eV.
pub const ELECTRON_MASS_EV: f64 = 0.510_998_95e6;

/// One electron-volt in joules (exact).
pub const EV_IN_JOULES: f64 = 1.602_176_634e-19;

/// Reduced Planck constant in J·s.
pub const HBAR_J_S: f64 = 1.054_571_817e-34;

/// Default horizon radius of the finite universe, meters.
pub const HORIZON_RADIUS_M: f64 = 1e25;

/// Standard temperature for thermal estimates, kelvin.
pub const STANDARD_TEMPERATURE_K: f64 = 300.0;

/// The two fundamental scales of the collapse dynamics.
///
/// `planck_energy_ev` is always derived as `h / t_P` so the defining
/// relation holds exactly as constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseConstants {
    planck_time_s: f64,
    hbar_ev_s: f64,
    planck_energy_ev: f64,
}

impl CollapseConstants {
    /// Build from an instant duration and ħ; `E_P = 2πħ / t_P` is derived.
    pub fn new(planck_time_s: f64, hbar_ev_s: f64) -> Result<Self> {
        if !(planck_time_s.is_finite() && planck_time_s > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "planck_time_s must be positive and finite, got {planck_time_s}"
            )));
        }
        if !(hbar_ev_s.is_finite() && hbar_ev_s > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "hbar_ev_s must be positive and finite, got {hbar_ev_s}"
            )));
        }
        let planck_energy_ev = std::f64::consts::TAU * hbar_ev_s / planck_time_s;
        Ok(Self {
            planck_time_s,
            hbar_ev_s,
            planck_energy_ev,
        })
    }

    /// The physical values: Planck time and CODATA ħ.
    pub fn physical() -> Self {
        Self::new(PLANCK_TIME_S, HBAR_EV_S).expect("physical constants are valid")
    }

    pub fn planck_time_s(&self) -> f64 {
        self.planck_time_s
    }

    pub fn hbar_ev_s(&self) -> f64 {
        self.hbar_ev_s
    }

    /// Planck energy `E_P = h / t_P` in eV.
    pub fn planck_energy_ev(&self) -> f64 {
        self.planck_energy_ev
    }

    /// Planck constant `h = 2πħ` in eV·s.
    pub fn planck_constant_ev_s(&self) -> f64 {
        std::f64::consts::TAU * self.hbar_ev_s
    }
}

impl Default for CollapseConstants {
    fn default() -> Self {
        Self::physical()
    }
}

/// Constant set for the physical-scenario evaluator.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalConstants {
    pub collapse: CollapseConstants,
    pub speed_of_light_m_s: f64,
    pub boltzmann_ev_k: f64,
    pub electron_mass_ev: f64,
    pub horizon_radius_m: f64,
    pub temperature_k: f64,
}

impl PhysicalConstants {
    pub fn physical() -> Self {
        Self {
            collapse: CollapseConstants::physical(),
            speed_of_light_m_s: SPEED_OF_LIGHT_M_S,
            boltzmann_ev_k: BOLTZMANN_EV_K,
            electron_mass_ev: ELECTRON_MASS_EV,
            horizon_radius_m: HORIZON_RADIUS_M,
            temperature_k: STANDARD_TEMPERATURE_K,
        }
    }

    /// All entries must be positive and finite.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("speed_of_light_m_s", self.speed_of_light_m_s),
            ("boltzmann_ev_k", self.boltzmann_ev_k),
            ("electron_mass_ev", self.electron_mass_ev),
            ("horizon_radius_m", self.horizon_radius_m),
            ("temperature_k", self.temperature_k),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// ħ in J·s, derived from the eV value.
    pub fn hbar_j_s(&self) -> f64 {
        self.collapse.hbar_ev_s() * EV_IN_JOULES
    }

    /// hc in eV·m.
    pub fn hc_ev_m(&self) -> f64 {
        self.collapse.planck_constant_ev_s() * self.speed_of_light_m_s
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::physical()
    }
}
