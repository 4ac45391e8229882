//! Conversions between laboratory (SI) values and the internal natural
//! units with `ħ = 1`.
//!
//! Picking a reference mass `M` (kg) and length `L` (m) fixes the whole
//! system: time `t₀ = M L²/ħ`, frequency `1/t₀`, momentum `ħ/L`, energy
//! `ħ²/(M L²)`. Configs are written in natural units; these helpers sit at
//! that boundary for preparing configs from laboratory numbers and reading
//! results back.

/// Reduced Planck constant in SI units (J·s).
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// A choice of reference mass and length defining the natural-unit system.
#[derive(Clone, Copy, Debug)]
pub struct NaturalUnits {
    pub mass_kg: f64,
    pub length_m: f64,
}

impl NaturalUnits {
    pub fn new(mass_kg: f64, length_m: f64) -> Self {
        assert!(mass_kg > 0.0 && length_m > 0.0);
        Self { mass_kg, length_m }
    }

    /// One internal time unit in seconds: `t₀ = M L²/ħ`.
    pub fn time_s(&self) -> f64 {
        self.mass_kg * self.length_m * self.length_m / HBAR_SI
    }

    /// One internal momentum unit in kg·m/s: `ħ/L`.
    pub fn momentum_si(&self) -> f64 {
        HBAR_SI / self.length_m
    }

    /// One internal energy unit in joules: `ħ²/(M L²)`.
    pub fn energy_j(&self) -> f64 {
        HBAR_SI * HBAR_SI / (self.mass_kg * self.length_m * self.length_m)
    }

    pub fn length_to_internal(&self, meters: f64) -> f64 {
        meters / self.length_m
    }

    pub fn mass_to_internal(&self, kg: f64) -> f64 {
        kg / self.mass_kg
    }

    /// Angular frequency rad/s → internal.
    pub fn frequency_to_internal(&self, rad_per_s: f64) -> f64 {
        rad_per_s * self.time_s()
    }

    pub fn time_to_internal(&self, seconds: f64) -> f64 {
        seconds / self.time_s()
    }

    pub fn momentum_to_internal(&self, si: f64) -> f64 {
        si / self.momentum_si()
    }

    pub fn frequency_from_internal(&self, internal: f64) -> f64 {
        internal / self.time_s()
    }

    pub fn time_from_internal(&self, internal: f64) -> f64 {
        internal * self.time_s()
    }
}
