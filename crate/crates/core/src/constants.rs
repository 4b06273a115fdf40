//! CODATA 2018 physical constants (SI).

/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Planck constant, J s (exact).
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = PLANCK_H / (2.0 * std::f64::consts::PI);
/// Vacuum permeability, T m / A.
pub const MU0: f64 = 1.256_637_062_12e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub bohr_magneton: f64,
    pub planck_h: f64,
    pub hbar: f64,
}

impl PhysicalConstants {
    pub const CODATA2018: Self = Self {
        bohr_magneton: BOHR_MAGNETON,
        planck_h: PLANCK_H,
        hbar: HBAR,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA2018
    }
}
