//! Physical constants, CODATA 2018.

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054571817e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.2740100783e-24;
/// Vacuum permeability over 4 pi, T^2 m^3 / J.
pub const MU0_OVER_4PI: f64 = 1.000000000550e-7;
/// Free electron magnetogyric ratio, rad/s/T.
pub const GAMMA_ELECTRON: f64 = -1.760859630e11;
/// Proton magnetogyric ratio, rad/s/T.
pub const GAMMA_PROTON: f64 = 2.675221874e8;
/// Free electron g-factor.
pub const G_FREE_ELECTRON: f64 = 2.002319304;

/// Electron Zeeman prefactor mu_B / hbar, rad/s/T per unit g.
pub fn bohr_angular() -> f64 {
    BOHR_MAGNETON / HBAR
}

pub const ANGSTROM: f64 = 1e-10;
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
