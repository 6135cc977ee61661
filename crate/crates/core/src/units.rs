//! Unit conversions and physical constants.
//!
//! Everything inside the crate is angular frequency (rad/s) and SI time (s).
//! Linear-frequency values only appear at the parameter-file and CSV
//! boundaries, always with an explicit unit suffix.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Bohr magneton, J/T.
pub const MU_B: f64 = 9.274_010_078_3e-24;

pub const NS: f64 = 1e-9;
pub const US: f64 = 1e-6;

#[inline]
pub fn ghz(f: f64) -> f64 {
    TWO_PI * f * 1e9
}

#[inline]
pub fn mhz(f: f64) -> f64 {
    TWO_PI * f * 1e6
}

#[inline]
pub fn khz(f: f64) -> f64 {
    TWO_PI * f * 1e3
}

#[inline]
pub fn to_ghz(w: f64) -> f64 {
    w / TWO_PI / 1e9
}

#[inline]
pub fn to_mhz(w: f64) -> f64 {
    w / TWO_PI / 1e6
}

#[inline]
pub fn to_khz(w: f64) -> f64 {
    w / TWO_PI / 1e3
}
