//! Physical constants in SI units.

use std::f64::consts::PI;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const AMU: f64 = 1.660_539_066_60e-27;

/// Zeeman shift of the D3/2 m=±1 sublevels relative to the bare transition, per gauss.
pub const D_ZEEMAN_HZ_PER_GAUSS: f64 = 1.4e6;

pub fn hz_to_rad(f: f64) -> f64 {
    2.0 * PI * f
}

pub fn rad_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}
