//! Physical constants (CODATA 2018). Fixed, not configurable.

/// Reduced Planck constant, J·s.
pub const REDUCED_PLANCK: f64 = 1.054_571_817e-34;

/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// 2π, for converting plain Hz to angular frequency.
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
