//! Physical constants used by the delocalized-mass and cat scenarios.
//!
//! Single source of truth so every report reproduces the same arithmetic.

/// Mass of a single water molecule in kg (18 g/mol over Avogadro's number,
/// rounded the same way the headline estimates round it).
pub const WATER_MOLECULE_KG: f64 = 2.99e-26;

/// Mass of the Earth in kg.
pub const EARTH_MASS_KG: f64 = 5.972e24;

/// Avogadro's number in 1/mol (2019 SI exact value).
pub const AVOGADRO: f64 = 6.02214076e23;
