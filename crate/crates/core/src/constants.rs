//! Physical constants (CODATA 2018) and rubidium-85 D1 defaults.

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Natural linewidth of the Rb D1 excited state, gamma / 2pi [Hz].
pub const RB_D1_LINEWIDTH_HZ: f64 = 6.0e6;
/// 85Rb ground-state hyperfine splitting / 2pi [Hz].
pub const RB85_HF_SPLITTING_HZ: f64 = 3.035_732_439e9;
pub const RB85_MASS: f64 = 84.911_789_738 * ATOMIC_MASS_UNIT;
pub const RB_D1_WAVELENGTH: f64 = 795.0e-9;
/// Mean D1 electric dipole matrix element [C m].
pub const RB_D1_DIPOLE: f64 = 1.47e-29;
