//! Free-space electromagnetic constants (SI units).

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;

/// Permeability of free space (H/m).
pub const MU0: f64 = 1.256_637_061_435_917_3e-6; // 4π·1e-7

/// Permittivity of free space (F/m).
pub const EPS0: f64 = 8.854_187_817_620_39e-12; // 1/(MU0·C0²)

/// Intrinsic impedance of free space (ohms).
pub const ETA0: f64 = 376.730_313_461_77;

/// Free-space wavelength at frequency `f` (Hz).
pub fn wavelength(f: f64) -> f64 {
    C0 / f
}

/// Free-space wavenumber 2π/λ at frequency `f` (Hz).
pub fn wavenumber(f: f64) -> f64 {
    2.0 * std::f64::consts::PI * f / C0
}
