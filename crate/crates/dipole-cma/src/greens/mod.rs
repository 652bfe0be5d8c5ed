//! Scalar Green's functions of the Z-directed current element: free space,
//! PEC half-space, and the lossy dielectric half-space approximated by a
//! finite set of complex images. Also hosts the spectral TM reflection
//! coefficient the image fit targets and a numerical Sommerfeld integral
//! that serves as the independent reference for the fit.
//!
//! Conventions: e^{+jωt} time dependence, kernels e^{-jk0 d}/(4π d); all
//! branch choices keep waves decaying (Re(d) >= 0, Im(k_z1) <= 0).

mod images;
mod sommerfeld;

pub use images::{
    fit_complex_images, prony_exponential_fit, ComplexImageSet, ExponentialTerm, ImageSetJson,
    DEFAULT_IMAGE_COUNT, DEFAULT_PATH_SAMPLES, DEFAULT_PATH_T0,
};
pub use sommerfeld::sommerfeld_reflected;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lossy dielectric lower half-space, described by its complex relative
/// permittivity. Passivity under the e^{+jωt} convention requires
/// Im(eps_r) <= 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub eps_re: f64,
    pub eps_im: f64,
}

impl HalfSpace {
    pub fn new(eps_r: Complex64) -> Self {
        HalfSpace {
            eps_re: eps_r.re,
            eps_im: eps_r.im,
        }
    }

    pub fn eps_r(&self) -> Complex64 {
        Complex64::new(self.eps_re, self.eps_im)
    }
}

/// Quasi-static reflection coefficient (1 - eps_r)/(1 + eps_r); -1 in the
/// PEC limit.
pub fn quasi_static_reflection(eps_r: Complex64) -> Result<Complex64> {
    let denom = Complex64::new(1.0, 0.0) + eps_r;
    if denom.norm() < 1e-300 {
        return Err(Error::PoleAtMinusOne);
    }
    Ok((Complex64::new(1.0, 0.0) - eps_r) / denom)
}

/// Distance from a source at (0, 0, zp) to an observation point offset `rho`
/// from the axis at height z.
pub fn direct_distance(rho: f64, z: f64, zp: f64) -> f64 {
    (rho * rho + (z - zp) * (z - zp)).sqrt()
}

/// Distance to the mirror source at (0, 0, -zp).
pub fn image_distance(rho: f64, z: f64, zp: f64) -> f64 {
    (rho * rho + (z + zp) * (z + zp)).sqrt()
}

/// Distance to a complex image displaced by -j·v below the mirror position.
/// The square root branch with non-negative real part keeps the kernel
/// decaying.
pub fn complex_image_distance(rho: f64, z: f64, zp: f64, v: Complex64) -> Complex64 {
    let shift = Complex64::new(z + zp, 0.0) - Complex64::i() * v;
    let d = (Complex64::new(rho * rho, 0.0) + shift * shift).sqrt();
    if d.re < 0.0 {
        -d
    } else {
        d
    }
}

/// Scalar spherical-wave kernel e^{-jk0 d}/(4π d) for a real distance.
pub fn spherical_wave(d: f64, k0: f64) -> Complex64 {
    Complex64::from_polar(1.0, -k0 * d) / (4.0 * std::f64::consts::PI * d)
}

/// Spherical-wave kernel for a complex distance.
pub fn spherical_wave_complex(d: Complex64, k0: f64) -> Complex64 {
    (-Complex64::i() * k0 * d).exp() / (4.0 * std::f64::consts::PI * d)
}

/// Free-space Green's function.
pub fn green_free_space(rho: f64, z: f64, zp: f64, k0: f64) -> Result<Complex64> {
    let d = direct_distance(rho, z, zp);
    if d == 0.0 {
        return Err(Error::SingularCoincidentPoints);
    }
    Ok(spherical_wave(d, k0))
}

/// Green's function above a PEC half-space: direct plus co-directed image
/// term (vertical currents image with +1).
pub fn green_pec_ground(rho: f64, z: f64, zp: f64, k0: f64) -> Result<Complex64> {
    let d = direct_distance(rho, z, zp);
    if d == 0.0 {
        return Err(Error::SingularCoincidentPoints);
    }
    Ok(spherical_wave(d, k0) + spherical_wave(image_distance(rho, z, zp), k0))
}

/// Green's function above the lossy half-space: direct term, quasi-dynamic
/// image weighted by -K_eps, and the fitted complex images.
pub fn green_lossy_ground(
    rho: f64,
    z: f64,
    zp: f64,
    k0: f64,
    images: &ComplexImageSet,
) -> Result<Complex64> {
    let d = direct_distance(rho, z, zp);
    if d == 0.0 {
        return Err(Error::SingularCoincidentPoints);
    }
    Ok(spherical_wave(d, k0) + green_lossy_reflected(rho, z, zp, k0, images))
}

/// Ground-reflected part of the lossy kernel (everything but the direct term).
pub fn green_lossy_reflected(
    rho: f64,
    z: f64,
    zp: f64,
    k0: f64,
    images: &ComplexImageSet,
) -> Complex64 {
    let mut g = -images.k_eps * spherical_wave(image_distance(rho, z, zp), k0);
    for term in &images.terms {
        // real-displacement terms stay on the real image path so the PEC
        // and free-space reductions hold bit-for-bit
        if term.displacement == Complex64::ZERO {
            g += term.amplitude * spherical_wave(image_distance(rho, z, zp), k0);
        } else {
            let dcm = complex_image_distance(rho, z, zp, term.displacement);
            g += term.amplitude * spherical_wave_complex(dcm, k0);
        }
    }
    g
}

/// Spectral TM reflection coefficient of the half-space for a vertical
/// electric current, as a function of the free-space axial wavenumber k_z0:
/// Γ = (eps_r·k_z0 - k_z1)/(eps_r·k_z0 + k_z1) with
/// k_z1 = sqrt(k_z0² + (eps_r - 1)·k0²), Im(k_z1) <= 0.
pub fn tm_reflection(kz0: Complex64, eps_r: Complex64, k0: f64) -> Result<Complex64> {
    let kz1 = lower_branch_sqrt(kz0 * kz0 + (eps_r - 1.0) * k0 * k0)?;
    Ok((eps_r * kz0 - kz1) / (eps_r * kz0 + kz1))
}

/// Square root with Im <= 0, the decaying-wave branch for transmitted fields.
fn lower_branch_sqrt(val: Complex64) -> Result<Complex64> {
    let mut r = val.sqrt();
    if r.im > 0.0 {
        r = -r;
    }
    if r.im > 0.0 {
        return Err(Error::BranchViolation(r.im));
    }
    Ok(r)
}
