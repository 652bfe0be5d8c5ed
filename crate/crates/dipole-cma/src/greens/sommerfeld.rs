//! Numerical reference for the ground-reflected kernel: the reflected-field
//! Sommerfeld integral
//!
//!   G_refl(ρ, z+z') = (1/4π) ∫0^∞ Γ(k_z0)·e^{-j k_z0 (z+z')}·J0(k_ρ ρ)
//!                      ·(k_ρ / (j k_z0)) dk_ρ,
//!
//! evaluated by adaptive Gauss-Kronrod quadrature. The propagating range
//! [0, k0] is parametrised as k_ρ = k0·sinθ and the evanescent range
//! [k0, 20k0] as k_ρ = k0·cosh(s); both substitutions absorb the 1/k_z0
//! branch-point singularity. The remaining tail alternates between Bessel
//! zeros and is summed with iterated Aitken acceleration.
//!
//! This path is deliberately independent of the complex-image fit it
//! validates: nothing here touches Prony output.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::greens::tm_reflection;
use crate::quadrature::{adaptive_gk, bessel_j0, gk15, j0_zero};

const REL_TOL: f64 = 1e-10;
const MAX_TAIL_INTERVALS: usize = 400;

/// Reflected part of the lossy half-space kernel at offset `rho` for source
/// height `zp` and observation height `z` (both above the interface).
pub fn sommerfeld_reflected(
    rho: f64,
    z: f64,
    zp: f64,
    k0: f64,
    eps_r: Complex64,
) -> Result<Complex64> {
    let zeta = z + zp;
    assert!(zeta > 0.0, "source and observation must sit above the interface");
    let rho = rho.abs();

    // Absolute tolerance pinned to the integrand scale k0.
    let tol = REL_TOL * k0;

    // Propagating spectrum: k_ρ = k0 sinθ, k_z0 = k0 cosθ.
    let f_prop = |theta: f64| -> Complex64 {
        let (sin_t, cos_t) = theta.sin_cos();
        let kz0 = Complex64::new(k0 * cos_t, 0.0);
        let gamma = tm_reflection(kz0, eps_r, k0).expect("branch holds on the real path");
        let phase = (-Complex64::i() * kz0 * zeta).exp();
        gamma * phase * bessel_j0(k0 * rho * sin_t) * k0 * sin_t / Complex64::i()
    };
    let (prop, _) = adaptive_gk(&f_prop, 0.0, std::f64::consts::FRAC_PI_2, tol);

    // Evanescent spectrum up to 20·k0: k_ρ = k0 cosh s, k_z0 = -j k0 sinh s.
    let s_max = 20.0_f64.acosh();
    let f_evan = |s: f64| -> Complex64 {
        let (sinh_s, cosh_s) = (s.sinh(), s.cosh());
        let kz0 = Complex64::new(0.0, -k0 * sinh_s);
        let gamma = tm_reflection(kz0, eps_r, k0).expect("branch holds on the imaginary path");
        gamma * (-k0 * zeta * sinh_s).exp() * bessel_j0(k0 * rho * cosh_s) * k0 * cosh_s
    };
    let (evan, _) = adaptive_gk(&f_evan, 0.0, s_max, tol);

    let tail = spectral_tail(rho, zeta, k0, eps_r, 20.0 * k0, tol)?;

    Ok((prop + evan + tail) / (4.0 * std::f64::consts::PI))
}

/// Tail of the spectral integral beyond `start`, where k_z0 = -j·γ with
/// γ = sqrt(k_ρ² - k0²) and the integrand decays like e^{-γζ}.
fn spectral_tail(
    rho: f64,
    zeta: f64,
    k0: f64,
    eps_r: Complex64,
    start: f64,
    tol: f64,
) -> Result<Complex64> {
    let integrand = |krho: f64| -> Complex64 {
        let gamma_z = (krho * krho - k0 * k0).sqrt();
        let kz0 = Complex64::new(0.0, -gamma_z);
        let refl = tm_reflection(kz0, eps_r, k0).expect("branch holds on the tail");
        refl * (-gamma_z * zeta).exp() * bessel_j0(krho * rho) * krho / gamma_z
    };

    // A bound on the integrand magnitude past `x`, used to truncate cleanly:
    // |Γ| <= ~1, |J0| <= 1, k_ρ/γ -> 1.
    let remainder_bound = |x: f64| -> f64 {
        let g = (x * x - k0 * k0).sqrt();
        1.5 * (-g * zeta).exp() / zeta
    };
    if remainder_bound(start) < tol {
        return Ok(Complex64::ZERO);
    }

    if rho * k0 < 1e-9 {
        // On-axis: no oscillation, pure exponential decay. March in chunks.
        let step = 4.0 / zeta;
        let mut total = Complex64::ZERO;
        let mut a = start;
        for _ in 0..MAX_TAIL_INTERVALS {
            let b = a + step;
            let (v, _) = adaptive_gk(&integrand, a, b, tol / 4.0);
            total += v;
            if remainder_bound(b) < tol {
                return Ok(total);
            }
            a = b;
        }
        return Err(Error::NonConvergentTail {
            estimate_re: total.re,
            estimate_im: total.im,
            bound: remainder_bound(a),
        });
    }

    // Oscillatory tail: integrate between consecutive zeros of J0(k_ρ·ρ) and
    // accelerate the alternating partial sums.
    let mut s_index = 1usize;
    while j0_zero(s_index) / rho <= start {
        s_index += 1;
    }

    let mut partial_sums: Vec<Complex64> = Vec::new();
    let mut total = Complex64::ZERO;
    let mut a = start;
    let mut last_accel: Option<Complex64> = None;
    for _ in 0..MAX_TAIL_INTERVALS {
        let b = j0_zero(s_index) / rho;
        s_index += 1;
        let (v, _) = gk15(&integrand, a, b);
        total += v;
        partial_sums.push(total);
        a = b;

        if remainder_bound(a) < tol {
            return Ok(total);
        }
        if partial_sums.len() >= 4 {
            let accel = aitken_accelerate(&partial_sums);
            if let Some(prev) = last_accel {
                if (accel - prev).norm() < tol {
                    return Ok(accel);
                }
            }
            last_accel = Some(accel);
        }
    }
    Err(Error::NonConvergentTail {
        estimate_re: last_accel.unwrap_or(total).re,
        estimate_im: last_accel.unwrap_or(total).im,
        bound: remainder_bound(a),
    })
}

/// Iterated Aitken Δ² extrapolation of the last partial sums.
fn aitken_accelerate(sums: &[Complex64]) -> Complex64 {
    let take = sums.len().min(13);
    let mut row: Vec<Complex64> = sums[sums.len() - take..].to_vec();
    while row.len() >= 3 {
        let mut next = Vec::with_capacity(row.len() - 2);
        for i in 0..row.len() - 2 {
            let d1 = row[i + 1] - row[i];
            let d2 = row[i + 2] - 2.0 * row[i + 1] + row[i];
            if d2.norm() < 1e-300 {
                next.push(row[i + 2]);
            } else {
                next.push(row[i] - d1 * d1 / d2);
            }
        }
        row = next;
    }
    *row.last().expect("at least one entry")
}
