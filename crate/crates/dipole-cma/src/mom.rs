//! Galerkin method-of-moments assembly of the Pocklington operator
//! (k0² + ∂²/∂z²) applied to the chosen Green's function, plus the direct
//! (LU) solve that serves as the reference for every modal expansion.
//!
//! The ∂²/∂z² is moved onto the triangle basis functions by integration by
//! parts, which produces the familiar vector-potential plus charge-term
//! split. Kernels that depend on z + z' (all image terms) flip the sign of
//! the charge term, consistent with the sign flip of image charge under a
//! co-directed image current.
//!
//! The resistance/reactance matrices are stored split: R_o, X_o carry the
//! direct (free-space) term only, R_L, X_L everything the ground adds.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::constants::{EPS0, MU0};
use crate::error::{Error, Result};
use crate::greens::{spherical_wave_complex, ComplexImageSet};
use crate::quadrature::gl8;
use crate::wire::{ExcitationVector, WireMesh};

/// Which Green's function to assemble with.
#[derive(Debug, Clone, Copy)]
pub enum KernelChoice<'a> {
    FreeSpace,
    PecGround,
    LossyGround(&'a ComplexImageSet),
}

/// Tag recording what a system was assembled with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    FreeSpace,
    PecGround,
    LossyGround,
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelKind::FreeSpace => write!(f, "free"),
            KernelKind::PecGround => write!(f, "pec"),
            KernelKind::LossyGround => write!(f, "lossy"),
        }
    }
}

/// Assembled impedance system Z = (R_o + R_L) + j(X_o + X_L) with its
/// excitation vector.
#[derive(Debug, Clone)]
pub struct ImpedanceSystem {
    pub mesh: WireMesh,
    pub kernel: KernelKind,
    pub r_o: DMatrix<f64>,
    pub x_o: DMatrix<f64>,
    pub r_l: DMatrix<f64>,
    pub x_l: DMatrix<f64>,
    pub v: DVector<Complex64>,
}

impl ImpedanceSystem {
    pub fn n(&self) -> usize {
        self.r_o.nrows()
    }

    /// Full complex matrix, reconstructed from the four real parts.
    pub fn z(&self) -> DMatrix<Complex64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(
                self.r_o[(i, j)] + self.r_l[(i, j)],
                self.x_o[(i, j)] + self.x_l[(i, j)],
            )
        })
    }

    /// Total resistance matrix R_o + R_L.
    pub fn r_total(&self) -> DMatrix<f64> {
        &self.r_o + &self.r_l
    }

    /// Total reactance matrix X_o + X_L.
    pub fn x_total(&self) -> DMatrix<f64> {
        &self.x_o + &self.x_l
    }

    pub fn set_excitation(&mut self, exc: &ExcitationVector) {
        self.v = DVector::from_column_slice(&exc.v);
    }

    /// Row-major binary dump of Z, little-endian f64 re/im interleaved.
    pub fn write_binary(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let z = self.z();
        let mut buf = Vec::with_capacity(z.len() * 16);
        for i in 0..z.nrows() {
            for j in 0..z.ncols() {
                buf.extend_from_slice(&z[(i, j)].re.to_le_bytes());
                buf.extend_from_slice(&z[(i, j)].im.to_le_bytes());
            }
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    /// CSV dump of Z for debugging (row index, column index, re, im).
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let z = self.z();
        let mut out = String::from("row,col,re_ohm,im_ohm\n");
        for i in 0..z.nrows() {
            for j in 0..z.ncols() {
                out.push_str(&format!(
                    "{},{},{:.8e},{:.8e}\n",
                    i + 1,
                    j + 1,
                    z[(i, j)].re,
                    z[(i, j)].im
                ));
            }
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// Assemble the Galerkin impedance system for `mesh` under `kernel`.
pub fn assemble(mesh: &WireMesh, kernel: KernelChoice<'_>) -> Result<ImpedanceSystem> {
    if mesh.spec.radius <= 0.0 {
        return Err(Error::SingularSelfTerm);
    }
    let n = mesh.num_basis();
    let k0 = mesh.spec.wavenumber();
    let omega = 2.0 * std::f64::consts::PI * mesh.spec.frequency;
    let radius = mesh.spec.radius;

    // Image terms as (weight, complex displacement) pairs; the quasi-dynamic
    // image is the v = 0 member.
    let image_terms: Vec<(Complex64, Complex64)> = match kernel {
        KernelChoice::FreeSpace => Vec::new(),
        KernelChoice::PecGround => vec![(Complex64::new(1.0, 0.0), Complex64::ZERO)],
        KernelChoice::LossyGround(images) => {
            let mut t = vec![(-images.k_eps, Complex64::ZERO)];
            t.extend(
                images
                    .terms
                    .iter()
                    .map(|im| (im.amplitude, im.displacement)),
            );
            t
        }
    };

    // Per-segment Gauss points, shared by every entry.
    let seg_pts: Vec<[(f64, f64); 8]> = (0..mesh.num_segments())
        .map(|s| {
            let (a, b) = mesh.segment(s);
            gl8(a, b)
        })
        .collect();

    let scale_vv = Complex64::new(0.0, omega * MU0); // jωμ0
    let scale_qq = Complex64::new(0.0, -1.0 / (omega * EPS0)); // 1/(jωε0)

    let mut r_o = DMatrix::zeros(n, n);
    let mut x_o = DMatrix::zeros(n, n);
    let mut r_l = DMatrix::zeros(n, n);
    let mut x_l = DMatrix::zeros(n, n);

    for m in 0..n {
        for nn in 0..n {
            // Reduced kernel at ρ = a for every entry: supports overlap or
            // touch for |m - n| <= 2, which is where the 1/d static part is
            // extracted. A mixed ρ = a / ρ = 0 rule would leave R_o with
            // negative eigenvalues well above rounding.
            let near = m.abs_diff(nn) <= 2;
            let rho = radius;

            // ------ direct term (free-space part) ------
            let (mut avv, mut aqq) = (Complex64::ZERO, Complex64::ZERO);
            for p in [m, m + 1] {
                for q in [nn, nn + 1] {
                    let dfm = basis_slope(mesh, m, p);
                    let dfn = basis_slope(mesh, nn, q);
                    if near {
                        // smooth remainder by Gauss, extracted 1/4πd static
                        // part by outer-Gauss × analytic inner moments
                        for &(z, wz) in &seg_pts[p] {
                            let fm = mesh.basis_value(m, z);
                            for &(zp, wzp) in &seg_pts[q] {
                                let fn_v = mesh.basis_value(nn, zp);
                                let g = smooth_direct_kernel(rho, z, zp, k0);
                                let w = wz * wzp;
                                avv += w * fm * fn_v * g;
                                aqq += w * dfm * dfn * g;
                            }
                        }
                        // basis restricted to a segment, in offsets from the
                        // segment start: value alpha at the start (exactly 0
                        // or 1) plus slope beta
                        let alpha_m = if p == m { 0.0 } else { 1.0 };
                        let alpha_n = if q == nn { 0.0 } else { 1.0 };
                        let s = static_moments(mesh, p, q, rho);
                        avv += alpha_m * alpha_n * s[0]
                            + alpha_m * dfn * s[1]
                            + dfm * alpha_n * s[2]
                            + dfm * dfn * s[3];
                        aqq += dfm * dfn * s[0];
                    } else {
                        for &(z, wz) in &seg_pts[p] {
                            let fm = mesh.basis_value(m, z);
                            for &(zp, wzp) in &seg_pts[q] {
                                let fn_v = mesh.basis_value(nn, zp);
                                let d = (rho * rho + (z - zp) * (z - zp)).sqrt();
                                let g = Complex64::from_polar(
                                    1.0 / (4.0 * std::f64::consts::PI * d),
                                    -k0 * d,
                                );
                                let w = wz * wzp;
                                avv += w * fm * fn_v * g;
                                aqq += w * dfm * dfn * g;
                            }
                        }
                    }
                }
            }
            let z_direct = scale_vv * avv + scale_qq * aqq;
            r_o[(m, nn)] = z_direct.re;
            x_o[(m, nn)] = z_direct.im;

            // ------ ground terms (image + complex images) ------
            if !image_terms.is_empty() {
                let mut z_ground = Complex64::ZERO;
                for &(weight, v) in &image_terms {
                    let (mut bvv, mut bqq) = (Complex64::ZERO, Complex64::ZERO);
                    for p in [m, m + 1] {
                        for q in [nn, nn + 1] {
                            let dfm = basis_slope(mesh, m, p);
                            let dfn = basis_slope(mesh, nn, q);
                            for &(z, wz) in &seg_pts[p] {
                                let fm = mesh.basis_value(m, z);
                                for &(zp, wzp) in &seg_pts[q] {
                                    let fn_v = mesh.basis_value(nn, zp);
                                    let shift = Complex64::new(z + zp, 0.0) - Complex64::i() * v;
                                    let mut d =
                                        (Complex64::new(rho * rho, 0.0) + shift * shift).sqrt();
                                    if d.re < 0.0 {
                                        d = -d;
                                    }
                                    let g = spherical_wave_complex(d, k0);
                                    let w = wz * wzp;
                                    bvv += w * fm * fn_v * g;
                                    bqq += w * dfm * dfn * g;
                                }
                            }
                        }
                    }
                    // image kernels depend on z + z': charge term flips sign
                    z_ground += weight * (scale_vv * bvv - scale_qq * bqq);
                }
                r_l[(m, nn)] = z_ground.re;
                x_l[(m, nn)] = z_ground.im;
            }
        }
    }

    Ok(ImpedanceSystem {
        mesh: mesh.clone(),
        kernel: match kernel {
            KernelChoice::FreeSpace => KernelKind::FreeSpace,
            KernelChoice::PecGround => KernelKind::PecGround,
            KernelChoice::LossyGround(_) => KernelKind::LossyGround,
        },
        r_o,
        x_o,
        r_l,
        x_l,
        v: DVector::zeros(n),
    })
}

fn basis_slope(mesh: &WireMesh, i: usize, s: usize) -> f64 {
    mesh.basis_slope(i, s)
}

/// (e^{-jk0 d} - 1)/(4π d): the direct kernel with its static singularity
/// removed, written via sin(x/2)/(x/2) so it stays finite and accurate as
/// d → 0.
fn smooth_direct_kernel(rho: f64, z: f64, zp: f64, k0: f64) -> Complex64 {
    let d = (rho * rho + (z - zp) * (z - zp)).sqrt();
    let x = k0 * d;
    let half = 0.5 * x;
    let sinc = if half.abs() < 1e-8 {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    // (e^{-jx} - 1)/x = -j e^{-jx/2} sin(x/2)/(x/2)
    let val = Complex64::new(0.0, -1.0) * Complex64::from_polar(sinc, -half);
    val * k0 / (4.0 * std::f64::consts::PI)
}

/// Double integrals of the static kernel u^a u'^b/(4π sqrt(ρ² + (z-z')²))
/// over the segment pair (p, q), with u, u' the offsets from the respective
/// segment starts; returned as [S00, S01, S10, S11].
///
/// Offsets instead of absolute coordinates keep the moment combination
/// conditioned when the wire sits hundreds of wavelengths up. The inner
/// integral is analytic, the outer uses the shared 8-point rule, and the
/// orientation is canonicalised on the segment indices so (p, q) and (q, p)
/// return bit-identical transposed results, keeping the assembled matrix
/// symmetric to machine precision.
fn static_moments(mesh: &WireMesh, p: usize, q: usize, rho: f64) -> [f64; 4] {
    if p > q {
        let s = static_moments(mesh, q, p, rho);
        return [s[0], s[2], s[1], s[3]];
    }
    let (qa, qb) = mesh.segment(q);
    let (pa, pb) = mesh.segment(p);
    let mut s = [0.0; 4];
    for &(z, w) in &gl8(pa, pb) {
        // I0 = ∫ du'/sqrt(ρ² + (z'-z)²), I1 = ∫ u' du'/sqrt(...)
        let ub = qb - z;
        let ua = qa - z;
        let i0 = (ub / rho).asinh() - (ua / rho).asinh();
        let i1 = ((rho * rho + ub * ub).sqrt() - (rho * rho + ua * ua).sqrt()) + (z - qa) * i0;
        let u = z - pa;
        s[0] += w * i0;
        s[1] += w * i1;
        s[2] += w * u * i0;
        s[3] += w * u * i1;
    }
    let inv4pi = 1.0 / (4.0 * std::f64::consts::PI);
    [s[0] * inv4pi, s[1] * inv4pi, s[2] * inv4pi, s[3] * inv4pi]
}

/// Direct solve Z·J = V by pivoted LU, with a residual check.
pub fn solve_direct(sys: &ImpedanceSystem) -> Result<DVector<Complex64>> {
    let z = sys.z();
    let lu = z.clone().lu();
    let j = lu.solve(&sys.v).ok_or(Error::SingularMatrix {
        cond: f64::INFINITY,
    })?;
    let vnorm = sys.v.norm();
    if vnorm > 0.0 {
        let residual = (&z * &j - &sys.v).norm() / vnorm;
        if residual > 1e-10 {
            return Err(Error::SingularMatrix {
                cond: condition_estimate(&z),
            });
        }
    }
    Ok(j)
}

/// One-norm condition estimate ‖Z‖₁·‖Z⁻¹‖₁ via explicit inverse (systems
/// here are small).
pub fn condition_estimate(z: &DMatrix<Complex64>) -> f64 {
    let norm1 = |m: &DMatrix<Complex64>| -> f64 {
        (0..m.ncols())
            .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match z.clone().lu().try_inverse() {
        Some(inv) => norm1(z) * norm1(&inv),
        None => f64::INFINITY,
    }
}

/// Feed-point impedance of a solved system: V_feed / I_feed.
pub fn input_impedance(sys: &ImpedanceSystem, current: &DVector<Complex64>) -> Complex64 {
    let feed = sys.mesh.feed_index;
    sys.v[feed] / current[feed]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::wavelength;
    use crate::greens::{fit_complex_images, HalfSpace};
    use crate::wire::{delta_gap_excitation, segment_dipole, DipoleSpec};

    fn mesh(n: usize) -> WireMesh {
        segment_dipole(&DipoleSpec::half_wave(1e9, 0.25 * wavelength(1e9), n)).unwrap()
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0, |acc: f64, &v| acc.max(v.abs()))
    }

    #[test]
    fn free_kernel_has_no_ground_parts() {
        let sys = assemble(&mesh(11), KernelChoice::FreeSpace).unwrap();
        assert_eq!(max_abs(&sys.r_l), 0.0);
        assert_eq!(max_abs(&sys.x_l), 0.0);
    }

    #[test]
    fn galerkin_symmetry_all_kernels() {
        let mesh = mesh(15);
        let images = fit_complex_images(
            mesh.spec.wavenumber(),
            HalfSpace::new(Complex64::new(16.0, -16.0)),
            5,
            5.0,
            100,
        )
        .unwrap();
        for kernel in [
            KernelChoice::FreeSpace,
            KernelChoice::PecGround,
            KernelChoice::LossyGround(&images),
        ] {
            let sys = assemble(&mesh, kernel).unwrap();
            let z = sys.z();
            let zmax = z.iter().fold(0.0, |acc: f64, c| acc.max(c.norm()));
            let mut asym: f64 = 0.0;
            for i in 0..z.nrows() {
                for j in 0..z.ncols() {
                    asym = asym.max((z[(i, j)] - z[(j, i)]).norm());
                }
            }
            assert!(asym <= 1e-12 * zmax, "{:?}: {asym} vs {zmax}", sys.kernel);
        }
    }

    #[test]
    fn lossy_at_huge_permittivity_matches_pec() {
        let mesh = mesh(21);
        let images = fit_complex_images(
            mesh.spec.wavenumber(),
            HalfSpace::new(Complex64::new(1e8, 0.0)),
            5,
            5.0,
            100,
        )
        .unwrap();
        let pec = assemble(&mesh, KernelChoice::PecGround).unwrap();
        let lossy = assemble(&mesh, KernelChoice::LossyGround(&images)).unwrap();
        let zp = pec.z();
        let zl = lossy.z();
        let mut worst: f64 = 0.0;
        for i in 0..zp.nrows() {
            for j in 0..zp.ncols() {
                worst = worst.max((zp[(i, j)] - zl[(i, j)]).norm() / zp[(i, j)].norm());
            }
        }
        assert!(worst <= 1e-3, "max relative entry difference {worst}");
    }

    #[test]
    fn splitting_matches_free_lossy_difference() {
        let mesh = mesh(11);
        let images = fit_complex_images(
            mesh.spec.wavenumber(),
            HalfSpace::new(Complex64::new(16.0, -16.0)),
            4,
            5.0,
            80,
        )
        .unwrap();
        let free = assemble(&mesh, KernelChoice::FreeSpace).unwrap();
        let lossy = assemble(&mesh, KernelChoice::LossyGround(&images)).unwrap();
        let zf = free.z();
        let zl = lossy.z();
        let scale = zl.iter().fold(0.0, |a: f64, c| a.max(c.norm()));
        for i in 0..zf.nrows() {
            for j in 0..zf.ncols() {
                let diff = zl[(i, j)] - zf[(i, j)];
                assert!((diff.re - lossy.r_l[(i, j)]).abs() <= 1e-12 * scale);
                assert!((diff.im - lossy.x_l[(i, j)]).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn direct_solve_trivial_cases() {
        let mesh = mesh(11);
        let mut sys = assemble(&mesh, KernelChoice::FreeSpace).unwrap();
        // V = 0 → J = 0
        let j = solve_direct(&sys).unwrap();
        assert!(j.norm() == 0.0);
        // synthetic identity system → J = V
        let n = sys.n();
        sys.r_o = DMatrix::identity(n, n);
        sys.x_o = DMatrix::zeros(n, n);
        sys.r_l = DMatrix::zeros(n, n);
        sys.x_l = DMatrix::zeros(n, n);
        for i in 0..n {
            sys.v[i] = Complex64::new(i as f64, -(i as f64) * 0.5);
        }
        let j = solve_direct(&sys).unwrap();
        assert!((&j - &sys.v).norm() < 1e-12);
    }

    #[test]
    fn half_wave_input_resistance_in_classical_band() {
        // Cross-check against the textbook thin-wire half-wave dipole:
        // induced-EMF theory gives 73 + j42.5 Ω for an infinitesimally thin
        // half wave; finite radius and segmentation move the resistance
        // within [60, 110] Ω.
        let mesh = mesh(41);
        let mut sys = assemble(&mesh, KernelChoice::FreeSpace).unwrap();
        sys.set_excitation(&delta_gap_excitation(&mesh, Complex64::new(1.0, 0.0)));
        let j = solve_direct(&sys).unwrap();
        let zin = input_impedance(&sys, &j);
        assert!(
            zin.re > 60.0 && zin.re < 110.0,
            "input impedance {zin} out of band"
        );
    }

    #[test]
    fn feed_current_converges_with_refinement() {
        let run = |n: usize| -> Complex64 {
            let mesh = mesh(n);
            let mut sys = assemble(&mesh, KernelChoice::FreeSpace).unwrap();
            sys.set_excitation(&delta_gap_excitation(&mesh, Complex64::new(1.0, 0.0)));
            let j = solve_direct(&sys).unwrap();
            j[mesh.feed_index]
        };
        let coarse = run(41);
        let fine = run(81);
        let change = (coarse - fine).norm() / fine.norm();
        assert!(change < 0.02, "feed current changed by {change}");
    }

    #[test]
    fn binary_export_layout() {
        let mesh = mesh(5);
        let sys = assemble(&mesh, KernelChoice::FreeSpace).unwrap();
        let path = std::env::temp_dir().join(format!("dipole-cma-zdump-{}.bin", std::process::id()));
        sys.write_binary(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::remove_file(&path).ok();
        let n = sys.n();
        assert_eq!(bytes.len(), n * n * 16);
        // row-major, re/im interleaved, little endian: check entry (0, 1)
        let z = sys.z();
        let offset = 16; // second entry of the first row
        let re = f64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[offset + 8..offset + 16].try_into().unwrap());
        assert_eq!(re, z[(0, 1)].re);
        assert_eq!(im, z[(0, 1)].im);
    }

    #[test]
    fn zero_radius_is_rejected() {
        let mut m = mesh(5);
        m.spec.radius = 0.0;
        assert!(matches!(
            assemble(&m, KernelChoice::FreeSpace),
            Err(Error::SingularSelfTerm)
        ));
    }
}
