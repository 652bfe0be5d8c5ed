//! Near fields along observation cuts, far-field patterns on the radiation
//! sphere, and the far-sphere inner products that distinguish the two lossy
//! formulations.
//!
//! The far-field pattern is that of the wire current radiating in free
//! space: the power bookkeeping of the modal formulations assigns exactly
//! J_mᵀR_oJ_n to the sphere integral and every image contribution to R_L,
//! which is what makes the orthogonality identities testable.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::constants::{EPS0, ETA0, MU0};
use crate::error::{Error, Result};
use crate::modal::ModeSet;
use crate::mom::{ImpedanceSystem, KernelChoice};
use crate::quadrature::{gauss_legendre, gl8};
use crate::wire::WireMesh;

/// Fields sampled along a sequence of Cartesian points.
#[derive(Debug, Clone)]
pub struct FieldCut {
    pub points: Vec<[f64; 3]>,
    /// E-field vectors (V/m), Cartesian components.
    pub e: Vec<[Complex64; 3]>,
    /// H-field vectors (A/m), Cartesian components.
    pub h: Vec<[Complex64; 3]>,
}

impl FieldCut {
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut out =
            String::from("x_m,y_m,z_m,re_ex,im_ex,re_ey,im_ey,re_ez,im_ez,re_hx,im_hx,re_hy,im_hy,re_hz,im_hz\n");
        for (p, (e, h)) in self.points.iter().zip(self.e.iter().zip(self.h.iter())) {
            out.push_str(&format!("{:.8e},{:.8e},{:.8e}", p[0], p[1], p[2]));
            for c in e.iter().chain(h.iter()) {
                out.push_str(&format!(",{:.8e},{:.8e}", c.re, c.im));
            }
            out.push('\n');
        }
        std::fs::File::create(path)?.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// Evaluate E and H radiated by the wire current at the given points.
///
/// E comes from the mixed-potential form of the chosen kernel (the full
/// lossy kernel for ground scenarios); H from the curl of the magnetic
/// vector potential. Kernel derivatives are analytic.
pub fn near_fields(
    current: &DVector<Complex64>,
    mesh: &WireMesh,
    kernel: KernelChoice<'_>,
    points: &[[f64; 3]],
) -> Result<FieldCut> {
    let k0 = mesh.spec.wavenumber();
    let omega = 2.0 * std::f64::consts::PI * mesh.spec.frequency;
    let inv_jweps = Complex64::new(0.0, -1.0 / (omega * EPS0)); // 1/(jωε0)

    // (weight, displacement, image?) triples; direct term first.
    let mut terms: Vec<(Complex64, Complex64, bool)> =
        vec![(Complex64::new(1.0, 0.0), Complex64::ZERO, false)];
    match kernel {
        KernelChoice::FreeSpace => {}
        KernelChoice::PecGround => terms.push((Complex64::new(1.0, 0.0), Complex64::ZERO, true)),
        KernelChoice::LossyGround(images) => {
            terms.push((-images.k_eps, Complex64::ZERO, true));
            for t in &images.terms {
                terms.push((t.amplitude, t.displacement, true));
            }
        }
    }

    let mut e_out = Vec::with_capacity(points.len());
    let mut h_out = Vec::with_capacity(points.len());
    for p in points {
        let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if rho < mesh.spec.radius {
            return Err(Error::PointOnWire {
                x: p[0],
                y: p[1],
                z: p[2],
            });
        }
        let z = p[2];

        let mut ez = Complex64::ZERO;
        let mut erho = Complex64::ZERO;
        let mut hphi = Complex64::ZERO;
        for s in 0..mesh.num_segments() {
            let (za, zb) = mesh.segment(s);
            for &(zp, w) in &gl8(za, zb) {
                let j_here = mesh.current_profile(current.as_slice(), zp);
                if j_here.norm() == 0.0 {
                    continue;
                }
                for &(weight, v, image) in &terms {
                    // axial separation: z - z' direct, z + z' - jv for images
                    let u = if image {
                        Complex64::new(z + zp, 0.0) - Complex64::i() * v
                    } else {
                        Complex64::new(z - zp, 0.0)
                    };
                    let mut d = (Complex64::new(rho * rho, 0.0) + u * u).sqrt();
                    if d.re < 0.0 {
                        d = -d;
                    }
                    let (g, g1, g2) = kernel_derivatives(d, k0);
                    let common = w * j_here * weight;
                    // ∂²G/∂z² = g''·(u/d)² + g'·ρ²/d³
                    let d2z = g2 * (u * u) / (d * d) + g1 * rho * rho / (d * d * d);
                    ez += common * (k0 * k0 * g + d2z);
                    // ∂²G/∂ρ∂z = ρ·u·(g''/d² - g'/d³)
                    let drz = rho * u * (g2 / (d * d) - g1 / (d * d * d));
                    erho += common * drz;
                    // H_φ = -∂A_z/∂ρ/μ0 with A_z = μ0 ∫ G J
                    hphi -= common * g1 * rho / d;
                }
            }
        }
        ez *= inv_jweps;
        erho *= inv_jweps;

        let (cos_phi, sin_phi) = if rho > 0.0 {
            (p[0] / rho, p[1] / rho)
        } else {
            (1.0, 0.0)
        };
        e_out.push([erho * cos_phi, erho * sin_phi, ez]);
        h_out.push([-hphi * sin_phi, hphi * cos_phi, Complex64::ZERO]);
    }

    Ok(FieldCut {
        points: points.to_vec(),
        e: e_out,
        h: h_out,
    })
}

/// g, g', g'' of the spherical kernel  g(d) = e^{-jk0 d}/(4π d).
fn kernel_derivatives(d: Complex64, k0: f64) -> (Complex64, Complex64, Complex64) {
    let jkd = Complex64::i() * k0 * d;
    let e = (-jkd).exp() / (4.0 * std::f64::consts::PI);
    let g = e / d;
    let g1 = -e * (1.0 + jkd) / (d * d);
    let g2 = e * (2.0 + 2.0 * jkd - (k0 * d) * (k0 * d)) / (d * d * d);
    (g, g1, g2)
}

/// Far-field pattern sampled on a Gauss-Legendre (cosθ) × uniform (φ) grid,
/// with the e^{-jk0 r}/r factor removed.
#[derive(Debug, Clone)]
pub struct SpherePattern {
    pub cos_theta: Vec<f64>,
    pub theta_weights: Vec<f64>,
    pub n_phi: usize,
    /// (θ index, φ index), volts.
    pub e_theta: DMatrix<Complex64>,
    pub e_phi: DMatrix<Complex64>,
}

impl SpherePattern {
    /// Solid-angle weight of sample (i, j); all weights sum to 4π.
    pub fn weight(&self, i: usize, _j: usize) -> f64 {
        self.theta_weights[i] * 2.0 * std::f64::consts::PI / self.n_phi as f64
    }

    pub fn grid_matches(&self, other: &SpherePattern) -> bool {
        self.n_phi == other.n_phi && self.cos_theta == other.cos_theta
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut out = String::from("cos_theta,phi_rad,re_etheta,im_etheta,re_ephi,im_ephi\n");
        for i in 0..self.cos_theta.len() {
            for j in 0..self.n_phi {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / self.n_phi as f64;
                out.push_str(&format!(
                    "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
                    self.cos_theta[i],
                    phi,
                    self.e_theta[(i, j)].re,
                    self.e_theta[(i, j)].im,
                    self.e_phi[(i, j)].re,
                    self.e_phi[(i, j)].im
                ));
            }
        }
        std::fs::File::create(path)?.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// Radiate `current` into the far zone over an `n_theta` × `n_phi` grid.
pub fn far_field(
    current: &DVector<Complex64>,
    mesh: &WireMesh,
    n_theta: usize,
    n_phi: usize,
) -> SpherePattern {
    let k0 = mesh.spec.wavenumber();
    let omega = 2.0 * std::f64::consts::PI * mesh.spec.frequency;
    let (cos_theta, theta_weights) = gauss_legendre(n_theta);
    let mut e_theta = DMatrix::zeros(n_theta, n_phi);
    let e_phi = DMatrix::zeros(n_theta, n_phi);

    let prefactor = Complex64::new(0.0, omega * MU0 / (4.0 * std::f64::consts::PI));
    for (i, &ct) in cos_theta.iter().enumerate() {
        let st = (1.0 - ct * ct).sqrt();
        // ∫ J(z') e^{+j k0 cosθ z'} dz' over the wire
        let mut integral = Complex64::ZERO;
        for s in 0..mesh.num_segments() {
            let (za, zb) = mesh.segment(s);
            for &(zp, w) in &gl8(za, zb) {
                let j_here = mesh.current_profile(current.as_slice(), zp);
                integral += w * j_here * Complex64::from_polar(1.0, k0 * ct * zp);
            }
        }
        let val = prefactor * st * integral;
        for j in 0..n_phi {
            e_theta[(i, j)] = val;
        }
    }

    SpherePattern {
        cos_theta,
        theta_weights,
        n_phi,
        e_theta,
        e_phi,
    }
}

/// Far-sphere inner product (1/η0)·∮ E_m*·E_n dS of two patterns on the
/// same grid. The diagonal is the radiated power of the pattern.
pub fn sphere_inner(em: &SpherePattern, en: &SpherePattern) -> Result<Complex64> {
    if !em.grid_matches(en) {
        return Err(Error::GridMismatch);
    }
    let mut acc = Complex64::ZERO;
    for i in 0..em.cos_theta.len() {
        for j in 0..em.n_phi {
            let w = em.weight(i, j);
            acc += w
                * (em.e_theta[(i, j)].conj() * en.e_theta[(i, j)]
                    + em.e_phi[(i, j)].conj() * en.e_phi[(i, j)]);
        }
    }
    Ok(acc / ETA0)
}

/// Pairwise orthogonality diagnostics for the first K modes of a set:
/// matrix-form inner products against the formulation's weight matrix,
/// far-sphere cross powers, and the ground-resistance couplings.
#[derive(Debug, Clone)]
pub struct OrthogonalityReport {
    pub formulation: crate::modal::Formulation,
    /// |J_mᵀ B J_n| / sqrt(diag), B the formulation's weight matrix.
    pub weight_residual: DMatrix<f64>,
    /// |J_mᵀ X J_n| / |J_nᵀ X J_n| with X the formulation's reactance.
    pub reactance_residual: DMatrix<f64>,
    /// sphere inner products, normalised by sqrt(P_m P_n).
    pub sphere_cross: DMatrix<f64>,
    /// raw sphere inner products (W).
    pub sphere_inner: DMatrix<Complex64>,
    /// |J_mᵀ R_L J_n| / sqrt(P_m P_n): the resistive-loss couplings.
    pub loss_cross: DMatrix<f64>,
    /// raw J_mᵀ R_L J_n (W).
    pub loss_inner: DMatrix<f64>,
}

impl OrthogonalityReport {
    pub fn max_offdiag(m: &DMatrix<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i != j {
                    worst = worst.max(m[(i, j)].abs());
                }
            }
        }
        worst
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut out = String::from("m,n,weight_residual,reactance_residual,sphere_cross,loss_cross,re_sphere_w,im_sphere_w,loss_w\n");
        for i in 0..self.weight_residual.nrows() {
            for j in 0..self.weight_residual.ncols() {
                out.push_str(&format!(
                    "{},{},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
                    i + 1,
                    j + 1,
                    self.weight_residual[(i, j)],
                    self.reactance_residual[(i, j)],
                    self.sphere_cross[(i, j)],
                    self.loss_cross[(i, j)],
                    self.sphere_inner[(i, j)].re,
                    self.sphere_inner[(i, j)].im,
                    self.loss_inner[(i, j)]
                ));
            }
        }
        std::fs::File::create(path)?.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// Build the orthogonality diagnostics for the first `k_modes` modes.
pub fn orthogonality_report(
    modes: &ModeSet,
    sys: &ImpedanceSystem,
    k_modes: usize,
    n_theta: usize,
    n_phi: usize,
) -> Result<OrthogonalityReport> {
    let k = k_modes.min(modes.n());
    let weight: DMatrix<f64> = match modes.formulation {
        crate::modal::Formulation::Isolated => sys.r_o.clone(),
        crate::modal::Formulation::PecGround | crate::modal::Formulation::LossyConventional => {
            sys.r_total()
        }
        crate::modal::Formulation::LossyRadiation => sys.r_o.clone(),
    };
    let x_total = sys.x_total();

    let complex_mode = |i: usize| -> DVector<Complex64> {
        DVector::from_fn(modes.n(), |r, _| Complex64::new(modes.modes[(r, i)], 0.0))
    };
    let patterns: Vec<SpherePattern> = (0..k)
        .map(|i| far_field(&complex_mode(i), &sys.mesh, n_theta, n_phi))
        .collect();

    let mut weight_residual = DMatrix::zeros(k, k);
    let mut reactance_residual = DMatrix::zeros(k, k);
    let mut sphere_cross = DMatrix::zeros(k, k);
    let mut sphere_inner_raw = DMatrix::from_element(k, k, Complex64::ZERO);
    let mut loss_cross = DMatrix::zeros(k, k);
    let mut loss_inner = DMatrix::zeros(k, k);

    let powers: Vec<f64> = (0..k)
        .map(|i| sphere_inner(&patterns[i], &patterns[i]).map(|p| p.re))
        .collect::<Result<_>>()?;

    for m in 0..k {
        let jm = modes.mode(m);
        let wjm = &weight * &jm;
        let xjm = &x_total * &jm;
        let ljm = &sys.r_l * &jm;
        for n in 0..k {
            let jn = modes.mode(n);
            let bw = jn.dot(&wjm);
            let bx = jn.dot(&xjm);
            let bl = jn.dot(&ljm);
            let dm = jm.dot(&(&weight * &jm));
            let dn = jn.dot(&(&weight * &jn));
            weight_residual[(m, n)] = bw.abs() / (dm * dn).sqrt();
            let xn = jn.dot(&(&x_total * &jn)).abs().max(1e-300);
            reactance_residual[(m, n)] = bx.abs() / xn;
            let inner = sphere_inner(&patterns[m], &patterns[n])?;
            sphere_inner_raw[(m, n)] = inner;
            sphere_cross[(m, n)] = inner.norm() / (powers[m] * powers[n]).sqrt();
            loss_inner[(m, n)] = bl;
            loss_cross[(m, n)] = bl.abs() / (powers[m] * powers[n]).sqrt();
        }
    }

    Ok(OrthogonalityReport {
        formulation: modes.formulation,
        weight_residual,
        reactance_residual,
        sphere_cross,
        sphere_inner: sphere_inner_raw,
        loss_cross,
        loss_inner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::wavelength;
    use crate::mom::assemble;
    use crate::wire::{segment_dipole, DipoleSpec};

    fn small_dipole() -> (WireMesh, DVector<Complex64>) {
        let lambda = wavelength(1e9);
        let spec = DipoleSpec {
            length: 0.01 * lambda,
            height: 5.0 * lambda, // far from any interface; free-space tests
            radius: lambda / 5000.0,
            frequency: 1e9,
            segments: 3,
        };
        let mesh = segment_dipole(&spec).unwrap();
        let mut current = DVector::from_element(3, Complex64::ZERO);
        current[1] = Complex64::new(1.0, 0.0); // centre basis only
        (mesh, current)
    }

    /// Analytic infinitesimal-dipole fields (peak convention, e^{+jωt}).
    fn hertzian(p_moment: f64, k0: f64, r: f64, theta: f64) -> (Complex64, Complex64) {
        let kr = k0 * r;
        let e = Complex64::from_polar(1.0, -kr);
        let e_theta = Complex64::i() * ETA0 * k0 * k0 * p_moment * theta.sin()
            / (4.0 * std::f64::consts::PI)
            * (Complex64::new(1.0, 0.0) / kr - Complex64::i() / (kr * kr)
                - Complex64::new(1.0, 0.0) / (kr * kr * kr))
            * e;
        let h_phi = Complex64::i() * k0 * k0 * p_moment * theta.sin()
            / (4.0 * std::f64::consts::PI)
            * (Complex64::new(1.0, 0.0) / kr - Complex64::i() / (kr * kr))
            * e;
        (e_theta, h_phi)
    }

    #[test]
    fn zero_current_zero_fields() {
        let (mesh, _) = small_dipole();
        let zero = DVector::from_element(3, Complex64::ZERO);
        let cut = near_fields(
            &zero,
            &mesh,
            KernelChoice::FreeSpace,
            &[[0.3, 0.0, mesh.spec.height]],
        )
        .unwrap();
        for c in cut.e[0].iter().chain(cut.h[0].iter()) {
            assert_eq!(c.norm(), 0.0);
        }
    }

    #[test]
    fn short_dipole_matches_analytic_fields() {
        let (mesh, current) = small_dipole();
        let lambda = mesh.spec.wavelength();
        let k0 = mesh.spec.wavenumber();
        // dipole moment of the centre triangle: its area under f(z)
        let delta = mesh.segment_len();
        let p_moment = delta;
        let z_c = mesh.node_z[2]; // centre node (peak of basis 1)

        for theta_deg in [30.0_f64, 60.0, 90.0, 120.0] {
            let theta = theta_deg.to_radians();
            let r = 2.0 * lambda;
            let point = [r * theta.sin(), 0.0, z_c + r * theta.cos()];
            let cut =
                near_fields(&current, &mesh, KernelChoice::FreeSpace, &[point]).unwrap();
            let (et_ref, hp_ref) = hertzian(p_moment, k0, r, theta);
            // project computed E onto the θ̂ direction at the point
            let (st, ct) = (theta.sin(), theta.cos());
            let e_theta = cut.e[0][0] * ct - cut.e[0][2] * st;
            let h_phi = cut.h[0][1];
            assert!(
                (e_theta - et_ref).norm() < 0.01 * et_ref.norm(),
                "theta {theta_deg}: {e_theta} vs {et_ref}"
            );
            assert!(
                (h_phi - hp_ref).norm() < 0.01 * hp_ref.norm(),
                "theta {theta_deg}: H {h_phi} vs {hp_ref}"
            );
        }
    }

    #[test]
    fn point_on_wire_rejected() {
        let (mesh, current) = small_dipole();
        let p = [mesh.spec.radius * 0.5, 0.0, mesh.node_z[2]];
        assert!(matches!(
            near_fields(&current, &mesh, KernelChoice::FreeSpace, &[p]),
            Err(Error::PointOnWire { .. })
        ));
    }

    #[test]
    fn half_wave_pattern_axial_null_and_broadside_peak() {
        let spec = DipoleSpec::half_wave(1e9, 0.25 * wavelength(1e9), 21);
        let mesh = segment_dipole(&spec).unwrap();
        let sys = assemble(&mesh, KernelChoice::FreeSpace).unwrap();
        let modes = crate::modal::solve_modes(&sys, crate::modal::Formulation::Isolated).unwrap();
        let j1 = DVector::from_fn(21, |r, _| Complex64::new(modes.modes[(r, 0)], 0.0));
        let pat = far_field(&j1, &mesh, 64, 8);
        // |E| peaks near broadside (cosθ ≈ 0) and sinks toward the axis
        let (imax, peak) = (0..pat.cos_theta.len())
            .map(|i| (i, pat.e_theta[(i, 0)].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(
            pat.cos_theta[imax].abs() < 0.1,
            "peak at cosθ = {}",
            pat.cos_theta[imax]
        );
        let most_axial = pat.e_theta[(0, 0)].norm();
        assert!(most_axial < 0.2 * peak, "axial {most_axial} vs peak {peak}");
        // axial symmetry in φ
        for j in 1..pat.n_phi {
            assert_eq!(pat.e_theta[(imax, 0)], pat.e_theta[(imax, j)]);
        }
    }

    #[test]
    fn sphere_quadrature_weights_sum_to_4pi() {
        let (mesh, current) = small_dipole();
        let pat = far_field(&current, &mesh, 64, 128);
        let mut total = 0.0;
        for i in 0..pat.cos_theta.len() {
            for j in 0..pat.n_phi {
                total += pat.weight(i, j);
            }
        }
        assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn sphere_power_matches_radiation_quadratic_form() {
        let spec = DipoleSpec::half_wave(1e9, 0.25 * wavelength(1e9), 21);
        let mesh = segment_dipole(&spec).unwrap();
        let sys = assemble(&mesh, KernelChoice::FreeSpace).unwrap();
        // deterministic pseudo-random real currents
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for trial in 0..5 {
            let u = DVector::from_fn(21, |_, _| next());
            let uc = DVector::from_fn(21, |r, _| Complex64::new(u[r], 0.0));
            let pat = far_field(&uc, &mesh, 64, 128);
            let p_sphere = sphere_inner(&pat, &pat).unwrap().re;
            let p_matrix = u.dot(&(&sys.r_o * &u));
            assert!(
                (p_sphere - p_matrix).abs() <= 1e-3 * p_matrix.abs(),
                "trial {trial}: {p_sphere} vs {p_matrix}"
            );
        }
    }

    #[test]
    fn sphere_quadrature_is_converged() {
        // doubling the grid barely moves the reported powers
        let spec = DipoleSpec::half_wave(1e9, 0.25 * wavelength(1e9), 21);
        let mesh = segment_dipole(&spec).unwrap();
        let sys = assemble(&mesh, KernelChoice::FreeSpace).unwrap();
        let modes = crate::modal::solve_modes(&sys, crate::modal::Formulation::Isolated).unwrap();
        let j = DVector::from_fn(21, |r, _| Complex64::new(modes.modes[(r, 0)], 0.0));
        let coarse = far_field(&j, &mesh, 64, 128);
        let fine = far_field(&j, &mesh, 128, 256);
        let pc = sphere_inner(&coarse, &coarse).unwrap().re;
        let pf = sphere_inner(&fine, &fine).unwrap().re;
        assert!(
            (pc - pf).abs() < 1e-4 * pf.abs(),
            "grid doubling moved the power by {:.3e}",
            (pc - pf).abs() / pf.abs()
        );
    }

    #[test]
    fn sphere_inner_is_conjugate_symmetric() {
        let (mesh, current) = small_dipole();
        let mut other = current.clone();
        other[0] = Complex64::new(0.4, -0.7);
        let pa = far_field(&current, &mesh, 32, 16);
        let pb = far_field(&other, &mesh, 32, 16);
        let ab = sphere_inner(&pa, &pb).unwrap();
        let ba = sphere_inner(&pb, &pa).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-12 * ab.norm().max(1e-30));
        // mismatched grids are refused
        let pc = far_field(&current, &mesh, 16, 16);
        assert!(matches!(sphere_inner(&pa, &pc), Err(Error::GridMismatch)));
    }
}
