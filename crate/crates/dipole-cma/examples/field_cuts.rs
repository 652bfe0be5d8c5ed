//! Near fields along a horizontal cut above the interface and the far-field
//! orthogonality contrast between the two lossy formulations.

use dipole_cma::constants::wavelength;
use dipole_cma::fields::{near_fields, orthogonality_report, OrthogonalityReport};
use dipole_cma::greens::{fit_complex_images, HalfSpace};
use dipole_cma::modal::{modal_weights, solve_modes, Formulation};
use dipole_cma::mom::{assemble, solve_direct, KernelChoice};
use dipole_cma::wire::{delta_gap_excitation, segment_dipole, DipoleSpec};
use nalgebra::DVector;
use num_complex::Complex64;

fn main() -> dipole_cma::Result<()> {
    let f = 1e9;
    let lambda = wavelength(f);
    let spec = DipoleSpec::half_wave(f, 0.25 * lambda, 41);
    let mesh = segment_dipole(&spec)?;
    let eps = Complex64::new(16.0, -16.0);
    let images = fit_complex_images(spec.wavenumber(), HalfSpace::new(eps), 5, 2.0, 100)?;

    let mut sys = assemble(&mesh, KernelChoice::LossyGround(&images))?;
    sys.set_excitation(&delta_gap_excitation(&mesh, Complex64::new(1.0, 0.0)));
    let j_direct = solve_direct(&sys)?;

    // five-dominant-mode superposition of the radiation-weighted modes
    let modes = solve_modes(&sys, Formulation::LossyRadiation)?;
    let expansion = modal_weights(&modes, &sys)?;
    let mut j_modal = DVector::<Complex64>::zeros(mesh.num_basis());
    for k in 0..5 {
        let jk = modes.mode(k);
        for r in 0..mesh.num_basis() {
            j_modal[r] += expansion.coefficients[k] * jk[r];
        }
    }

    let points: Vec<[f64; 3]> = (0..21)
        .map(|i| [lambda * (0.1 + 1.9 * i as f64 / 20.0), 0.0, 0.2 * lambda])
        .collect();
    let kernel = KernelChoice::LossyGround(&images);
    let direct = near_fields(&j_direct, &mesh, kernel, &points)?;
    let modal = near_fields(&j_modal, &mesh, kernel, &points)?;

    println!("|E| along the x-axis at z = 0.2λ (direct MoM current vs 5 modes):");
    println!("x/λ     |E| direct      |E| 5 modes");
    for (i, p) in points.iter().enumerate().step_by(4) {
        let mag = |e: &[Complex64; 3]| (e[0].norm_sqr() + e[1].norm_sqr() + e[2].norm_sqr()).sqrt();
        println!(
            "{:<6.2}  {:.6e}    {:.6e}",
            p[0] / lambda,
            mag(&direct.e[i]),
            mag(&modal.e[i])
        );
    }

    println!("\nfar-field orthogonality of the first five modes:");
    for form in [Formulation::LossyRadiation, Formulation::LossyConventional] {
        let set = solve_modes(&sys, form)?;
        let rep = orthogonality_report(&set, &sys, 5, 64, 128)?;
        println!(
            "  {form}: max normalised far-sphere cross power {:.3e}",
            OrthogonalityReport::max_offdiag(&rep.sphere_cross)
        );
    }
    println!("\nweighting by the radiation operator alone keeps the far fields of");
    println!("distinct modes orthogonal; the full-resistance weighting does not");
    Ok(())
}
