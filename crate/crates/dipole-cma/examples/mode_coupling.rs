//! Predict the lossy-ground modes from the isolated modes through the
//! interaction-power pencil: closed-form two-mode combination, 4×4
//! truncation, and the full N×N equivalence, at three heights.

use dipole_cma::constants::wavelength;
use dipole_cma::coupling::{
    coupled_modes, first_order_pair, interaction_powers, prediction_as_mode_set, FirstOrderB,
};
use dipole_cma::greens::{fit_complex_images, HalfSpace};
use dipole_cma::metrics::compare_mode_sets;
use dipole_cma::modal::{solve_modes, Formulation};
use dipole_cma::mom::{assemble, KernelChoice};
use dipole_cma::wire::{segment_dipole, DipoleSpec};
use num_complex::Complex64;

fn main() -> dipole_cma::Result<()> {
    let f = 1e9;
    let lambda = wavelength(f);
    let eps = Complex64::new(16.0, -16.0);
    let n = 41;

    for h_l in [0.3, 1.0, 10.0] {
        let spec = DipoleSpec::half_wave(f, h_l * lambda, n);
        let mesh = segment_dipole(&spec)?;
        let images = fit_complex_images(spec.wavenumber(), HalfSpace::new(eps), 5, 2.0, 100)?;
        let free = assemble(&mesh, KernelChoice::FreeSpace)?;
        let lossy = assemble(&mesh, KernelChoice::LossyGround(&images))?;

        let isolated = solve_modes(&free, Formulation::Isolated)?;
        let direct = solve_modes(&lossy, Formulation::LossyRadiation)?;
        let cs = interaction_powers(&isolated, &lossy)?;

        println!("== h = {h_l}λ ==");
        println!(
            "interaction powers P_XL (W): (1,1) {:+.4e}  (2,2) {:+.4e}  (1,2) {:+.4e}",
            cs.p_xl[(0, 0)],
            cs.p_xl[(1, 1)],
            cs.p_xl[(0, 1)]
        );

        let pair = first_order_pair(&cs, 0, 1, FirstOrderB::Consistent)?;
        println!(
            "first-order combination: mode 1 couples k2/k1 = {:+.4e}, mode 2 k1/k2 = {:+.4e}",
            pair.coefficients[(1, 0)],
            pair.coefficients[(0, 1)]
        );

        let all: Vec<usize> = (0..n).collect();
        for (tag, subset) in [("K=2", vec![0usize, 1]), ("K=4", vec![0, 1, 2, 3]), ("K=N", all)] {
            let pred = coupled_modes(&cs, &subset)?;
            let k_cmp = subset.len().min(4);
            let rep = compare_mode_sets(&direct, &prediction_as_mode_set(&pred), k_cmp)?;
            print!("{tag:>4}: δλ% =");
            for e in &rep.eigenvalue_errors {
                print!(" {e:.3e}");
            }
            print!("   δ∠J° =");
            for a in &rep.angle_errors {
                print!(" {a:.3e}");
            }
            println!();
        }
        println!();
    }
    println!("the full-rank prediction reproduces the direct solve to machine level,");
    println!("and truncation errors shrink as the dipole moves away from the ground");
    Ok(())
}
