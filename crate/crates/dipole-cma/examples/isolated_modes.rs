//! Characteristic modes of an isolated half-wave dipole in free space:
//! solve the reactance/radiation pencil and print the dominant eigenvalues
//! and modal powers.

use dipole_cma::constants::wavelength;
use dipole_cma::modal::{solve_modes, Formulation};
use dipole_cma::mom::{assemble, input_impedance, solve_direct, KernelChoice};
use dipole_cma::wire::{delta_gap_excitation, segment_dipole, DipoleSpec};
use num_complex::Complex64;

fn main() -> dipole_cma::Result<()> {
    let f = 1e9;
    let lambda = wavelength(f);
    let spec = DipoleSpec::half_wave(f, 0.25 * lambda, 41);
    let mesh = segment_dipole(&spec)?;

    let mut sys = assemble(&mesh, KernelChoice::FreeSpace)?;
    sys.set_excitation(&delta_gap_excitation(&mesh, Complex64::new(1.0, 0.0)));

    let current = solve_direct(&sys)?;
    println!(
        "half-wave dipole at {:.3} GHz, N = {} basis functions",
        f / 1e9,
        mesh.num_basis()
    );
    println!("feed-point impedance: {:.2} ohm\n", input_impedance(&sys, &current));

    let modes = solve_modes(&sys, Formulation::Isolated)?;
    println!("mode   eigenvalue      modal radiated power (W, max-amp currents)");
    for i in 0..6 {
        let j = modes.mode(i);
        let p = j.dot(&(&sys.r_o * &j));
        println!("{:>4}   {:+.6e}   {:.6e}", i + 1, modes.eigenvalues[i], p);
    }
    println!(
        "\n{} of {} modes stand above the radiation operator's rounding floor",
        modes.resolved,
        modes.n()
    );
    println!("mode 1 is near resonance (λ crosses zero close to the half-wave frequency)");
    Ok(())
}
