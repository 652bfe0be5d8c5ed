//! Eigenvalue dispersion of the free-space dipole across its first
//! resonance: the dominant eigenvalue changes sign where the dipole is
//! resonant.

use dipole_cma::runner::{preset, sweep, SweepAxis};

fn main() -> dipole_cma::Result<()> {
    let config = preset("frequency", 1e9)?;
    let freqs: Vec<f64> = (0..=16).map(|i| 0.8e9 + 0.4e9 * i as f64 / 16.0).collect();

    let report = sweep(&config, SweepAxis::Frequency, &freqs, None)?;
    println!("f (GHz)   λ1            λ2            λ3");
    let mut previous: Option<(f64, f64)> = None;
    let mut crossing = None;
    for (fz, run) in report.values.iter().zip(&report.runs) {
        let lam = &run.mode_sets[0].eigenvalues;
        println!(
            "{:<8.4}  {:+.5e}  {:+.5e}  {:+.5e}",
            fz / 1e9,
            lam[0],
            lam[1],
            lam[2]
        );
        if let Some((f_prev, l_prev)) = previous {
            if l_prev < 0.0 && lam[0] >= 0.0 {
                crossing = Some((f_prev, *fz));
            }
        }
        previous = Some((*fz, lam[0]));
    }
    match crossing {
        Some((a, b)) => println!(
            "\nmode 1 resonance (λ1 sign change) bracketed between {:.4} and {:.4} GHz",
            a / 1e9,
            b / 1e9
        ),
        None => println!("\nno λ1 sign change inside the swept band"),
    }
    Ok(())
}
