//! Drive the pipeline from a JSON scenario file, the same format the CLI
//! consumes, and inspect the emitted reports.

use dipole_cma::runner::{run, ScenarioConfig};

fn main() -> dipole_cma::Result<()> {
    let text = r#"{
        "dipole": {
            "length_m": 0.149896229,
            "height_m": 0.0749481145,
            "frequency_hz": 1.0e9,
            "segments": 21
        },
        "ground": { "type": "lossy", "eps_re": 16.0, "eps_im": -16.0 },
        "images": { "count": 5, "path_t0": 2.0, "samples": 100 },
        "formulations": ["lossy-conventional", "lossy-radiation"],
        "coupling": { "subsets": [[1, 2], [1, 2, 3, 4]] },
        "field_cuts": [
            { "start": [0.03, 0.0, 0.06], "end": [0.6, 0.0, 0.06], "points": 41 }
        ]
    }"#;

    let config = ScenarioConfig::from_json(text)?;
    let out = std::env::temp_dir().join("dipole-cma-scenario-demo");
    let report = run(&config, Some(&out))?;

    println!("scenario executed; reports under {}", out.display());
    for path in &report.written {
        println!("  {}", path.file_name().unwrap().to_string_lossy());
    }
    println!();
    for set in &report.mode_sets {
        println!(
            "{:<20} λ1 = {:+.6e}, λ2 = {:+.6e}",
            set.formulation.to_string(),
            set.eigenvalues[0],
            set.eigenvalues[1]
        );
    }
    if let Some(eff) = &report.efficiency {
        println!("ground efficiency: {:.4}", eff.eta);
    }
    if let Some(images) = &report.images {
        println!("image-fit residual: {:.3e}", images.fit_residual);
    }
    Ok(())
}
