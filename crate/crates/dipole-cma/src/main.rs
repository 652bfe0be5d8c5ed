//! Scenario-file front end: runs one scenario or a sweep and writes the
//! CSV/JSON reports. All analysis lives in the library; see the crate
//! examples for programmatic use.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dipole_cma::runner::{self, ScenarioConfig, SweepAxis};

#[derive(Parser, Debug)]
#[command(version, about = "Characteristic modes of a vertical dipole above a lossy half-space")]
struct Args {
    /// JSON scenario file (mutually exclusive with --preset).
    #[arg(short, long, value_name = "FILE", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in scenario: table1, coupling-sweep, efficiency, fields, frequency.
    #[arg(short, long, value_name = "NAME")]
    preset: Option<String>,

    /// Operating frequency for presets (Hz).
    #[arg(long, default_value_t = 1e9)]
    frequency: f64,

    /// Output directory for reports.
    #[arg(short, long, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Sweep axis: height, eps-real or frequency.
    #[arg(long, value_name = "AXIS", requires = "values")]
    axis: Option<String>,

    /// Comma-separated sweep values (metres, unitless or Hz per the axis).
    #[arg(long, value_name = "V1,V2,...", value_delimiter = ',')]
    values: Option<Vec<f64>>,

    /// Concurrent scenarios in a sweep.
    #[arg(short, long, default_value_t = 1)]
    workers: usize,

    /// Print progress details.
    #[arg(short, long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(args: &Args) -> dipole_cma::Result<()> {
    let mut config: ScenarioConfig = match (&args.config, &args.preset) {
        (Some(path), None) => ScenarioConfig::from_json(&std::fs::read_to_string(path)?)?,
        (None, Some(name)) => runner::preset(name, args.frequency)?,
        (None, None) => {
            return Err(dipole_cma::Error::Config(
                "give either --config <file> or --preset <name>".into(),
            ));
        }
        _ => unreachable!("clap enforces the conflict"),
    };
    config.workers = args.workers.max(1);

    // explicit sweep flags beat the preset's default pairing
    let sweep_plan: Option<(SweepAxis, Vec<f64>)> = match (&args.axis, &args.values) {
        (Some(axis), Some(values)) => Some((axis.parse()?, values.clone())),
        _ => args
            .preset
            .as_deref()
            .and_then(|p| runner::preset_sweep(p, args.frequency)),
    };

    match sweep_plan {
        Some((axis, values)) => {
            if args.verbose {
                eprintln!("sweep {axis} over {} values -> {}", values.len(), args.out.display());
            }
            let report = runner::sweep(&config, axis, &values, Some(&args.out))?;
            if args.verbose {
                for (v, run) in report.values.iter().zip(&report.runs) {
                    let lam1 = run.mode_sets[0].eigenvalues[0];
                    eprintln!("  {axis} = {v:.6e}: isolated λ1 = {lam1:.6e}");
                }
            }
            println!(
                "wrote {} scenario directories and {} summary files under {}",
                report.runs.len(),
                report.written.len(),
                args.out.display()
            );
        }
        None => {
            if args.verbose {
                eprintln!("single scenario -> {}", args.out.display());
            }
            let report = runner::run(&config, Some(&args.out))?;
            println!(
                "wrote {} report files under {}",
                report.written.len(),
                args.out.display()
            );
        }
    }
    Ok(())
}
