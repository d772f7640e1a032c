use std::process::ExitCode;

use anyhow::Result;
use aqrm_cli::commands::{self, write_outputs};
use aqrm_cli::config::{self, ConfigError, PhaseArgs, SweepArgs};
use clap::{Parser, Subcommand};

/// Spectrum of the anisotropic quantum Rabi model from its G-functions,
/// checked against exact diagonalization.
#[derive(Parser)]
#[command(name = "aqrm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest levels along a coupling sweep, exceptional points included.
    Spectrum(SweepArgs),
    /// Degenerate and non-degenerate exceptional points on the low pole lines.
    Exceptional(SweepArgs),
    /// Ground-state parity boundaries in the (r, g) plane.
    PhaseDiagram(PhaseArgs),
    /// Compare the G-function levels with exact diagonalization.
    Validate(SweepArgs),
    /// Exact-diagonalization spectrum along the sweep.
    Ed(SweepArgs),
}

enum Outcome {
    Ok,
    ValidationFailed,
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Spectrum(args) => {
            let cfg = config::resolve_sweep(&args)?;
            let rows = commands::run_spectrum_sweep(&cfg)?;
            let table = commands::spectrum_table(&cfg, &rows);
            let meta = commands::sweep_metadata("spectrum", &cfg, &["spectrum"]);
            write_outputs(&cfg.out_dir, &cfg, &[("spectrum", &table)], &meta)?;
        }
        Command::Exceptional(args) => {
            let cfg = config::resolve_sweep(&args)?;
            let points = commands::run_exceptional_scan(&cfg)?;
            let table = commands::exceptional_table(&points);
            let curves = commands::f_curve_table(&cfg);
            let meta = commands::sweep_metadata("exceptional", &cfg, &["exceptional", "f_curves"]);
            write_outputs(&cfg.out_dir, &cfg, &[("exceptional", &table), ("f_curves", &curves)], &meta)?;
        }
        Command::PhaseDiagram(args) => {
            let cfg = config::resolve_phase(&args)?;
            let records = commands::run_phase_diagram(&cfg)?;
            let table = commands::phase_table(&records);
            write_outputs(&cfg.sweep.out_dir, &cfg.sweep, &[("phase", &table)], &commands::phase_metadata(&cfg))?;
        }
        Command::Validate(args) => {
            let cfg = config::resolve_sweep(&args)?;
            let report = commands::run_validate(&cfg)?;
            let table = commands::validation_table(&cfg, &report);
            let mut meta = commands::sweep_metadata("validate", &cfg, &["validate"]);
            meta["summary"] = serde_json::json!({
                "worst_deviation": report.worst_deviation,
                "tolerance": commands::VALIDATION_TOL,
                "passed": report.passed,
            });
            write_outputs(&cfg.out_dir, &cfg, &[("validate", &table)], &meta)?;
            eprintln!(
                "validate: worst deviation {:.3e} over {} points: {}",
                report.worst_deviation,
                report.rows.len(),
                if report.passed { "pass" } else { "FAIL" }
            );
            if !report.passed {
                return Ok(Outcome::ValidationFailed);
            }
        }
        Command::Ed(args) => {
            let cfg = config::resolve_sweep(&args)?;
            let table = commands::run_ed(&cfg)?;
            let meta = commands::sweep_metadata("ed", &cfg, &["ed"]);
            write_outputs(&cfg.out_dir, &cfg, &[("ed", &table)], &meta)?;
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ValidationFailed) => ExitCode::from(1),
        Err(e) if e.is::<ConfigError>() => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
