use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use relhartree2d::cli_io::{parse_probe, run_command, Command, Overrides};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sub {
    Simulate,
    Linear,
    Scatter,
    SweepGamma,
    Oracle,
}

/// Semi-relativistic Hartree simulator with modified-scattering diagnostics.
#[derive(Parser, Debug)]
#[command(name = "relhartree2d", version)]
struct Cli {
    #[arg(value_enum)]
    command: Sub,
    /// Run configuration (dotted `section.key = value` lines)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides outputs.directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Probe frequency "xi1,xi2"; repeatable, replaces scattering.probe_xis
    #[arg(long)]
    probe: Vec<String>,
    /// Track the phase correction on every lattice frequency
    #[arg(long)]
    full_lattice: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let probes = match cli.probe.iter().map(|p| parse_probe(p)).collect() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let overrides = Overrides {
        out: cli.out,
        probes,
        full_lattice: cli.full_lattice,
    };
    let cmd = match cli.command {
        Sub::Simulate => Command::Simulate,
        Sub::Linear => Command::Linear,
        Sub::Scatter => Command::Scatter,
        Sub::SweepGamma => Command::SweepGamma,
        Sub::Oracle => Command::Oracle,
    };
    match run_command(cmd, &cli.config, &overrides) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
