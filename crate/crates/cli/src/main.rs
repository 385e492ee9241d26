use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use photon_twin::{run, Experiment, ExperimentConfig, RunOptions};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Characterize,
    Calibrate,
    Hom,
    Qpt,
    Gates,
    Vqe,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Characterize => Experiment::Characterize,
            Command::Calibrate => Experiment::Calibrate,
            Command::Hom => Experiment::Hom,
            Command::Qpt => Experiment::Qpt,
            Command::Gates => Experiment::Gates,
            Command::Vqe => Experiment::Vqe,
        }
    }
}

/// Digital twin of a two-qubit linear-optical processor.
#[derive(Debug, Parser)]
#[command(name = "photon-twin", version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    command: Command,
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// External data: counts (qpt), a sweep CSV (calibrate) or a
    /// Hamiltonian table (vqe).
    #[arg(long)]
    ingest: Option<PathBuf>,
    /// Simulate the data (the default when nothing is ingested).
    #[arg(long)]
    simulate: bool,
    /// Overrides the configured shot count.
    #[arg(long)]
    shots: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let mut config = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(e.exit_code() as u8);
            }
        },
        None => ExperimentConfig::from_toml("").expect("empty configuration parses"),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(shots) = cli.shots {
        config.shots = Some(shots);
    }
    let opts = RunOptions {
        experiment: cli.command.into(),
        config,
        ingest: cli.ingest,
        simulate: cli.simulate,
        out: cli.out,
    };
    match run(&opts) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for (k, v) in &report.summary {
                println!("{k}: {v}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
