mod calibrate;
mod characterize;
mod gates;
mod hom;
mod qpt;
mod vqe;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use photon_twin_core::{seeded_rng, Rng};

use crate::config::{sha256_hex, Experiment, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::io::{Header, OutputDir};
use crate::{Report, RunOptions};

/// State shared by one command invocation.
pub(crate) struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub ingest: Option<&'a Path>,
    pub rng: Rng,
    pub out: OutputDir,
    pub report: Report,
}

/// Summary value formatting; floats keep full round-trip precision.
pub(crate) trait NoteValue {
    fn render(&self) -> String;
}

impl NoteValue for f64 {
    fn render(&self) -> String {
        crate::io::num(*self)
    }
}

macro_rules! display_note {
    ($($t:ty),*) => {$(
        impl NoteValue for $t {
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
display_note!(usize, bool, &str, String);

impl Context<'_> {
    pub fn note(&mut self, key: &str, value: impl NoteValue) {
        self.report.summary.push((key.to_string(), value.render()));
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.report.warnings.push(message.into());
    }

    pub fn write(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        self.out.write(name, body)
    }

    /// Writes the collected summary as `key,value` rows.
    fn write_summary(&mut self, name: &str) -> Result<()> {
        let mut s = String::from("key,value\n");
        for (k, v) in &self.report.summary {
            writeln!(s, "{k},{v}").unwrap();
        }
        self.out.write(name, &s)?;
        Ok(())
    }
}

pub fn run(opts: &RunOptions) -> Result<crate::Report> {
    let cfg = &opts.config;
    cfg.validate()?;
    if opts.simulate && opts.ingest.is_some() {
        return Err(CliError::Invalid("--simulate and --ingest are mutually exclusive".into()));
    }
    let mut extra = Vec::new();
    if let Some(path) = &opts.ingest {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        extra.push(("ingest_sha256".to_string(), sha256_hex(&bytes)));
    }
    let header = Header {
        command: opts.experiment.name().to_string(),
        config_sha256: cfg.hash()?,
        seed: cfg.seed,
        extra,
    };
    let mut ctx = Context {
        cfg,
        ingest: opts.ingest.as_deref(),
        rng: seeded_rng(cfg.seed),
        out: OutputDir::create(&opts.out, header)?,
        report: Report::default(),
    };
    let summary_name = format!("{}_summary.csv", opts.experiment.name());
    match opts.experiment {
        Experiment::Characterize => characterize::run(&mut ctx)?,
        Experiment::Calibrate => calibrate::run(&mut ctx)?,
        Experiment::Hom => hom::run(&mut ctx)?,
        Experiment::Qpt => qpt::run(&mut ctx)?,
        Experiment::Gates => gates::run(&mut ctx)?,
        Experiment::Vqe => vqe::run(&mut ctx)?,
    }
    ctx.write_summary(&summary_name)?;
    ctx.report.files = ctx.out.written().to_vec();
    Ok(ctx.report)
}
