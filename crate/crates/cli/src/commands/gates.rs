//! Fidelity histograms of the eight single-qubit gates.

use std::fmt::Write as _;

use photon_twin_core::calibration::Dac;
use photon_twin_core::gates::{chip_gate_models, fidelity_histogram, GateKind};

use super::Context;
use crate::error::{CliError, Result};
use crate::io::{num, read_crosstalk, render_histogram};

pub(super) fn run(ctx: &mut Context) -> Result<()> {
    let settings = ctx.cfg.gates.clone();
    if settings.samples == 0 {
        return Err(CliError::Invalid("gates.samples must be at least 1".into()));
    }
    let model = read_crosstalk(settings.crosstalk.as_deref())?;
    let chip = ctx.cfg.resolve_chip(&mut ctx.rng)?;
    let dac = Dac {
        bits: Some(settings.dac_bits),
        full_scale: settings.full_scale,
    };
    let mut table = String::from("gate,kind,mean,std,min\n");
    let mut worst = f64::INFINITY;
    for (name, gate) in chip_gate_models(&chip, &model, dac)? {
        let h = fidelity_histogram(&gate, settings.samples, &mut ctx.rng)?;
        ctx.write(&format!("gate_{name}.csv"), &render_histogram(&h))?;
        let kind = match gate.kind {
            GateKind::Rx => "Rx",
            GateKind::Rz => "Rz",
        };
        writeln!(table, "{name},{kind},{},{},{}", num(h.mean), num(h.std), num(h.min)).unwrap();
        ctx.note(&format!("{name}_mean"), h.mean);
        worst = worst.min(h.min);
    }
    ctx.write("gates_table.csv", &table)?;
    ctx.note("min_fidelity", worst);
    Ok(())
}
