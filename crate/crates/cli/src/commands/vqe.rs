//! Variational eigensolver over a table of Hamiltonians.

use std::fmt::Write as _;

use photon_twin_core::optimize::SpsaOptions;
use photon_twin_core::sampler::Overlap;
use photon_twin_core::vqe::{energy_oracle, run_vqe, VqeConfig, VqeMode, VqeOptimizer, VqeResult};

use super::Context;
use crate::config::{OptimizerSetting, VqeModeSetting};
use crate::error::Result;
use crate::io::{num, read_hamiltonian_table};

fn render_trace(r: &VqeResult) -> String {
    let mut s = String::from(
        "iteration,phi1,phi2,phi3,phi4,energy,C1_hh,C2_hh,C3_hh,C4_hh,C1_dd,C2_dd,C3_dd,C4_dd\n",
    );
    for (k, step) in r.trace.iter().enumerate() {
        let p = step.params.phases();
        write!(s, "{k},{},{},{},{},{}", num(p[0]), num(p[1]), num(p[2]), num(p[3]), num(step.energy)).unwrap();
        for v in step.hh.iter().chain(&step.dd) {
            write!(s, ",{}", num(*v)).unwrap();
        }
        s.push('\n');
    }
    s
}

pub(super) fn run(ctx: &mut Context) -> Result<()> {
    let settings = ctx.cfg.vqe.clone();
    let table = match ctx.ingest {
        Some(path) => read_hamiltonian_table(Some(path))?,
        None => read_hamiltonian_table(settings.hamiltonian.as_deref())?,
    };
    let chip = ctx.cfg.resolve_chip(&mut ctx.rng)?;
    let mode = match settings.mode {
        VqeModeSetting::Exact => VqeMode::Exact,
        VqeModeSetting::Shots => VqeMode::Shots(ctx.cfg.shots.unwrap_or(2000.0)),
    };
    let optimizer = match settings.optimizer {
        OptimizerSetting::NelderMead => VqeOptimizer::nelder_mead(settings.restarts, settings.max_evaluations),
        OptimizerSetting::Spsa => VqeOptimizer::Spsa(SpsaOptions {
            iterations: settings.iterations,
            ..SpsaOptions::default()
        }),
    };
    let config = VqeConfig {
        mode,
        overlap: Overlap::new(ctx.cfg.x)?,
        optimizer,
        ..VqeConfig::default()
    };
    let mut summary = String::from("distance_angstrom,E_vqe,E_oracle,gap,evaluations,stagnated\n");
    for row in &table {
        let r = run_vqe(&chip, &row.hamiltonian, &config, &mut ctx.rng)?;
        let oracle = energy_oracle(&row.hamiltonian);
        let gap = (r.energy - oracle).abs();
        ctx.write(&format!("vqe_trace_{}A.csv", row.distance), &render_trace(&r))?;
        writeln!(
            summary,
            "{},{},{},{},{},{}",
            num(row.distance),
            num(r.energy),
            num(oracle),
            num(gap),
            r.trace.len(),
            r.stagnated
        )
        .unwrap();
        if r.stagnated {
            ctx.warn(format!("optimizer stagnated at {} Å", row.distance));
        }
        ctx.note(&format!("gap_{}A", row.distance), gap);
        ctx.note(&format!("energy_{}A", row.distance), r.energy);
    }
    ctx.write("vqe_energies.csv", &summary)?;
    Ok(())
}
