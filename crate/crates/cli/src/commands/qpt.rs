//! Quantum process tomography on measured or simulated counts.

use std::fmt::Write as _;

use photon_twin_core::sampler::Overlap;
use photon_twin_core::tomography::{
    chi_fidelity, estimate_efficiencies, ideal_cnot_chi, run_qpt_simulation,
    simulate_efficiency_routing, standard_configs, EfficiencyVector, MleOptions, MleProblem,
    MleRun, QptSimulation,
};
use rayon::prelude::*;

use super::Context;
use crate::error::Result;
use crate::io::{num, read_dataset, render_chi, render_dataset};

pub(super) fn run(ctx: &mut Context) -> Result<()> {
    let settings = ctx.cfg.qpt.clone();
    let (data, eff) = match ctx.ingest {
        Some(path) => {
            let file = read_dataset(path)?;
            for w in file.warnings {
                ctx.warn(w);
            }
            ctx.note("source", "ingest");
            (file.dataset, EfficiencyVector::new(settings.efficiencies)?)
        }
        None => {
            let chip = ctx.cfg.resolve_chip(&mut ctx.rng)?;
            let sim = QptSimulation {
                overlap: Overlap::new(ctx.cfg.x)?,
                shots: ctx.cfg.shots.unwrap_or(2000.0),
                phase_bias: ctx.cfg.phase_bias,
                detector_efficiency: settings.detector_efficiency,
            };
            let data = run_qpt_simulation(&chip, &standard_configs(), &sim, &mut ctx.rng)?;
            let eff = if settings.estimate_efficiencies {
                estimate_efficiencies(&simulate_efficiency_routing(&chip, &sim, &mut ctx.rng)?)?
            } else {
                EfficiencyVector::new(settings.efficiencies)?
            };
            ctx.note("source", "simulation");
            ctx.note("shots_per_config", sim.shots);
            ctx.note("x", ctx.cfg.x);
            (data, eff)
        }
    };

    let problem = MleProblem::new(&data, &eff)?;
    let opts = MleOptions {
        starts: settings.starts,
        seed: ctx.cfg.seed,
        ..MleOptions::default()
    };
    let runs: Vec<MleRun> = MleProblem::start_points(&opts)
        .into_par_iter()
        .enumerate()
        .map(|(s, t0)| problem.solve_from(s, &t0, &opts.lbfgs))
        .collect();
    let result = problem.finish(&runs)?;
    let fidelity = chi_fidelity(&result.chi, &ideal_cnot_chi())?;
    if !result.converged {
        ctx.warn(format!(
            "least-squares fit stopped with gradient norm {:e}",
            result.gradient_norm
        ));
    }

    let (re, im, eig) = render_chi(&result.chi);
    ctx.write("qpt_counts.csv", &render_dataset(&data))?;
    ctx.write("chi_real.csv", &re)?;
    ctx.write("chi_imag.csv", &im)?;
    ctx.write("chi_eigenvalues.csv", &eig)?;
    let mut res = String::from("config,r1,r2,r3,r4\n");
    for (config, r) in &result.residuals {
        writeln!(res, "{config},{},{},{},{}", num(r[0]), num(r[1]), num(r[2]), num(r[3])).unwrap();
    }
    ctx.write("qpt_residuals.csv", &res)?;

    let e = eff.values();
    ctx.note("efficiencies", format!("{} {} {} {}", e[0], e[1], e[2], e[3]));
    ctx.note("fidelity", fidelity);
    ctx.note("cost", result.cost);
    ctx.note("converged", result.converged);
    ctx.note("iterations", result.iterations);
    ctx.note("best_start", result.start);
    Ok(())
}
