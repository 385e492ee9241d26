//! Heater calibration: fringe sweeps for every heater and cross-talk pair,
//! a fitted cross-talk model, and the drive currents for the configured
//! phases.
//!
//! A cross-talk sweep drives heater `j` while heater `k` sits at a bias of
//! about π/2. The fit only sees `|a_kj|`; the sign follows from whether the
//! fitted offset lands near `+bias` or `−bias`.

use std::fmt::Write as _;

use photon_twin_core::calibration::{
    bc_from_reflectivities, current_grid, fit_sweep, quantize, simulate_sweep, CrossTalkModel,
    Dac, FringeParams, SweepFit, CROSSTALK_PAIRS, HEATERS,
};
use photon_twin_core::gates::{GateKind, CHIP_GATES};
use photon_twin_core::optics::ChipParameters;
use photon_twin_core::Rng;

use super::Context;
use crate::error::{CliError, Result};
use crate::io::{num, parse_sweep, read_crosstalk, render_crosstalk};

fn wrap_pi(x: f64) -> f64 {
    let r = x.rem_euclid(std::f64::consts::TAU);
    if r > std::f64::consts::PI {
        r - std::f64::consts::TAU
    } else {
        r
    }
}

/// Fringe contrast of the interferometer that heater `k` (1-based) sits in.
fn fringe_bc(chip: &ChipParameters, heater: usize) -> Result<(f64, f64)> {
    let (_, kind, _, (a, b)) = CHIP_GATES
        .iter()
        .find(|g| g.2 == heater)
        .expect("every heater drives a gate");
    let (r1, r2) = match kind {
        GateKind::Rx => (chip.ratio(*a), chip.ratio(*b)),
        GateKind::Rz => (0.5, 0.5),
    };
    Ok(bc_from_reflectivities(r1, r2)?)
}

fn fit_row(driven: usize, observed: usize, fit: &SweepFit) -> String {
    let p = fit.params;
    format!(
        "{driven},{observed},{},{},{},{},{},{}\n",
        num(p.b),
        num(p.c),
        num(p.phi0),
        num(p.alpha),
        num(fit.residual),
        fit.degenerate
    )
}

pub(super) fn run(ctx: &mut Context) -> Result<()> {
    let settings = ctx.cfg.calibrate.clone();
    if let Some(path) = ctx.ingest {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let sweep = parse_sweep(&text, path)?;
        let fit = fit_sweep(&sweep)?;
        let mut s = String::from("driven,observed,B,C,phi0,alpha,residual,degenerate\n");
        s.push_str(&fit_row(0, 0, &fit));
        ctx.write("calibration_fits.csv", &s)?;
        let p = fit.params;
        ctx.note("B", p.b);
        ctx.note("C", p.c);
        ctx.note("phi0", p.phi0);
        ctx.note("alpha", p.alpha);
        ctx.note("residual", fit.residual);
        return Ok(());
    }
    if !(settings.step > 0.0) || !(settings.max_current > settings.step) {
        return Err(CliError::Invalid("calibrate needs 0 < step < max_current".into()));
    }
    if !(settings.noise >= 0.0) {
        return Err(CliError::Invalid("calibrate.noise must be non-negative".into()));
    }
    let truth = read_crosstalk(settings.crosstalk.as_deref())?;
    let chip = ctx.cfg.resolve_chip(&mut ctx.rng)?;
    let currents = current_grid(settings.max_current, settings.step);
    let noise = settings.noise;
    let mut sweep_csv = String::from("driven,observed,current,power\n");
    let mut fits_csv = String::from("driven,observed,B,C,phi0,alpha,residual,degenerate\n");
    let mut measure = |rng: &mut Rng, driven: usize, observed: usize, params: FringeParams| {
        let sweep = if noise > 0.0 {
            simulate_sweep(&params, &currents, Some((noise, rng)))?
        } else {
            simulate_sweep::<Rng>(&params, &currents, None)?
        };
        for (i, p) in sweep.currents().iter().zip(sweep.powers()) {
            writeln!(sweep_csv, "{driven},{observed},{},{}", num(*i), num(*p)).unwrap();
        }
        let fit = fit_sweep(&sweep)?;
        fits_csv.push_str(&fit_row(driven, observed, &fit));
        Ok::<_, CliError>(fit)
    };

    let mut a = [[0.0; HEATERS]; HEATERS];
    let mut phi0 = [0.0; HEATERS];
    for k in 0..HEATERS {
        let (b, c) = fringe_bc(&chip, k + 1)?;
        let params = FringeParams {
            b,
            c,
            phi0: truth.phi0()[k],
            alpha: truth.a()[k][k],
        };
        let fit = measure(&mut ctx.rng, k + 1, k + 1, params)?;
        a[k][k] = fit.params.alpha;
        phi0[k] = fit.params.phi0;
    }
    for &(p, q) in &CROSSTALK_PAIRS {
        for (k, j) in [(p - 1, q - 1), (q - 1, p - 1)] {
            let bias_current = (std::f64::consts::FRAC_PI_2 / a[k][k]).sqrt();
            if bias_current > settings.max_current {
                return Err(photon_twin_core::Error::Infeasible(format!(
                    "heater {} needs {bias_current:.2} mA for its bias point",
                    k + 1
                ))
                .into());
            }
            let (b, c) = fringe_bc(&chip, k + 1)?;
            let offset = truth.phi0()[k] + truth.a()[k][k] * bias_current * bias_current;
            let params = FringeParams {
                b,
                c,
                phi0: offset,
                alpha: truth.a()[k][j],
            };
            let fit = measure(&mut ctx.rng, j + 1, k + 1, params)?;
            let expected = phi0[k] + a[k][k] * bias_current * bias_current;
            let same = wrap_pi(fit.params.phi0 - expected).abs();
            let flipped = wrap_pi(fit.params.phi0 + expected).abs();
            a[k][j] = if same <= flipped { fit.params.alpha } else { -fit.params.alpha };
        }
    }
    let fitted = CrossTalkModel::new(a, phi0)?;

    let dac = Dac {
        bits: Some(settings.dac_bits),
        full_scale: settings.full_scale,
    };
    let target = chip.tunable_phases.map(|p| p.rem_euclid(std::f64::consts::TAU));
    let solved = fitted.solve_currents(&target, dac)?;
    let q = quantize(&solved);
    let realized = truth.apply_crosstalk(q.currents.currents());
    let mut currents_csv =
        String::from("heater,target_phase,current,quantized_current,realized_phase,phase_error\n");
    let mut worst: f64 = 0.0;
    for k in 0..HEATERS {
        let err = wrap_pi(realized[k] - target[k]);
        worst = worst.max(err.abs());
        writeln!(
            currents_csv,
            "{},{},{},{},{},{}",
            k + 1,
            num(target[k]),
            num(solved.currents()[k]),
            num(q.currents.currents()[k]),
            num(realized[k]),
            num(err)
        )
        .unwrap();
    }

    let mut max_a_error: f64 = 0.0;
    for k in 0..HEATERS {
        for j in 0..HEATERS {
            max_a_error = max_a_error.max((fitted.a()[k][j] - truth.a()[k][j]).abs());
        }
    }
    let max_phi0_error = (0..HEATERS)
        .map(|k| wrap_pi(fitted.phi0()[k] - truth.phi0()[k]).abs())
        .fold(0.0, f64::max);

    ctx.write("calibration_sweeps.csv", &sweep_csv)?;
    ctx.write("calibration_fits.csv", &fits_csv)?;
    ctx.write("crosstalk_fit.txt", &render_crosstalk(&fitted))?;
    ctx.write("currents.csv", &currents_csv)?;
    ctx.note("max_a_error_rad_per_mA2", max_a_error);
    ctx.note("max_phi0_error_rad", max_phi0_error);
    ctx.note("max_phase_error_rad", worst);
    ctx.note("dac_clamped", q.clamped);
    Ok(())
}
