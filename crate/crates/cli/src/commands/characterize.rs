//! Classical characterization: inject light into each input port, record
//! the six output powers, and recover `|U|` by Sinkhorn-Knopp scaling.

use photon_twin_core::linalg::c64;
use photon_twin_core::optics::{build_chip_unitary, fidelity, sinkhorn_scale, ChipParameters, MODES};
use photon_twin_core::{CMatrix, RMatrix};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::Context;
use crate::error::{CliError, Result};
use crate::io::render_matrix;

fn moduli(m: &RMatrix) -> RMatrix {
    RMatrix::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)].sqrt())
}

fn as_complex(m: &RMatrix) -> CMatrix {
    CMatrix::from_fn(m.rows(), m.cols(), |r, c| c64(m[(r, c)], 0.0))
}

pub(super) fn run(ctx: &mut Context) -> Result<()> {
    let settings = ctx.cfg.characterize.clone();
    if !(0.0..1.0).contains(&settings.loss_spread) {
        return Err(CliError::Invalid("characterize.loss_spread must lie in [0, 1)".into()));
    }
    if !(settings.power_noise >= 0.0) {
        return Err(CliError::Invalid("characterize.power_noise must be non-negative".into()));
    }
    let chip = ctx.cfg.resolve_chip(&mut ctx.rng)?;
    let u = build_chip_unitary(&chip)?;

    let port = |rng: &mut photon_twin_core::Rng| -> [f64; MODES] {
        std::array::from_fn(|_| {
            if settings.loss_spread > 0.0 {
                rng.random_range(1.0 - settings.loss_spread..=1.0)
            } else {
                1.0
            }
        })
    };
    let eta_in = port(&mut ctx.rng);
    let eta_out = port(&mut ctx.rng);
    let noise = Normal::new(0.0, settings.power_noise).expect("validated above");
    let rng = &mut ctx.rng;
    let powers = RMatrix::from_fn(MODES, MODES, |o, i| {
        let ideal = eta_in[i] * eta_out[o] * u[(o, i)].norm_sqr();
        let jitter = if settings.power_noise > 0.0 { noise.sample(rng) } else { 0.0 };
        (ideal * (1.0 + jitter)).max(0.0)
    });

    let scaled = sinkhorn_scale(&powers)?;
    let estimate = moduli(&scaled.matrix);
    let design = ChipParameters::ideal().with_tunable_phases(chip.tunable_phases);
    let u_ideal = build_chip_unitary(&design)?;
    let reference = RMatrix::from_fn(MODES, MODES, |r, c| u_ideal[(r, c)].norm());
    let f = fidelity(&as_complex(&estimate), &as_complex(&reference))?;

    ctx.write("power_matrix.csv", &render_matrix(&powers, "output", "in"))?;
    ctx.write("moduli.csv", &render_matrix(&estimate, "output", "in"))?;
    ctx.write("ideal_moduli.csv", &render_matrix(&reference, "output", "in"))?;
    ctx.note("fidelity", f);
    ctx.note("sinkhorn_iterations", scaled.iterations);
    Ok(())
}
