//! Hong-Ou-Mandel dip versus single-photon overlap.
//!
//! On the chip the photons enter modes 3 and 4 and coincidences are taken
//! between modes 3 and 5, with every single-qubit gate set to identity.

use std::fmt::Write as _;

use photon_twin_core::optics::{build_chip_unitary, dc_matrix, IDENTITY_GATE_PHASES};
use photon_twin_core::sampler::{hom_curve, visibility};

use super::Context;
use crate::config::HomDevice;
use crate::error::{CliError, Result};
use crate::io::num;

pub(super) fn run(ctx: &mut Context) -> Result<()> {
    let settings = ctx.cfg.hom.clone();
    if settings.points < 2 {
        return Err(CliError::Invalid("hom.points must be at least 2".into()));
    }
    let x = ctx.cfg.x;
    let (u, inputs, outputs) = match settings.device {
        HomDevice::Splitter => (dc_matrix(0.5)?, [0, 1], [0, 1]),
        HomDevice::Chip => {
            let chip = ctx
                .cfg
                .resolve_chip(&mut ctx.rng)?
                .with_tunable_phases(IDENTITY_GATE_PHASES);
            (build_chip_unitary(&chip)?, [2, 3], [2, 4])
        }
    };
    let overlaps: Vec<f64> = (0..settings.points)
        .map(|k| x * k as f64 / (settings.points - 1) as f64)
        .collect();
    let curve = hom_curve(&u, inputs, outputs, &overlaps)?;
    let mut s = String::from("overlap,coincidence_probability\n");
    for (o, p) in overlaps.iter().zip(&curve) {
        writeln!(s, "{},{}", num(*o), num(*p)).unwrap();
    }
    ctx.write("hom_curve.csv", &s)?;
    let v = visibility(&curve)?;
    ctx.note("x", x);
    ctx.note("visibility", v);
    ctx.note("distinguishable_coincidence", curve[0]);
    ctx.note("overlap_coincidence", curve[curve.len() - 1]);
    Ok(())
}
