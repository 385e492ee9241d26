//! Fidelity of single-qubit gates that the hardware can actually set,
//! given coupler imperfections and DAC resolution.

use alloc::vec::Vec;

use rand::Rng;

use crate::calibration::{CrossTalkModel, Dac};
use crate::error::{bail, Result};
use crate::linalg::CMatrix;
use crate::math::{self, sqrt, TAU};
use crate::optics::{fidelity, mzi_matrix, phase_matrix, ChipParameters};

/// Phase versus current of one heater, `φ(I) = φ₀ + a·I²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationCurve {
    pub phi0: f64,
    /// rad/mA²
    pub slope: f64,
}

impl CalibrationCurve {
    pub fn new(phi0: f64, slope: f64) -> Result<Self> {
        if !(slope > 0.0) || !slope.is_finite() || !phi0.is_finite() {
            bail!(Domain, "calibration curve needs a positive slope, got {slope}");
        }
        Ok(Self { phi0, slope })
    }

    /// Diagonal response of heater `heater` (1-based) in a cross-talk model.
    pub fn from_model(model: &CrossTalkModel, heater: usize) -> Result<Self> {
        if !(1..=8).contains(&heater) {
            bail!(Domain, "heater index {heater} outside 1..=8");
        }
        Self::new(model.phi0()[heater - 1], model.a()[heater - 1][heater - 1])
    }

    pub fn phase(&self, current: f64) -> f64 {
        self.phi0 + self.slope * current * current
    }

    /// Smallest current whose phase equals `target` modulo 2π.
    pub fn current_for(&self, target: f64) -> f64 {
        sqrt(math::wrap_tau(target - self.phi0) / self.slope)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    /// Mach-Zehnder interferometer.
    Rx,
    /// Single phase shifter.
    Rz,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateModel {
    pub kind: GateKind,
    /// Coupler reflectivities; unused for `Rz`.
    pub r1: f64,
    pub r2: f64,
    pub curve: CalibrationCurve,
    pub dac: Dac,
}

impl GateModel {
    pub fn rx(r1: f64, r2: f64, curve: CalibrationCurve, dac: Dac) -> Result<Self> {
        if !(0.0..=1.0).contains(&r1) || !(0.0..=1.0).contains(&r2) {
            bail!(Domain, "reflectivities ({r1}, {r2}) outside [0, 1]");
        }
        Ok(Self {
            kind: GateKind::Rx,
            r1,
            r2,
            curve,
            dac,
        })
    }

    pub fn rz(curve: CalibrationCurve, dac: Dac) -> Self {
        Self {
            kind: GateKind::Rz,
            r1: 0.5,
            r2: 0.5,
            curve,
            dac,
        }
    }

    /// The gate as designed: balanced couplers and the exact phase.
    pub fn target_unitary(&self, phi: f64) -> CMatrix {
        match self.kind {
            GateKind::Rx => mzi_matrix(0.5, 0.5, phi).expect("balanced couplers"),
            GateKind::Rz => phase_matrix(phi),
        }
    }

    fn realized_unitary(&self, phi: f64) -> Result<CMatrix> {
        match self.kind {
            GateKind::Rx => mzi_matrix(self.r1, self.r2, phi),
            GateKind::Rz => Ok(phase_matrix(phi)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealizedGate {
    pub unitary: CMatrix,
    pub target_phase: f64,
    pub realized_phase: f64,
    /// Quantized drive current (mA).
    pub current: f64,
    pub fidelity: f64,
}

/// Sets the closest phase the DAC can reach and compares the resulting gate
/// with the ideal one.
pub fn realizable_gate(model: &GateModel, target: f64) -> Result<RealizedGate> {
    if !(0.0..TAU).contains(&target) {
        bail!(Domain, "target phase {target} outside [0, 2π)");
    }
    let current = model.curve.current_for(target);
    if current > model.dac.full_scale {
        bail!(
            Infeasible,
            "phase {target} needs {current:.3} mA, above the {} mA full scale",
            model.dac.full_scale
        );
    }
    let (current, _) = model.dac.snap(current);
    let realized = model.curve.phase(current);
    let unitary = model.realized_unitary(realized)?;
    let f = fidelity(&unitary, &model.target_unitary(target))?;
    Ok(RealizedGate {
        unitary,
        target_phase: target,
        realized_phase: realized,
        current,
        fidelity: f,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateSample {
    pub target_phase: f64,
    pub realized_phase: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityHistogram {
    pub samples: Vec<GateSample>,
    pub mean: f64,
    /// Sample standard deviation; zero for a single sample.
    pub std: f64,
    pub min: f64,
}

/// Fidelities for `n` targets drawn uniformly from `[0, 2π)`.
pub fn fidelity_histogram<R: Rng + ?Sized>(
    model: &GateModel,
    n: usize,
    rng: &mut R,
) -> Result<FidelityHistogram> {
    if n == 0 {
        bail!(Domain, "histogram needs at least one sample");
    }
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.random_range(0.0..TAU);
        let g = realizable_gate(model, target)?;
        samples.push(GateSample {
            target_phase: target,
            realized_phase: g.realized_phase,
            fidelity: g.fidelity,
        });
    }
    let mean = samples.iter().map(|s| s.fidelity).sum::<f64>() / n as f64;
    let var = if n > 1 {
        samples
            .iter()
            .map(|s| (s.fidelity - mean) * (s.fidelity - mean))
            .sum::<f64>()
            / (n - 1) as f64
    } else {
        0.0
    };
    let min = samples.iter().map(|s| s.fidelity).fold(f64::INFINITY, f64::min);
    Ok(FidelityHistogram {
        samples,
        mean,
        std: sqrt(var),
        min,
    })
}

/// Gate name, kind, heater (1-based) and coupler ratio indices (1-based)
/// for the eight single-qubit gates of the chip.
pub const CHIP_GATES: [(&str, GateKind, usize, (usize, usize)); 8] = [
    ("Rx1", GateKind::Rx, 1, (1, 2)),
    ("Rz1", GateKind::Rz, 2, (0, 0)),
    ("Rx2", GateKind::Rx, 3, (3, 4)),
    ("Rz2", GateKind::Rz, 4, (0, 0)),
    ("Rz3", GateKind::Rz, 5, (0, 0)),
    ("Rx3", GateKind::Rx, 6, (10, 11)),
    ("Rz4", GateKind::Rz, 7, (0, 0)),
    ("Rx4", GateKind::Rx, 8, (12, 13)),
];

/// Models of every single-qubit gate on a chip.
pub fn chip_gate_models(
    chip: &ChipParameters,
    model: &CrossTalkModel,
    dac: Dac,
) -> Result<Vec<(&'static str, GateModel)>> {
    CHIP_GATES
        .iter()
        .map(|&(name, kind, heater, (a, b))| {
            let curve = CalibrationCurve::from_model(model, heater)?;
            let gate = match kind {
                GateKind::Rx => GateModel::rx(chip.ratio(a), chip.ratio(b), curve, dac)?,
                GateKind::Rz => GateModel::rz(curve, dac),
            };
            Ok((name, gate))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::cos;
    use crate::seeded_rng;

    fn curve() -> CalibrationCurve {
        CalibrationCurve::from_model(&CrossTalkModel::reference(), 1).unwrap()
    }

    #[test]
    fn ideal_hardware_is_exact() {
        let model = GateModel::rx(0.5, 0.5, curve(), Dac::continuous(20.0)).unwrap();
        for &t in &[0.0, 1.0, 3.0, 6.0] {
            let g = realizable_gate(&model, t).unwrap();
            assert!((g.fidelity - 1.0).abs() < 1e-12);
            assert!(g.unitary.max_abs_diff(&model.target_unitary(g.realized_phase)) < 1e-15);
        }
        let h = fidelity_histogram(&model, 50, &mut seeded_rng(1)).unwrap();
        assert!(h.samples.iter().all(|s| (s.fidelity - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rz_quantization_error_is_bounded() {
        let dac = Dac::default();
        let c = curve();
        let model = GateModel::rz(c, dac);
        let step = dac.step().unwrap();
        let i_max = sqrt(TAU / c.slope) + step;
        let bound = 2.0 * c.slope * i_max * step / 2.0 + c.slope * step * step / 4.0;
        let mut rng = seeded_rng(4);
        for _ in 0..200 {
            let t = rng.random_range(0.0..TAU);
            let g = realizable_gate(&model, t).unwrap();
            let err = math::wrap_pi(g.realized_phase - t);
            assert!(err.abs() <= bound + 1e-12);
            // |1 + e^{iδ}|²/4 = cos²(δ/2) ≈ 1 − δ²/4
            let c2 = cos(err / 2.0);
            assert!((g.fidelity - c2 * c2).abs() < 1e-12);
        }
    }

    #[test]
    fn unbalanced_rx_fidelity() {
        let model = GateModel::rx(0.45, 0.45, curve(), Dac::continuous(20.0)).unwrap();
        let g = realizable_gate(&model, 1.3).unwrap();
        let ue = mzi_matrix(0.45, 0.45, g.realized_phase).unwrap();
        let ut = mzi_matrix(0.5, 0.5, 1.3).unwrap();
        // |Tr(Ue†Ut)|² / (Tr(Ue†Ue)·Tr(Ut†Ut)) with both traces equal to 2
        let tr = (&ue.adjoint() * &ut).trace();
        assert!((g.fidelity - tr.norm_sqr() / 4.0).abs() < 1e-12);
        assert!(g.fidelity < 1.0);
    }

    #[test]
    fn rejects_bad_targets() {
        let model = GateModel::rz(curve(), Dac::default());
        assert!(realizable_gate(&model, -0.1).is_err());
        assert!(realizable_gate(&model, TAU).is_err());
        let tiny = GateModel::rz(curve(), Dac::continuous(1.0));
        assert!(matches!(realizable_gate(&tiny, 5.0), Err(crate::Error::Infeasible(_))));
        assert!(fidelity_histogram(&model, 0, &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn histogram_statistics() {
        let model = GateModel::rx(0.47, 0.52, curve(), Dac::default()).unwrap();
        let h = fidelity_histogram(&model, 100, &mut seeded_rng(3)).unwrap();
        let again = fidelity_histogram(&model, 100, &mut seeded_rng(3)).unwrap();
        assert_eq!(h, again);
        let n = h.samples.len() as f64;
        let mean = h.samples.iter().map(|s| s.fidelity).sum::<f64>() / n;
        assert!((mean - h.mean).abs() < 1e-15);
        assert!(h.min <= h.mean && h.std >= 0.0);
        let one = fidelity_histogram(&model, 1, &mut seeded_rng(3)).unwrap();
        assert_eq!(one.std, 0.0);
    }

    #[test]
    fn chip_gate_table() {
        let chip = ChipParameters::ideal();
        let gates = chip_gate_models(&chip, &CrossTalkModel::reference(), Dac::default()).unwrap();
        assert_eq!(gates.len(), 8);
        assert_eq!(gates.iter().filter(|(_, g)| g.kind == GateKind::Rx).count(), 4);
        assert!(gates.iter().all(|(_, g)| g.r1 == 0.5 && g.r2 == 0.5));
    }
}
