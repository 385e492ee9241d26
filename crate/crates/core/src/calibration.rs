//! Thermo-optic phase shifters: cross-talk model, current solving, DAC
//! quantization and fringe fitting of calibration sweeps.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{bail, Result};
use crate::linalg::solve_real;
use crate::math::{self, cos, floor, sin, sqrt, PI, TAU};
use crate::optimize::{levenberg_marquardt, LmOptions};

pub const HEATERS: usize = 8;

/// Heater pairs that share a thermal neighbourhood (1-based indices).
pub const CROSSTALK_PAIRS: [(usize, usize); 4] = [(1, 3), (2, 4), (5, 7), (6, 8)];

/// `φ = Φ₀ + A·I²` with `A` in rad/mA² and currents in mA.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossTalkModel {
    a: [[f64; HEATERS]; HEATERS],
    phi0: [f64; HEATERS],
}

fn coupled(i: usize, j: usize) -> bool {
    i == j
        || CROSSTALK_PAIRS
            .iter()
            .any(|&(p, q)| (p - 1, q - 1) == (i, j) || (q - 1, p - 1) == (i, j))
}

impl CrossTalkModel {
    pub fn new(a: [[f64; HEATERS]; HEATERS], phi0: [f64; HEATERS]) -> Result<Self> {
        for i in 0..HEATERS {
            if !(a[i][i] > 0.0) {
                bail!(Domain, "diagonal coefficient a[{}][{}] = {} must be positive", i + 1, i + 1, a[i][i]);
            }
            for j in 0..HEATERS {
                if !a[i][j].is_finite() {
                    bail!(Domain, "coefficient a[{}][{}] is not finite", i + 1, j + 1);
                }
                if a[i][j] != 0.0 && !coupled(i, j) {
                    bail!(
                        Domain,
                        "heaters {} and {} are not thermal neighbours but a = {}",
                        i + 1,
                        j + 1,
                        a[i][j]
                    );
                }
            }
        }
        if phi0.iter().any(|p| !p.is_finite()) {
            bail!(Domain, "initial phases must be finite");
        }
        Ok(Self { a, phi0 })
    }

    /// The calibrated chip: coefficients in 10⁻² rad/mA², scaled to rad/mA².
    pub fn reference() -> Self {
        const A: [[f64; HEATERS]; HEATERS] = [
            [4.37, 0.0, -0.71, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 4.49, 0.0, -0.78, 0.0, 0.0, 0.0, 0.0],
            [-0.73, 0.0, 4.61, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, -0.70, 0.0, 4.43, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 4.64, 0.0, -0.82, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 4.90, 0.0, -0.85],
            [0.0, 0.0, 0.0, 0.0, -0.66, 0.0, 4.61, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, -0.83, 0.0, 5.21],
        ];
        const PHI0: [f64; HEATERS] = [-0.20, -0.01, -0.05, 0.15, -0.01, -0.21, 0.250, 0.285];
        let a = A.map(|row| row.map(|v| v * 1e-2));
        Self::new(a, PHI0).expect("tabulated model is valid")
    }

    /// Coefficients in rad/mA².
    pub fn a(&self) -> &[[f64; HEATERS]; HEATERS] {
        &self.a
    }

    pub fn phi0(&self) -> &[f64; HEATERS] {
        &self.phi0
    }

    /// `Φ₀ + A·I²`, not reduced modulo 2π.
    pub fn apply_crosstalk(&self, currents: &[f64; HEATERS]) -> [f64; HEATERS] {
        let mut phi = self.phi0;
        for (i, p) in phi.iter_mut().enumerate() {
            *p += (0..HEATERS).map(|j| self.a[i][j] * currents[j] * currents[j]).sum::<f64>();
        }
        phi
    }

    /// Currents realizing `target` modulo 2π on every channel.
    ///
    /// Starts from `(target − Φ₀) mod 2π`; channels whose solved `I²` is
    /// negative get 2π added and the system is solved again.
    pub fn solve_currents(&self, target: &[f64; HEATERS], dac: Dac) -> Result<CurrentVector> {
        const MAX_WRAPS: usize = 4;
        let flat: Vec<f64> = self.a.iter().flatten().copied().collect();
        let mut delta: [f64; HEATERS] = core::array::from_fn(|i| math::wrap_tau(target[i] - self.phi0[i]));
        for _ in 0..=MAX_WRAPS {
            let sq = solve_real(&flat, &delta)?;
            // round-off around an exact zero target is not a real deficit
            let negative: Vec<usize> = (0..HEATERS).filter(|&i| sq[i] < -1e-12).collect();
            if negative.is_empty() {
                let currents: [f64; HEATERS] = core::array::from_fn(|i| sqrt(sq[i].max(0.0)));
                if let Some(i) = currents.iter().position(|&c| c > dac.full_scale) {
                    bail!(
                        Infeasible,
                        "heater {} needs {:.3} mA, above the {} mA full scale",
                        i + 1,
                        currents[i],
                        dac.full_scale
                    );
                }
                return CurrentVector::new(currents, dac);
            }
            for i in negative {
                delta[i] += TAU;
            }
        }
        bail!(Infeasible, "negative squared currents remain after {MAX_WRAPS} phase wraps")
    }
}

/// Digital-to-analog converter of the current source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dac {
    /// `None` models an ideal continuous source.
    pub bits: Option<u32>,
    /// mA
    pub full_scale: f64,
}

impl Default for Dac {
    /// 12 bits over 0–20 mA.
    fn default() -> Self {
        Self {
            bits: Some(12),
            full_scale: 20.0,
        }
    }
}

impl Dac {
    pub fn continuous(full_scale: f64) -> Self {
        Self {
            bits: None,
            full_scale,
        }
    }

    /// Spacing between adjacent levels, or `None` for a continuous source.
    pub fn step(&self) -> Option<f64> {
        self.bits
            .map(|b| self.full_scale / ((1u64 << b) - 1) as f64)
    }

    /// Snaps one current to the nearest level, rounding ties upwards.
    /// Values within 1e-9 of a level midpoint count as ties. Returns the
    /// level and whether the input had to be clamped into range.
    pub fn snap(&self, current: f64) -> (f64, bool) {
        let clamped = current.clamp(0.0, self.full_scale);
        let was_clamped = clamped != current;
        let Some(step) = self.step() else {
            return (clamped, was_clamped);
        };
        let k = floor(clamped / step + 0.5 + 1e-9);
        ((k * step).min(self.full_scale), was_clamped)
    }
}

/// Heater currents in mA with the DAC that drives them.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentVector {
    currents: [f64; HEATERS],
    dac: Dac,
}

impl CurrentVector {
    pub fn new(currents: [f64; HEATERS], dac: Dac) -> Result<Self> {
        if let Some(i) = currents
            .iter()
            .position(|&c| !(0.0..=dac.full_scale).contains(&c))
        {
            bail!(
                Domain,
                "current {} on heater {} outside [0, {}] mA",
                currents[i],
                i + 1,
                dac.full_scale
            );
        }
        Ok(Self { currents, dac })
    }

    pub fn currents(&self) -> &[f64; HEATERS] {
        &self.currents
    }

    pub fn dac(&self) -> Dac {
        self.dac
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Quantized {
    pub currents: CurrentVector,
    /// Set when any requested current was outside the DAC range.
    pub clamped: bool,
}

/// Snaps every channel to its DAC level.
pub fn quantize(currents: &CurrentVector) -> Quantized {
    quantize_raw(&currents.currents, currents.dac)
}

/// Like [`quantize`] for unchecked input; out-of-range values are clamped
/// and flagged.
pub fn quantize_raw(currents: &[f64; HEATERS], dac: Dac) -> Quantized {
    let mut clamped = false;
    let snapped = currents.map(|c| {
        let (v, flag) = dac.snap(if c.is_nan() { 0.0 } else { c });
        clamped |= flag || c.is_nan();
        v
    });
    Quantized {
        currents: CurrentVector {
            currents: snapped,
            dac,
        },
        clamped,
    }
}

/// `P(x) = B − C·cos(φ₀ + αx²)` for heater current `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeParams {
    pub b: f64,
    pub c: f64,
    pub phi0: f64,
    /// rad/mA²
    pub alpha: f64,
}

impl FringeParams {
    pub fn power(&self, current: f64) -> f64 {
        self.b - self.c * cos(self.phi0 + self.alpha * current * current)
    }
}

/// Fringe offset and amplitude of an MZI with coupler reflectivities
/// `r1`, `r2`, seen at the bar output.
pub fn bc_from_reflectivities(r1: f64, r2: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&r1) || !(0.0..=1.0).contains(&r2) {
        bail!(Domain, "reflectivities ({r1}, {r2}) outside [0, 1]");
    }
    let b = r1 * r2 + (1.0 - r1) * (1.0 - r2);
    let c = 2.0 * sqrt(r1 * r2 * (1.0 - r1) * (1.0 - r2));
    Ok((b, c))
}

/// All unordered reflectivity pairs in `[0, 1]²` producing `(B, C)`.
/// Empty when no pair does.
pub fn reflectivities_from_bc(b: f64, c: f64) -> Vec<(f64, f64)> {
    const TOL: f64 = 1e-10;
    let mut out: Vec<(f64, f64)> = Vec::new();
    if !(b.is_finite() && c.is_finite()) || c < -TOL || b - c < -TOL || b + c > 1.0 + TOL {
        return out;
    }
    let sum_root = sqrt((b + c).clamp(0.0, 1.0));
    let diff_root = sqrt((b - c).max(0.0));
    // s = √(R₁R₂), t = √((1−R₁)(1−R₂)); s + t and |s − t| are fixed by B, C
    let hi = 0.5 * (sum_root + diff_root);
    let lo = 0.5 * (sum_root - diff_root);
    for (s, t) in [(hi, lo), (lo, hi)] {
        let sum = 1.0 + s * s - t * t;
        let prod = s * s;
        let disc = sum * sum - 4.0 * prod;
        if disc < -TOL {
            continue;
        }
        let root = sqrt(disc.max(0.0));
        let (r1, r2) = (0.5 * (sum - root), 0.5 * (sum + root));
        if r1 < -TOL || r2 > 1.0 + TOL {
            continue;
        }
        let pair = (r1.clamp(0.0, 1.0), r2.clamp(0.0, 1.0));
        let dup = out
            .iter()
            .any(|p| (p.0 - pair.0).abs() < 1e-9 && (p.1 - pair.1).abs() < 1e-9);
        if !dup {
            out.push(pair);
        }
    }
    out
}

/// Power readings at increasing heater currents.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationSweep {
    currents: Vec<f64>,
    powers: Vec<f64>,
}

impl CalibrationSweep {
    pub fn new(currents: Vec<f64>, powers: Vec<f64>) -> Result<Self> {
        if currents.len() != powers.len() {
            bail!(
                Dimension,
                "{} currents but {} power readings",
                currents.len(),
                powers.len()
            );
        }
        if currents.windows(2).any(|w| !(w[1] > w[0])) {
            bail!(Domain, "sweep currents must be strictly increasing");
        }
        if currents.iter().chain(&powers).any(|v| !v.is_finite()) {
            bail!(Domain, "sweep contains non-finite values");
        }
        if powers.iter().any(|&p| p < 0.0) {
            bail!(Domain, "sweep contains negative powers");
        }
        Ok(Self { currents, powers })
    }

    pub fn currents(&self) -> &[f64] {
        &self.currents
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn len(&self) -> usize {
        self.currents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.currents.is_empty()
    }
}

/// Uniform current grid `0, step, 2·step, … ≤ max`.
pub fn current_grid(max: f64, step: f64) -> Vec<f64> {
    let n = floor(max / step + 1e-9) as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

/// Evaluates the fringe model at `currents`. With `noise = Some((rel, rng))`
/// every reading gets Gaussian noise of standard deviation `rel·(B + C)`,
/// clipped at zero power.
pub fn simulate_sweep<R: Rng + ?Sized>(
    params: &FringeParams,
    currents: &[f64],
    noise: Option<(f64, &mut R)>,
) -> Result<CalibrationSweep> {
    if params.c > params.b || params.c < 0.0 {
        bail!(Domain, "fringe needs 0 <= C <= B, got B = {}, C = {}", params.b, params.c);
    }
    let mut powers: Vec<f64> = currents.iter().map(|&x| params.power(x)).collect();
    if let Some((rel, rng)) = noise {
        let sigma = rel * (params.b + params.c);
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma)
                .map_err(|e| crate::Error::Domain(alloc::format!("noise level: {e}")))?;
            for p in powers.iter_mut() {
                *p = (*p + normal.sample(rng)).max(0.0);
            }
        }
    }
    for p in powers.iter_mut() {
        *p = p.max(0.0);
    }
    CalibrationSweep::new(currents.to_vec(), powers)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepFit {
    pub params: FringeParams,
    /// Sum of squared residuals.
    pub residual: f64,
    /// The data show no fringe; `C` is reported as zero.
    pub degenerate: bool,
}

pub const MIN_SWEEP_SAMPLES: usize = 8;
const PHASE_STARTS: usize = 16;

/// Least-squares fit of the fringe model to a sweep.
///
/// Initialization: `B` from the mean, `C` from half the peak-to-peak,
/// `α` from the strongest Fourier component over the `x²` axis, and `φ₀`
/// from 16 evenly spaced starts. The result has `C ≥ 0`, `α > 0` and
/// `φ₀ ∈ (−π, π]`.
pub fn fit_sweep(sweep: &CalibrationSweep) -> Result<SweepFit> {
    let n = sweep.len();
    if n < MIN_SWEEP_SAMPLES {
        bail!(Domain, "fit needs at least {MIN_SWEEP_SAMPLES} samples, got {n}");
    }
    let u: Vec<f64> = sweep.currents.iter().map(|x| x * x).collect();
    let y = &sweep.powers;
    let mean = y.iter().sum::<f64>() / n as f64;
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let half_range = 0.5 * (max - min);
    if half_range <= 1e-12 * mean.abs().max(1e-300) || half_range == 0.0 {
        let residual = y.iter().map(|v| (v - mean) * (v - mean)).sum();
        return Ok(SweepFit {
            params: FringeParams {
                b: mean,
                c: 0.0,
                phi0: 0.0,
                alpha: 0.0,
            },
            residual,
            degenerate: true,
        });
    }

    let alpha0 = dominant_frequency(&u, y, mean)?;
    let model = |p: &[f64], r: &mut [f64], jac: &mut [f64]| {
        for k in 0..n {
            let theta = p[2] + p[3] * u[k];
            let (s, c) = (sin(theta), cos(theta));
            r[k] = p[0] - p[1] * c - y[k];
            let row = &mut jac[4 * k..4 * k + 4];
            row[0] = 1.0;
            row[1] = -c;
            row[2] = p[1] * s;
            row[3] = p[1] * u[k] * s;
        }
    };
    let mut best: Option<crate::optimize::Minimum> = None;
    let mut last_err = None;
    for s in 0..PHASE_STARTS {
        let phi_start = -PI + TAU * s as f64 / PHASE_STARTS as f64;
        match levenberg_marquardt(model, &[mean, half_range, phi_start, alpha0], n, &LmOptions::default()) {
            Ok(m) => {
                if best.as_ref().is_none_or(|b| m.value < b.value) {
                    best = Some(m);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some(best) = best else {
        return Err(last_err.unwrap_or(crate::Error::Convergence {
            iterations: 0,
            residual: f64::NAN,
        }));
    };
    let (b, mut c, mut phi0, mut alpha) = (best.x[0], best.x[1], best.x[2], best.x[3]);
    if c < 0.0 {
        c = -c;
        phi0 += PI;
    }
    if alpha < 0.0 {
        alpha = -alpha;
        phi0 = -phi0;
    }
    Ok(SweepFit {
        params: FringeParams {
            b,
            c,
            phi0: math::wrap_pi(phi0),
            alpha,
        },
        residual: best.value,
        degenerate: false,
    })
}

/// Angular frequency with the largest non-uniform DFT power over `u`.
fn dominant_frequency(u: &[f64], y: &[f64], mean: f64) -> Result<f64> {
    let span = u[u.len() - 1] - u[0];
    if !(span > 0.0) {
        bail!(Degenerate, "sweep has zero current span");
    }
    let mut gaps: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let median_gap = gaps[gaps.len() / 2];
    let (w_min, w_max) = (PI / span, PI / median_gap);
    let dw = 0.125 * PI / span;
    let steps = ((w_max - w_min) / dw) as usize + 1;
    let mut best = (0.0, w_min);
    for k in 0..=steps {
        let w = w_min + k as f64 * dw;
        let (mut re, mut im) = (0.0, 0.0);
        for (&uk, &yk) in u.iter().zip(y) {
            re += (yk - mean) * cos(w * uk);
            im += (yk - mean) * sin(w * uk);
        }
        let power = re * re + im * im;
        if power > best.0 {
            best = (power, w);
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::mzi_matrix;
    use crate::seeded_rng;

    #[test]
    fn zero_current_gives_initial_phases() {
        let m = CrossTalkModel::reference();
        assert_eq!(m.apply_crosstalk(&[0.0; 8]), *m.phi0());
    }

    #[test]
    fn single_heater_drive() {
        let m = CrossTalkModel::reference();
        let mut i = [0.0; 8];
        i[0] = 10.0;
        let phi = m.apply_crosstalk(&i);
        let d: Vec<f64> = (0..8).map(|k| phi[k] - m.phi0()[k]).collect();
        assert!((d[0] - 4.37).abs() < 1e-12);
        assert!((d[2] + 0.73).abs() < 1e-12);
        assert!(d.iter().enumerate().all(|(k, v)| k == 0 || k == 2 || *v == 0.0));
    }

    #[test]
    fn diagonal_model_is_independent() {
        let mut a = [[0.0; 8]; 8];
        for (k, row) in a.iter_mut().enumerate() {
            row[k] = 0.05;
        }
        let m = CrossTalkModel::new(a, [0.0; 8]).unwrap();
        let mut i = [0.0; 8];
        i[4] = 2.0;
        let phi = m.apply_crosstalk(&i);
        assert!((phi[4] - 0.2).abs() < 1e-15 && phi.iter().filter(|&&p| p != 0.0).count() == 1);
    }

    #[test]
    fn model_validation() {
        let mut a = CrossTalkModel::reference().a;
        a[0][1] = -0.01;
        assert!(CrossTalkModel::new(a, [0.0; 8]).is_err());
        let mut a = CrossTalkModel::reference().a;
        a[3][3] = 0.0;
        assert!(CrossTalkModel::new(a, [0.0; 8]).is_err());
    }

    #[test]
    fn solve_pi_on_first_heater() {
        let m = CrossTalkModel::reference();
        let mut target = *m.phi0();
        target[0] += PI;
        let i = m.solve_currents(&target, Dac::default()).unwrap();
        // 2×2 block: [[4.37, −0.71], [−0.73, 4.61]]·1e-2 y = (π, 0)
        let det = (4.37 * 4.61 - 0.71 * 0.73) * 1e-4;
        let y1 = 4.61e-2 * PI / det;
        let y3 = 0.73e-2 * PI / det;
        assert!((i.currents()[0] - sqrt(y1)).abs() < 1e-12);
        assert!((i.currents()[2] - sqrt(y3)).abs() < 1e-12);
        assert!((i.currents()[0] - 8.59).abs() < 0.01 && i.currents()[2] > 0.0);
        let zero = m.solve_currents(m.phi0(), Dac::default()).unwrap();
        assert!(zero.currents().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn negative_target_wraps() {
        let m = CrossTalkModel::reference();
        let mut target = *m.phi0();
        target[5] -= 0.3;
        let i = m.solve_currents(&target, Dac::default()).unwrap();
        let phi = m.apply_crosstalk(i.currents());
        assert!((math::wrap_pi(phi[5] - target[5])).abs() < 1e-9);
    }

    #[test]
    fn infeasible_when_full_scale_is_small() {
        let m = CrossTalkModel::reference();
        let mut target = *m.phi0();
        target[0] += 3.0;
        let err = m.solve_currents(&target, Dac::continuous(1.0)).unwrap_err();
        assert!(matches!(err, crate::Error::Infeasible(_)));
    }

    #[test]
    fn dac_levels() {
        let dac = Dac::default();
        let step = dac.step().unwrap();
        assert_eq!(dac.snap(0.0), (0.0, false));
        assert_eq!(dac.snap(20.0), (20.0, false));
        assert_eq!(dac.snap(25.0), (20.0, true));
        let mid = 100.5 * step;
        assert!((dac.snap(mid).0 - 101.0 * step).abs() < 1e-12);
        let q = quantize_raw(&[1.234, 0.0, 5.0, 19.99, 0.5, 0.0, 0.0, 30.0], dac);
        assert!(q.clamped);
        let again = quantize(&q.currents);
        assert_eq!(again.currents, q.currents);
        assert!(!again.clamped);
        assert_eq!(Dac::continuous(20.0).snap(1.2345), (1.2345, false));
    }

    #[test]
    fn fringe_model_examples() {
        let flat = FringeParams { b: 0.6, c: 0.3, phi0: 0.4, alpha: 0.0 };
        assert!((flat.power(7.0) - (0.6 - 0.3 * cos(0.4))).abs() < 1e-15);
        let p = FringeParams { b: 0.5, c: 0.4, phi0: 0.0, alpha: 0.05 };
        assert!((p.power(sqrt(PI / 0.05)) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn balanced_mzi_fringe() {
        let (b, c) = bc_from_reflectivities(0.5, 0.5).unwrap();
        assert!((b - 0.5).abs() < 1e-15 && (c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bc_matches_mzi_bar_power() {
        for &(r1, r2) in &[(0.5, 0.5), (0.3, 0.6), (0.9, 0.15), (0.0, 0.4)] {
            let (b, c) = bc_from_reflectivities(r1, r2).unwrap();
            for k in 0..12 {
                let phi = k as f64 * 0.5;
                let power = mzi_matrix(r1, r2, phi).unwrap()[(0, 0)].norm_sqr();
                assert!((power - (b - c * cos(phi))).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn reflectivity_inversion() {
        let set = reflectivities_from_bc(0.5, 0.5);
        assert!(set.iter().any(|p| (p.0 - 0.5).abs() < 1e-6 && (p.1 - 0.5).abs() < 1e-6));
        let (b, c) = bc_from_reflectivities(0.0, 0.7).unwrap();
        let set = reflectivities_from_bc(b, c);
        assert!(!set.is_empty());
        assert!(set.iter().all(|p| p.0.min(p.1) < 1e-9 || p.0.max(p.1) > 1.0 - 1e-9));
        assert!(reflectivities_from_bc(0.2, 0.5).is_empty());
    }

    #[test]
    fn fit_noiseless_sweep() {
        let truth = FringeParams { b: 0.52, c: 0.47, phi0: -0.8, alpha: 0.0437 };
        let xs = current_grid(20.0, 0.15);
        let sweep = simulate_sweep::<crate::Rng>(&truth, &xs, None).unwrap();
        let fit = fit_sweep(&sweep).unwrap();
        let p = fit.params;
        assert!(!fit.degenerate);
        for (got, want) in [(p.b, truth.b), (p.c, truth.c), (p.phi0, truth.phi0), (p.alpha, truth.alpha)] {
            assert!(((got - want) / want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn fit_flags_constant_data() {
        let sweep = CalibrationSweep::new(current_grid(20.0, 1.0), alloc::vec![0.3; 21]).unwrap();
        let fit = fit_sweep(&sweep).unwrap();
        assert!(fit.degenerate && fit.params.c == 0.0);
    }

    #[test]
    fn noisy_sweep_is_seeded() {
        let truth = FringeParams { b: 0.5, c: 0.5, phi0: 0.3, alpha: 0.05 };
        let xs = current_grid(20.0, 0.15);
        let a = simulate_sweep(&truth, &xs, Some((0.01, &mut seeded_rng(5)))).unwrap();
        let b = simulate_sweep(&truth, &xs, Some((0.01, &mut seeded_rng(5)))).unwrap();
        assert_eq!(a, b);
        assert!(a.powers().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn sweep_validation() {
        assert!(CalibrationSweep::new(alloc::vec![0.0, 0.0], alloc::vec![1.0, 1.0]).is_err());
        assert!(CalibrationSweep::new(alloc::vec![0.0, 1.0], alloc::vec![1.0, -1.0]).is_err());
        let short = CalibrationSweep::new(alloc::vec![0.0, 1.0], alloc::vec![1.0, 0.5]).unwrap();
        assert!(fit_sweep(&short).is_err());
    }
}
