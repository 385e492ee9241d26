//! Variational eigensolver for the two-qubit H₂ Hamiltonian
//! `H = f₀II + f₁ZZ + f₂ZI + f₃IZ + f₄XX`.
//!
//! The ansatz is the chip itself: φ₁…φ₄ prepare a product state, the CNOT
//! entangles it, and the energy is read from coincidences in the `hh` and
//! `dd` measurement settings.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::linalg::{c64, CMatrix, C64};
use crate::math::{self, FRAC_PI_2, PI};
use crate::optics::{build_chip_unitary, mzi_matrix, phase_matrix, ChipParameters};
use crate::optimize::{nelder_mead, spsa, Minimum, NelderMeadOptions, SpsaOptions};
use crate::sampler::{coincidence_probabilities, sample_counts, CountRecord, Overlap};
use crate::tomography::{pauli, zero_controlled_not, BasisLabel};

/// Coefficients below this magnitude are dropped on ingestion.
pub const COEFFICIENT_CUTOFF: f64 = 1e-8;

/// `f₀…f₄` for II, ZZ, ZI, IZ, XX.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliHamiltonian {
    pub f: [f64; 5],
}

impl PauliHamiltonian {
    /// Keeps coefficients as given.
    pub const fn new(f: [f64; 5]) -> Self {
        Self { f }
    }

    /// Zeroes coefficients smaller than [`COEFFICIENT_CUTOFF`].
    pub fn from_coefficients(f: [f64; 5]) -> Result<Self> {
        if f.iter().any(|v| !v.is_finite()) {
            bail!(Domain, "Hamiltonian coefficients must be finite");
        }
        Ok(Self {
            f: f.map(|v| if v.abs() < COEFFICIENT_CUTOFF { 0.0 } else { v }),
        })
    }

    pub fn matrix(&self) -> CMatrix {
        let terms = [(0, 0), (3, 3), (3, 0), (0, 3), (1, 1)];
        let mut h = CMatrix::zeros(4, 4);
        for (&(a, b), &f) in terms.iter().zip(&self.f) {
            h = &h + &pauli(a).kron(&pauli(b)).scale(c64(f, 0.0));
        }
        h
    }

    /// `⟨ψ|H|ψ⟩` for a normalized two-qubit state.
    pub fn expectation(&self, psi: &[C64; 4]) -> f64 {
        let h = self.matrix();
        let mut e = c64(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                e += psi[i].conj() * h[(i, j)] * psi[j];
            }
        }
        e.re
    }
}

/// `f̃₀…f̃₇` for HH, HV, VH, VV, DD, DA, AD, AA projector products.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectorHamiltonian {
    pub f: [f64; 8],
}

pub fn pauli_to_projector(h: &PauliHamiltonian) -> ProjectorHamiltonian {
    let [f0, f1, f2, f3, f4] = h.f;
    ProjectorHamiltonian {
        f: [
            f0 + f1 + f2 + f3,
            f0 - f1 + f2 - f3,
            f0 - f1 - f2 + f3,
            f0 + f1 - f2 - f3,
            f4,
            -f4,
            -f4,
            f4,
        ],
    }
}

/// Inverse of [`pauli_to_projector`]; the XX block must have the
/// `(f, −f, −f, f)` pattern.
pub fn projector_to_pauli(p: &ProjectorHamiltonian) -> Result<PauliHamiltonian> {
    let g = p.f;
    let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if (g[5] + g[4]).abs() > 1e-12 * scale
        || (g[6] + g[4]).abs() > 1e-12 * scale
        || (g[7] - g[4]).abs() > 1e-12 * scale
    {
        bail!(Domain, "projector coefficients {:?} have no two-qubit Pauli form", &g[4..]);
    }
    PauliHamiltonian::from_coefficients([
        0.25 * (g[0] + g[1] + g[2] + g[3]),
        0.25 * (g[0] - g[1] - g[2] + g[3]),
        0.25 * (g[0] + g[1] - g[2] - g[3]),
        0.25 * (g[0] - g[1] + g[2] - g[3]),
        g[4],
    ])
}

impl ProjectorHamiltonian {
    /// The H₂ Hamiltonian at 0.4 Å.
    pub const H2_0P4_ANGSTROM: ProjectorHamiltonian = ProjectorHamiltonian {
        f: [1.851, 0.447, 0.447, -0.904, 0.165, -0.165, -0.165, 0.165],
    };

    /// `Σ f̃ᵢ Pₐ ⊗ P_b`.
    pub fn matrix(&self) -> CMatrix {
        let proj = |v: [C64; 2]| CMatrix::from_fn(2, 2, |a, b| v[a] * v[b].conj());
        let mut h = CMatrix::zeros(4, 4);
        for (block, basis) in [BasisLabel::Hv, BasisLabel::Da].iter().enumerate() {
            let [s, t] = basis.outcomes();
            let pairs = [(s, s), (s, t), (t, s), (t, t)];
            for (k, (a, b)) in pairs.iter().enumerate() {
                let term = proj(a.vector()).kron(&proj(b.vector()));
                h = &h + &term.scale(c64(self.f[4 * block + k], 0.0));
            }
        }
        h
    }
}

fn normalized(record: &CountRecord, basis: &str) -> Result<[f64; 4]> {
    let total = record.total();
    if total == 0 {
        bail!(Degenerate, "{basis} record has no counts");
    }
    Ok(record.counts.map(|c| c as f64 / total as f64))
}

/// `Σ f̃ᵢ cᵢ` with `c = C/ΣC` per basis.
pub fn expectation_from_counts(
    h: &ProjectorHamiltonian,
    counts_hh: &CountRecord,
    counts_dd: &CountRecord,
) -> Result<f64> {
    let hh = normalized(counts_hh, "hh")?;
    let dd = normalized(counts_dd, "dd")?;
    Ok(expectation_from_frequencies(h, &hh, &dd))
}

/// As [`expectation_from_counts`] for already normalized frequencies.
pub fn expectation_from_frequencies(h: &ProjectorHamiltonian, hh: &[f64; 4], dd: &[f64; 4]) -> f64 {
    (0..4).map(|k| h.f[k] * hh[k] + h.f[4 + k] * dd[k]).sum()
}

/// Smallest eigenvalue of the Pauli-form Hamiltonian.
pub fn energy_oracle(h: &PauliHamiltonian) -> f64 {
    h.matrix()
        .hermitian_eigenvalues()
        .expect("4x4 Hermitian")[0]
}

/// φ₁…φ₄, each in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnsatzParams([f64; 4]);

impl AnsatzParams {
    pub fn new(phi: [f64; 4]) -> Self {
        Self(phi.map(math::wrap_tau))
    }

    pub fn phases(&self) -> [f64; 4] {
        self.0
    }

    /// Chip phases with the given measurement setting on φ₅…φ₈.
    pub fn chip_phases(&self, basis: BasisLabel) -> [f64; 8] {
        let (z, x) = basis.measurement_phases();
        let p = self.0;
        [p[0], p[1], p[2], p[3], z, x, z, x]
    }
}

impl Default for AnsatzParams {
    /// Identity preparation gates, i.e. the input `|00⟩` passes unchanged.
    fn default() -> Self {
        Self([PI; 4])
    }
}

/// Two-qubit state produced by an ideal chip, in the frame in which the
/// `hh` and `dd` settings measure Z and X of each qubit.
///
/// Each preparation gate acts as `P(φ_z − π/2)·MZI(φ_x)` on `|0⟩`.
pub fn ideal_ansatz_state(params: &AnsatzParams) -> [C64; 4] {
    let p = params.0;
    let qubit = |x: f64, z: f64| {
        let u = &phase_matrix(z - FRAC_PI_2) * &mzi_matrix(0.5, 0.5, x).expect("balanced");
        [u[(0, 0)], u[(1, 0)]]
    };
    let (a, b) = (qubit(p[0], p[1]), qubit(p[2], p[3]));
    let product = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    let u = zero_controlled_not();
    core::array::from_fn(|i| (0..4).map(|j| u[(i, j)] * product[j]).sum())
}

/// Post-selected C1…C4 probabilities of one measurement setting.
pub fn basis_probabilities(
    chip: &ChipParameters,
    params: &AnsatzParams,
    basis: BasisLabel,
    overlap: Overlap,
) -> Result<[f64; 4]> {
    let u = build_chip_unitary(&chip.clone().with_tunable_phases(params.chip_phases(basis)))?;
    coincidence_probabilities(&u, overlap)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VqeMode {
    /// Post-selected probabilities, no shot noise.
    Exact,
    /// Expected post-selected coincidences per basis and evaluation.
    Shots(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VqeOptimizer {
    /// Simplex descent restarted from the best point `restarts` times.
    NelderMead {
        restarts: usize,
        options: NelderMeadOptions,
    },
    Spsa(SpsaOptions),
}

impl VqeOptimizer {
    /// Simplex descent with `max_evaluations` energy evaluations per restart.
    pub fn nelder_mead(restarts: usize, max_evaluations: usize) -> Self {
        Self::NelderMead {
            restarts,
            options: NelderMeadOptions {
                max_evaluations,
                value_tolerance: 1e-10,
                step_tolerance: 1e-7,
            },
        }
    }
}

impl Default for VqeOptimizer {
    fn default() -> Self {
        Self::nelder_mead(3, 600)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VqeConfig {
    pub mode: VqeMode,
    pub overlap: Overlap,
    pub optimizer: VqeOptimizer,
    pub initial: AnsatzParams,
}

impl Default for VqeConfig {
    fn default() -> Self {
        Self {
            mode: VqeMode::Exact,
            overlap: Overlap::INDISTINGUISHABLE,
            optimizer: VqeOptimizer::default(),
            initial: AnsatzParams::default(),
        }
    }
}

/// One energy measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct VqeStep {
    pub params: AnsatzParams,
    pub energy: f64,
    /// Counts in shot mode, normalized probabilities in exact mode.
    pub hh: [f64; 4],
    pub dd: [f64; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct VqeResult {
    pub best: AnsatzParams,
    /// A fresh measurement at `best`.
    pub energy: f64,
    pub trace: Vec<VqeStep>,
    /// The optimizer ran out of budget before meeting its tolerances.
    pub stagnated: bool,
}

impl VqeResult {
    /// Running minimum of the recorded energies.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.trace
            .iter()
            .map(|s| {
                best = best.min(s.energy);
                best
            })
            .collect()
    }
}

struct Evaluator<'a, R: Rng + ?Sized> {
    chip: &'a ChipParameters,
    h: ProjectorHamiltonian,
    config: &'a VqeConfig,
    rng: &'a mut R,
    trace: Vec<VqeStep>,
    error: Option<crate::Error>,
}

impl<R: Rng + ?Sized> Evaluator<'_, R> {
    fn measure(&mut self, params: AnsatzParams) -> Result<VqeStep> {
        let hh = basis_probabilities(self.chip, &params, BasisLabel::Hv, self.config.overlap)?;
        let dd = basis_probabilities(self.chip, &params, BasisLabel::Da, self.config.overlap)?;
        let (hh, dd, energy) = match self.config.mode {
            VqeMode::Exact => {
                let (hh, dd) = (normalize(hh)?, normalize(dd)?);
                (hh, dd, expectation_from_frequencies(&self.h, &hh, &dd))
            }
            VqeMode::Shots(shots) => {
                let chh = sample_counts(&hh, shots / hh.iter().sum::<f64>(), 1.0, self.rng)?;
                let cdd = sample_counts(&dd, shots / dd.iter().sum::<f64>(), 1.0, self.rng)?;
                let e = expectation_from_counts(&self.h, &chh, &cdd)?;
                (chh.counts.map(|c| c as f64), cdd.counts.map(|c| c as f64), e)
            }
        };
        Ok(VqeStep {
            params,
            energy,
            hh,
            dd,
        })
    }

    fn objective(&mut self, x: &[f64]) -> f64 {
        if self.error.is_some() {
            return f64::INFINITY;
        }
        let params = AnsatzParams::new([x[0], x[1], x[2], x[3]]);
        match self.measure(params) {
            Ok(step) => {
                let e = step.energy;
                self.trace.push(step);
                e
            }
            Err(err) => {
                self.error = Some(err);
                f64::INFINITY
            }
        }
    }
}

fn normalize(p: [f64; 4]) -> Result<[f64; 4]> {
    let total: f64 = p.iter().sum();
    if !(total > 0.0) {
        bail!(Degenerate, "setting has zero coincidence probability");
    }
    Ok(p.map(|v| v / total))
}

/// Minimizes the measured energy over φ₁…φ₄.
pub fn run_vqe<R: Rng + ?Sized>(
    chip: &ChipParameters,
    h: &PauliHamiltonian,
    config: &VqeConfig,
    rng: &mut R,
) -> Result<VqeResult> {
    chip.validate()?;
    if let VqeMode::Shots(s) = config.mode {
        if !(s > 0.0) || !s.is_finite() {
            bail!(Domain, "shots per basis must be positive");
        }
    }
    let mut eval = Evaluator {
        chip,
        h: pauli_to_projector(h),
        config,
        rng,
        trace: Vec::new(),
        error: None,
    };
    let x0 = config.initial.phases();
    let (best_x, stagnated) = match config.optimizer {
        VqeOptimizer::NelderMead { restarts, options } => {
            let mut x = x0.to_vec();
            let mut last: Option<Minimum> = None;
            for _ in 0..=restarts {
                let m = nelder_mead(|p| eval.objective(p), &x, &[FRAC_PI_2; 4], &options);
                let improved = last.as_ref().is_none_or(|l| m.value < l.value);
                if improved {
                    x.clone_from(&m.x);
                }
                let done = m.converged
                    && last
                        .as_ref()
                        .is_some_and(|l| (l.value - m.value).abs() <= options.value_tolerance);
                if improved || last.is_none() {
                    last = Some(m);
                }
                if done {
                    break;
                }
            }
            let converged = last.as_ref().is_some_and(|m| m.converged);
            (x, !converged)
        }
        VqeOptimizer::Spsa(options) => {
            let mut local = crate::seeded_rng(eval.rng.random());
            let m = spsa(|p| eval.objective(p), &x0, &options, &mut local);
            (m.x, false)
        }
    };
    if let Some(err) = eval.error.take() {
        return Err(err);
    }
    let best = AnsatzParams::new([best_x[0], best_x[1], best_x[2], best_x[3]]);
    let final_step = eval.measure(best)?;
    Ok(VqeResult {
        best,
        energy: final_step.energy,
        trace: eval.trace,
        stagnated,
    })
}
