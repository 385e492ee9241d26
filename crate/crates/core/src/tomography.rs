//! Process tomography of the two-qubit gate.
//!
//! A process is described by its χ-matrix in the Pauli basis
//! `E_{4a+b} = σ_a ⊗ σ_b` with `σ = (I, X, Y, Z)`:
//! `E(ρ) = Σ χ_mn E_m ρ E_n†`. Reconstruction minimizes the squared
//! difference between predicted and measured outcome frequencies over the
//! Cholesky-style parametrization `χ = g g† / Tr(g g†)`.
//!
//! Configuration labels use two upper-case preparation letters from
//! `H V D A R L` followed by two lower-case basis letters from `h d r`,
//! first qubit first, e.g. `VDrd`. Outcomes are ordered C1…C4, i.e.
//! (first, first), (first, second), (second, first), (second, second)
//! basis state of each qubit.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{bail, Error, Result};
use crate::linalg::{c64, CMatrix, C64};
use crate::math::{sqrt, FRAC_PI_2, PI};
use crate::optics::{self, build_chip_unitary, ChipParameters};
use crate::optimize::{lbfgs, LbfgsOptions, Minimum};
use crate::sampler::{coincidence_probabilities, sample_counts, CountRecord, Overlap};

/// Dimension of the two-qubit operator space.
pub const PAULI_DIM: usize = 16;
/// Real parameters of a 16×16 lower-triangular `g` with real diagonal.
pub const CHI_PARAMS: usize = PAULI_DIM * PAULI_DIM;
/// Configurations needed for a full reconstruction.
pub const MIN_CONFIGS: usize = 64;

/// Single-qubit Pauli matrix, `k` in `0..4` for I, X, Y, Z.
pub fn pauli(k: usize) -> CMatrix {
    let (o, i) = (c64(1.0, 0.0), c64(0.0, 1.0));
    let z = c64(0.0, 0.0);
    let data = match k {
        0 => [o, z, z, o],
        1 => [z, o, o, z],
        2 => [z, -i, i, z],
        3 => [o, z, z, -o],
        _ => panic!("Pauli index {k} out of range"),
    };
    CMatrix::from_vec(2, 2, data.to_vec()).expect("2x2")
}

/// The 16 two-qubit Pauli products, index `4a + b`.
pub fn pauli_basis() -> Vec<CMatrix> {
    (0..PAULI_DIM)
        .map(|m| pauli(m / 4).kron(&pauli(m % 4)))
        .collect()
}

/// Single-qubit polarization-style state labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StateLabel {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl StateLabel {
    pub const ALL: [StateLabel; 6] = [Self::H, Self::V, Self::D, Self::A, Self::R, Self::L];

    pub fn from_char(c: char) -> Option<Self> {
        Some(match c {
            'H' => Self::H,
            'V' => Self::V,
            'D' => Self::D,
            'A' => Self::A,
            'R' => Self::R,
            'L' => Self::L,
            _ => return None,
        })
    }

    pub fn as_char(self) -> char {
        match self {
            Self::H => 'H',
            Self::V => 'V',
            Self::D => 'D',
            Self::A => 'A',
            Self::R => 'R',
            Self::L => 'L',
        }
    }

    /// Amplitudes on the two rails; H is the first rail.
    pub fn vector(self) -> [C64; 2] {
        let h = sqrt(0.5);
        match self {
            Self::H => [c64(1.0, 0.0), c64(0.0, 0.0)],
            Self::V => [c64(0.0, 0.0), c64(1.0, 0.0)],
            Self::D => [c64(h, 0.0), c64(h, 0.0)],
            Self::A => [c64(h, 0.0), c64(-h, 0.0)],
            Self::R => [c64(h, 0.0), c64(0.0, h)],
            Self::L => [c64(h, 0.0), c64(0.0, -h)],
        }
    }

    /// (MZI phase, Rz phase) of the preparation gate.
    pub fn preparation_phases(self) -> (f64, f64) {
        match self {
            Self::H => (PI, PI),
            Self::V => (0.0, 0.0),
            Self::D => (FRAC_PI_2, FRAC_PI_2),
            Self::A => (FRAC_PI_2, 3.0 * FRAC_PI_2),
            Self::R => (FRAC_PI_2, PI),
            Self::L => (FRAC_PI_2, 0.0),
        }
    }
}

/// Projective measurement bases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisLabel {
    Hv,
    Da,
    Rl,
}

impl BasisLabel {
    pub const ALL: [BasisLabel; 3] = [Self::Hv, Self::Da, Self::Rl];

    pub fn from_char(c: char) -> Option<Self> {
        Some(match c {
            'h' => Self::Hv,
            'd' => Self::Da,
            'r' => Self::Rl,
            _ => return None,
        })
    }

    pub fn as_char(self) -> char {
        match self {
            Self::Hv => 'h',
            Self::Da => 'd',
            Self::Rl => 'r',
        }
    }

    /// Basis states in outcome order.
    pub fn outcomes(self) -> [StateLabel; 2] {
        match self {
            Self::Hv => [StateLabel::H, StateLabel::V],
            Self::Da => [StateLabel::D, StateLabel::A],
            Self::Rl => [StateLabel::R, StateLabel::L],
        }
    }

    /// (Rz phase, MZI phase) of the measurement gate.
    pub fn measurement_phases(self) -> (f64, f64) {
        match self {
            Self::Hv => (PI, PI),
            Self::Da => (FRAC_PI_2, FRAC_PI_2),
            Self::Rl => (0.0, FRAC_PI_2),
        }
    }
}

fn product_state(a: StateLabel, b: StateLabel) -> [C64; 4] {
    let (u, v) = (a.vector(), b.vector());
    [u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]]
}

/// One preparation/measurement setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QptConfig {
    pub prep: [StateLabel; 2],
    pub meas: [BasisLabel; 2],
}

impl QptConfig {
    pub fn label(&self) -> String {
        format!("{self}")
    }

    pub fn prep_state(&self) -> [C64; 4] {
        product_state(self.prep[0], self.prep[1])
    }

    /// Projector states for C1…C4.
    pub fn outcome_states(&self) -> [[C64; 4]; 4] {
        let (a, b) = (self.meas[0].outcomes(), self.meas[1].outcomes());
        [
            product_state(a[0], b[0]),
            product_state(a[0], b[1]),
            product_state(a[1], b[0]),
            product_state(a[1], b[1]),
        ]
    }

    /// φ₁…φ₈ realizing this setting.
    pub fn tunable_phases(&self) -> [f64; 8] {
        let (p1, p2) = self.prep[0].preparation_phases();
        let (p3, p4) = self.prep[1].preparation_phases();
        let (p5, p6) = self.meas[0].measurement_phases();
        let (p7, p8) = self.meas[1].measurement_phases();
        [p1, p2, p3, p4, p5, p6, p7, p8]
    }
}

impl fmt::Display for QptConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}{}",
            self.prep[0].as_char(),
            self.prep[1].as_char(),
            self.meas[0].as_char(),
            self.meas[1].as_char()
        )
    }
}

impl FromStr for QptConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let c: Vec<char> = s.chars().collect();
        if c.len() != 4 {
            bail!(Domain, "configuration label {s:?} must have 4 letters");
        }
        let prep = [StateLabel::from_char(c[0]), StateLabel::from_char(c[1])];
        let meas = [BasisLabel::from_char(c[2]), BasisLabel::from_char(c[3])];
        match (prep, meas) {
            ([Some(a), Some(b)], [Some(x), Some(y)]) => Ok(Self {
                prep: [a, b],
                meas: [x, y],
            }),
            _ => bail!(Domain, "configuration label {s:?} is not of the form [HVDARL]{{2}}[hdr]{{2}}"),
        }
    }
}

/// The 64 preparation and measurement settings of the reference tomography run.
pub const STANDARD_CONFIGS: [&str; 64] = [
    "HHhh", "HVhh", "VHhh", "VVhh", "HRhr", "HLhr", "VRhr", "VLhr",
    "HDhd", "HAhd", "VDhd", "VAhd", "DDdd", "DAdd", "ADdd", "AAdd",
    "RDrd", "RArd", "LDrd", "LArd", "HHhd", "HVhd", "VHhd", "VVhd",
    "HHhr", "HVhr", "VHhr", "VVhr", "HDhh", "HAhh", "VDhh", "VAhh",
    "HDhr", "HAhr", "VDhr", "VAhr", "HRhh", "HLhh", "VRhh", "VLhh",
    "HRhd", "HLhd", "VRhd", "VLhd", "HDdd", "HAdd", "VDdd", "VAdd",
    "HDrd", "HArd", "VDrd", "VArd", "HHdh", "HVdh", "VHdh", "VVdh",
    "HHrh", "HVrh", "VHrh", "VVrh", "RRrd", "RLrd", "LRrd", "LLrd",
];

pub fn standard_configs() -> Vec<QptConfig> {
    STANDARD_CONFIGS
        .iter()
        .map(|s| s.parse().expect("tabulated label"))
        .collect()
}

/// Counts per configuration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QptDataset {
    entries: Vec<(QptConfig, CountRecord)>,
}

impl QptDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, config: QptConfig, record: CountRecord) {
        self.entries.push((config, record));
    }

    pub fn entries(&self) -> &[(QptConfig, CountRecord)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct configurations.
    pub fn coverage(&self) -> usize {
        let mut seen: Vec<QptConfig> = Vec::new();
        for (c, _) in &self.entries {
            if !seen.contains(c) {
                seen.push(*c);
            }
        }
        seen.len()
    }
}

impl FromIterator<(QptConfig, CountRecord)> for QptDataset {
    fn from_iter<I: IntoIterator<Item = (QptConfig, CountRecord)>>(iter: I) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

/// Positive semidefinite unit-trace process matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiMatrix(CMatrix);

impl ChiMatrix {
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const PSD_TOL: f64 = 1e-9;
    pub const TRACE_TOL: f64 = 1e-9;

    /// Validates shape, Hermiticity, positivity and unit trace.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.rows() != PAULI_DIM || m.cols() != PAULI_DIM {
            bail!(Dimension, "χ must be 16x16, got {}x{}", m.rows(), m.cols());
        }
        let h = m.hermiticity_defect();
        if h > Self::HERMITICITY_TOL {
            bail!(Domain, "χ is not Hermitian (defect {h:e})");
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > Self::TRACE_TOL || tr.im.abs() > Self::TRACE_TOL {
            bail!(Domain, "χ has trace {tr}, expected 1");
        }
        let min = m.hermitian_eigenvalues()?[0];
        if min < -Self::PSD_TOL {
            bail!(Domain, "χ has negative eigenvalue {min:e}");
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.0
            .hermitian_eigenvalues()
            .expect("χ is square by construction")
    }
}

/// Pauli decomposition `u_m = Tr(E_m U)/4` turned into `χ_mn = u_m u_n*`.
pub fn chi_from_unitary(u: &CMatrix) -> Result<ChiMatrix> {
    if u.rows() != 4 || u.cols() != 4 {
        bail!(Dimension, "two-qubit process needs a 4x4 operator");
    }
    if !u.is_unitary(optics::UNITARY_TOL) {
        bail!(Domain, "operator is not unitary");
    }
    let coef: Vec<C64> = pauli_basis()
        .iter()
        .map(|e| (e.adjoint().matmul(u).expect("4x4")).trace() * 0.25)
        .collect();
    let m = CMatrix::from_fn(PAULI_DIM, PAULI_DIM, |a, b| coef[a] * coef[b].conj());
    ChiMatrix::new(m)
}

/// The gate realized by the chip: the target (second) qubit is flipped
/// when the control (first) qubit is in the first rail,
/// `|00⟩→|01⟩, |01⟩→|00⟩, |10⟩→|10⟩, |11⟩→|11⟩`.
pub fn zero_controlled_not() -> CMatrix {
    let mut u = CMatrix::zeros(4, 4);
    for (i, j) in [(1, 0), (0, 1), (2, 2), (3, 3)] {
        u[(i, j)] = c64(1.0, 0.0);
    }
    u
}

/// χ of [`zero_controlled_not`], `½(II + IX − ZI + ZX)`.
pub fn ideal_cnot_chi() -> ChiMatrix {
    chi_from_unitary(&zero_controlled_not()).expect("permutation matrix is unitary")
}

/// The completely depolarizing channel, `χ = I/16`.
pub fn depolarizing_chi() -> ChiMatrix {
    ChiMatrix(CMatrix::identity(PAULI_DIM).scale(c64(1.0 / 16.0, 0.0)))
}

/// `Σ χ_mn E_m ρ E_n†`.
pub fn process_apply(chi: &ChiMatrix, rho: &CMatrix) -> Result<CMatrix> {
    if rho.rows() != 4 || rho.cols() != 4 {
        bail!(Dimension, "two-qubit state must be 4x4");
    }
    let basis = pauli_basis();
    let left: Vec<CMatrix> = basis.iter().map(|e| e * rho).collect();
    let mut out = CMatrix::zeros(4, 4);
    for m in 0..PAULI_DIM {
        for n in 0..PAULI_DIM {
            let c = chi.0[(m, n)];
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let term = &left[m] * &basis[n].adjoint();
            out = &out + &term.scale(c);
        }
    }
    Ok(out)
}

const CHOLESKY_RIDGE: f64 = 1e-12;

fn strict_lower_offset(i: usize, j: usize) -> usize {
    PAULI_DIM + 2 * (i * (i - 1) / 2 + j)
}

fn g_from_parameters(t: &[f64]) -> CMatrix {
    let mut g = CMatrix::zeros(PAULI_DIM, PAULI_DIM);
    for i in 0..PAULI_DIM {
        g[(i, i)] = c64(t[i], 0.0);
        for j in 0..i {
            let k = strict_lower_offset(i, j);
            g[(i, j)] = c64(t[k], t[k + 1]);
        }
    }
    g
}

/// `χ(t) = g g†/Tr(g g†)` with `g` lower-triangular: `t[0..16]` is the real
/// diagonal, followed by (re, im) pairs of the strictly lower entries in
/// row-major order.
pub fn chi_parametrize(t: &[f64]) -> Result<ChiMatrix> {
    if t.len() != CHI_PARAMS {
        bail!(Dimension, "χ parametrization needs {CHI_PARAMS} reals, got {}", t.len());
    }
    let g = g_from_parameters(t);
    let norm = g.frobenius_sqr();
    if !(norm > 0.0) || !norm.is_finite() {
        bail!(Domain, "parameter vector is zero or not finite");
    }
    let m = (&g * &g.adjoint()).scale(c64(1.0 / norm, 0.0));
    // exact Hermitian symmetrization removes round-off asymmetry
    let m = CMatrix::from_fn(PAULI_DIM, PAULI_DIM, |a, b| 0.5 * (m[(a, b)] + m[(b, a)].conj()));
    Ok(ChiMatrix(m))
}

/// Parameters reproducing `chi` via its Cholesky factor.
///
/// The factor is taken of `χ + εI` with `ε = 1e-12`, so numerically singular
/// inputs come back to within about `1e-11` instead of failing.
pub fn chi_to_parameters(chi: &ChiMatrix) -> Result<Vec<f64>> {
    let ridge = CMatrix::identity(PAULI_DIM).scale(c64(CHOLESKY_RIDGE, 0.0));
    let l = (&chi.0 + &ridge).cholesky_psd(1e-9)?;
    let mut t = vec![0.0; CHI_PARAMS];
    for i in 0..PAULI_DIM {
        t[i] = l[(i, i)].re;
        for j in 0..i {
            let k = strict_lower_offset(i, j);
            t[k] = l[(i, j)].re;
            t[k + 1] = l[(i, j)].im;
        }
    }
    Ok(t)
}

/// `w_m = ⟨τ|E_m|ψ⟩*`, so that `P = w† χ w`.
fn outcome_weights(basis: &[CMatrix], prep: &[C64], proj: &[C64]) -> [C64; PAULI_DIM] {
    let mut w = [c64(0.0, 0.0); PAULI_DIM];
    for (m, e) in basis.iter().enumerate() {
        let mut amp = c64(0.0, 0.0);
        for r in 0..4 {
            let row: C64 = (0..4).map(|c| e[(r, c)] * prep[c]).sum();
            amp += proj[r].conj() * row;
        }
        w[m] = amp.conj();
    }
    w
}

fn quadratic_form(chi: &CMatrix, w: &[C64; PAULI_DIM]) -> f64 {
    let mut p = c64(0.0, 0.0);
    for m in 0..PAULI_DIM {
        let row: C64 = (0..PAULI_DIM).map(|n| chi[(m, n)] * w[n]).sum();
        p += w[m].conj() * row;
    }
    p.re
}

fn check_state(v: &[C64], what: &str) -> Result<()> {
    if v.len() != 4 {
        bail!(Dimension, "{what} must have 4 amplitudes");
    }
    let n: f64 = v.iter().map(|a| a.norm_sqr()).sum();
    if (n - 1.0).abs() > 1e-9 {
        bail!(Domain, "{what} is not normalized (norm² {n})");
    }
    Ok(())
}

/// `Tr[|τ⟩⟨τ| E(|ψ⟩⟨ψ|)]`.
pub fn predict_probability(chi: &ChiMatrix, prep: &[C64], proj: &[C64]) -> Result<f64> {
    check_state(prep, "preparation state")?;
    check_state(proj, "projector state")?;
    let w = outcome_weights(&pauli_basis(), prep, proj);
    Ok(quadratic_form(&chi.0, &w))
}

/// Relative coincidence detection efficiencies, normalized to `min = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EfficiencyVector([f64; 4]);

impl EfficiencyVector {
    pub fn uniform() -> Self {
        Self([1.0; 4])
    }

    pub fn new(e: [f64; 4]) -> Result<Self> {
        if e.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            bail!(Domain, "efficiencies must be positive and finite");
        }
        let min = e.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self(e.map(|v| v / min)))
    }

    pub fn values(&self) -> [f64; 4] {
        self.0
    }
}

impl Default for EfficiencyVector {
    fn default() -> Self {
        Self::uniform()
    }
}

/// `eᵢ ∝ 1/Cᵢ` where record `i` routes the light to outcome `i`.
pub fn estimate_efficiencies(records: &[CountRecord; 4]) -> Result<EfficiencyVector> {
    let mut designated = [0.0; 4];
    for (i, r) in records.iter().enumerate() {
        if r.counts[i] == 0 {
            bail!(Degenerate, "routing record {} has no counts in its designated outcome", i + 1);
        }
        designated[i] = r.counts[i] as f64;
    }
    EfficiencyVector::new(designated.map(|c| 1.0 / c))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleOptions {
    /// Independent optimizer starts; the first one begins at `χ = I/16`.
    pub starts: usize,
    pub seed: u64,
    pub lbfgs: LbfgsOptions,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            starts: 4,
            seed: 0,
            lbfgs: LbfgsOptions::default(),
        }
    }
}

/// Least-squares cost over one dataset.
#[derive(Clone, Debug)]
pub struct MleProblem {
    configs: Vec<QptConfig>,
    weights: Vec<[C64; PAULI_DIM]>,
    targets: Vec<f64>,
}

/// One optimizer run of an [`MleProblem`].
#[derive(Clone, Debug, PartialEq)]
pub struct MleRun {
    pub start: usize,
    pub minimum: Minimum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MleResult {
    pub chi: ChiMatrix,
    pub cost: f64,
    /// Predicted minus measured frequency for C1…C4 of every configuration.
    pub residuals: Vec<(QptConfig, [f64; 4])>,
    /// Whether the winning run met the gradient tolerance.
    pub converged: bool,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub start: usize,
}

impl MleProblem {
    /// Efficiency-corrected frequencies `eᵢCᵢ / Σⱼ eⱼCⱼ` for every record.
    pub fn new(data: &QptDataset, eff: &EfficiencyVector) -> Result<Self> {
        let found = data.coverage();
        if found < MIN_CONFIGS {
            return Err(Error::Coverage {
                found,
                required: MIN_CONFIGS,
            });
        }
        let basis = pauli_basis();
        let e = eff.values();
        let mut configs = Vec::with_capacity(data.len());
        let mut weights = Vec::with_capacity(4 * data.len());
        let mut targets = Vec::with_capacity(4 * data.len());
        for (config, record) in data.entries() {
            let corrected: [f64; 4] = core::array::from_fn(|i| e[i] * record.counts[i] as f64);
            let total: f64 = corrected.iter().sum();
            if !(total > 0.0) {
                bail!(Degenerate, "configuration {config} has no counts");
            }
            let prep = config.prep_state();
            for (k, proj) in config.outcome_states().iter().enumerate() {
                weights.push(outcome_weights(&basis, &prep, proj));
                targets.push(corrected[k] / total);
            }
            configs.push(*config);
        }
        Ok(Self {
            configs,
            weights,
            targets,
        })
    }

    /// Cost and its gradient with respect to the 256 parameters.
    pub fn cost_and_gradient(&self, t: &[f64], grad: &mut [f64]) -> f64 {
        let g = g_from_parameters(t);
        let norm = g.frobenius_sqr();
        let mut cost = 0.0;
        let mut s = 0.0;
        // G = Σ 2rₖ wₖ vₖ† with vₖ = g† wₖ
        let mut acc = CMatrix::zeros(PAULI_DIM, PAULI_DIM);
        let mut v = [c64(0.0, 0.0); PAULI_DIM];
        for (w, &target) in self.weights.iter().zip(&self.targets) {
            for j in 0..PAULI_DIM {
                v[j] = (j..PAULI_DIM).map(|i| g[(i, j)].conj() * w[i]).sum();
            }
            let p = v.iter().map(|a| a.norm_sqr()).sum::<f64>() / norm;
            let r = p - target;
            cost += r * r;
            s += 2.0 * r * p;
            let two_r = 2.0 * r;
            for i in 0..PAULI_DIM {
                let wi = w[i] * two_r;
                for j in 0..=i {
                    acc[(i, j)] += wi * v[j].conj();
                }
            }
        }
        for i in 0..PAULI_DIM {
            let gi = (acc[(i, i)] - g[(i, i)] * s) / norm;
            grad[i] = 2.0 * gi.re;
            for j in 0..i {
                let gij = (acc[(i, j)] - g[(i, j)] * s) / norm;
                let k = strict_lower_offset(i, j);
                grad[k] = 2.0 * gij.re;
                grad[k + 1] = 2.0 * gij.im;
            }
        }
        cost
    }

    pub fn cost(&self, t: &[f64]) -> f64 {
        let mut grad = vec![0.0; CHI_PARAMS];
        self.cost_and_gradient(t, &mut grad)
    }

    /// Deterministic starting points: `g = I`, then Gaussian draws.
    pub fn start_points(opts: &MleOptions) -> Vec<Vec<f64>> {
        let mut rng = crate::seeded_rng(opts.seed);
        (0..opts.starts.max(1))
            .map(|s| {
                if s == 0 {
                    let mut t = vec![0.0; CHI_PARAMS];
                    t[..PAULI_DIM].fill(1.0);
                    t
                } else {
                    (0..CHI_PARAMS)
                        .map(|_| StandardNormal.sample(&mut rng))
                        .collect()
                }
            })
            .collect()
    }

    pub fn solve_from(&self, start: usize, t0: &[f64], opts: &LbfgsOptions) -> MleRun {
        let minimum = lbfgs(|t, g| self.cost_and_gradient(t, g), t0, opts);
        MleRun { start, minimum }
    }

    /// Picks the lowest-cost run (ties go to the earlier start) and packages it.
    pub fn finish(&self, runs: &[MleRun]) -> Result<MleResult> {
        let best = runs
            .iter()
            .min_by(|a, b| {
                a.minimum
                    .value
                    .total_cmp(&b.minimum.value)
                    .then(a.start.cmp(&b.start))
            })
            .ok_or_else(|| Error::Domain("no optimizer runs".into()))?;
        let chi = chi_parametrize(&best.minimum.x)?;
        let residuals = self
            .configs
            .iter()
            .enumerate()
            .map(|(c, config)| {
                let r = core::array::from_fn(|k| {
                    let idx = 4 * c + k;
                    quadratic_form(&chi.0, &self.weights[idx]) - self.targets[idx]
                });
                (*config, r)
            })
            .collect();
        Ok(MleResult {
            chi,
            cost: best.minimum.value,
            residuals,
            converged: best.minimum.converged,
            gradient_norm: best.minimum.residual,
            iterations: best.minimum.iterations,
            start: best.start,
        })
    }
}

/// Least-squares χ reconstruction with sequential multi-start L-BFGS.
pub fn mle_reconstruct(
    data: &QptDataset,
    eff: &EfficiencyVector,
    opts: &MleOptions,
) -> Result<MleResult> {
    let problem = MleProblem::new(data, eff)?;
    let runs: Vec<MleRun> = MleProblem::start_points(opts)
        .iter()
        .enumerate()
        .map(|(s, t0)| problem.solve_from(s, t0, &opts.lbfgs))
        .collect();
    problem.finish(&runs)
}

/// Matrix fidelity `|Tr(χₑ†χₜ)|² / (Tr(χₑ†χₑ) Tr(χₜ†χₜ))`.
pub fn chi_fidelity(chi_e: &ChiMatrix, chi_t: &ChiMatrix) -> Result<f64> {
    optics::fidelity(&chi_e.0, &chi_t.0)
}

/// Knobs of a simulated tomography run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QptSimulation {
    pub overlap: Overlap,
    /// Expected post-selected coincidences per configuration.
    pub shots: f64,
    /// Systematic offset added to every set phase (rad).
    pub phase_bias: f64,
    /// Relative detection efficiency of C1…C4 (at most 1).
    pub detector_efficiency: [f64; 4],
}

impl Default for QptSimulation {
    fn default() -> Self {
        Self {
            overlap: Overlap::INDISTINGUISHABLE,
            shots: 2000.0,
            phase_bias: 0.0,
            detector_efficiency: [1.0; 4],
        }
    }
}

impl QptSimulation {
    fn validate(&self) -> Result<()> {
        if !(self.shots > 0.0) || !self.shots.is_finite() {
            bail!(Domain, "shots per configuration must be positive");
        }
        if self
            .detector_efficiency
            .iter()
            .any(|&e| !(e > 0.0 && e <= 1.0))
        {
            bail!(Domain, "detector efficiencies must lie in (0, 1]");
        }
        Ok(())
    }

    /// Detected C1…C4 probabilities with the chip set to `phases`.
    pub fn detected_probabilities(&self, chip: &ChipParameters, phases: [f64; 8]) -> Result<[f64; 4]> {
        let p = chip.clone().with_tunable_phases(phases.map(|v| v + self.phase_bias));
        let u = build_chip_unitary(&p)?;
        let probs = coincidence_probabilities(&u, self.overlap)?;
        Ok(core::array::from_fn(|k| probs[k] * self.detector_efficiency[k]))
    }

    fn sample<R: Rng + ?Sized>(&self, probs: &[f64; 4], rng: &mut R) -> Result<CountRecord> {
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) {
            bail!(Degenerate, "setting has zero coincidence probability");
        }
        sample_counts(probs, self.shots / total, 1.0, rng)
    }
}

/// Simulated counts for every configuration, sampled in order from `rng`.
pub fn run_qpt_simulation<R: Rng + ?Sized>(
    chip: &ChipParameters,
    configs: &[QptConfig],
    sim: &QptSimulation,
    rng: &mut R,
) -> Result<QptDataset> {
    chip.validate()?;
    sim.validate()?;
    let mut data = QptDataset::new();
    for config in configs {
        let probs = sim.detected_probabilities(chip, config.tunable_phases())?;
        data.push(*config, sim.sample(&probs, rng)?);
    }
    Ok(data)
}

/// Counts drawn from the predictions of a known χ.
pub fn simulate_dataset_from_chi<R: Rng + ?Sized>(
    chi: &ChiMatrix,
    configs: &[QptConfig],
    shots: f64,
    rng: &mut R,
) -> Result<QptDataset> {
    let sim = QptSimulation {
        shots,
        ..Default::default()
    };
    sim.validate()?;
    let basis = pauli_basis();
    let mut data = QptDataset::new();
    for config in configs {
        let prep = config.prep_state();
        let probs: [f64; 4] = {
            let outs = config.outcome_states();
            core::array::from_fn(|k| quadratic_form(&chi.0, &outcome_weights(&basis, &prep, &outs[k])).max(0.0))
        };
        // the four projectors are complete, so the row sums to Tr E(ρ) ≈ 1
        let total: f64 = probs.iter().sum();
        let probs = probs.map(|p| p / total.max(1.0));
        data.push(*config, sim.sample(&probs, rng)?);
    }
    Ok(data)
}

/// Preparation that routes the experiment's input to outcome `k` through
/// the ideal gate, measured in the `hh` basis.
pub fn routing_config(k: usize) -> QptConfig {
    let (out1, out2) = (k >= 2, k % 2 == 1);
    // invert |q1, q2⟩ → |q1, q2 ⊕ ¬q1⟩
    let (in1, in2) = (out1, out2 ^ !out1);
    let label = |bit: bool| if bit { StateLabel::V } else { StateLabel::H };
    QptConfig {
        prep: [label(in1), label(in2)],
        meas: [BasisLabel::Hv, BasisLabel::Hv],
    }
}

/// The four efficiency-calibration runs: record `k` sends the light to
/// outcome `k`.
pub fn simulate_efficiency_routing<R: Rng + ?Sized>(
    chip: &ChipParameters,
    sim: &QptSimulation,
    rng: &mut R,
) -> Result<[CountRecord; 4]> {
    sim.validate()?;
    let mut out: [CountRecord; 4] = core::array::from_fn(|_| CountRecord::from_counts([0; 4]));
    for (k, slot) in out.iter_mut().enumerate() {
        let probs = sim.detected_probabilities(chip, routing_config(k).tunable_phases())?;
        // fixed pair number, so designated counts scale with efficiency
        let pairs = sim.shots * 9.0;
        *slot = sample_counts(&probs, pairs, 1.0, rng)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    fn basis_rho(k: usize) -> CMatrix {
        let mut r = CMatrix::zeros(4, 4);
        r[(k, k)] = c64(1.0, 0.0);
        r
    }

    #[test]
    fn labels_round_trip() {
        for s in STANDARD_CONFIGS {
            let c: QptConfig = s.parse().unwrap();
            assert_eq!(c.label(), s);
        }
        assert!("HHh".parse::<QptConfig>().is_err());
        assert!("hhHH".parse::<QptConfig>().is_err());
        assert!("XXhh".parse::<QptConfig>().is_err());
        let mut uniq = standard_configs();
        uniq.dedup();
        assert_eq!(uniq.len(), 64);
    }

    #[test]
    fn identity_process() {
        let mut m = CMatrix::zeros(16, 16);
        m[(0, 0)] = c64(1.0, 0.0);
        let chi = ChiMatrix::new(m).unwrap();
        let psi = QptConfig::from_str("DRhh").unwrap().prep_state();
        let rho = CMatrix::from_fn(4, 4, |a, b| psi[a] * psi[b].conj());
        assert!(process_apply(&chi, &rho).unwrap().max_abs_diff(&rho) < 1e-15);
        assert!((predict_probability(&chi, &psi, &psi).unwrap() - 1.0).abs() < 1e-14);
        let orth = product_state(StateLabel::L, StateLabel::H);
        let psi2 = product_state(StateLabel::R, StateLabel::H);
        assert!(predict_probability(&chi, &psi2, &orth).unwrap().abs() < 1e-15);
    }

    #[test]
    fn ideal_gate_truth_table() {
        let chi = ideal_cnot_chi();
        assert!((chi.matrix().trace() - c64(1.0, 0.0)).norm() < 1e-15);
        let image = [1, 0, 2, 3];
        for k in 0..4 {
            let out = process_apply(&chi, &basis_rho(k)).unwrap();
            assert!(out.max_abs_diff(&basis_rho(image[k])) < 1e-14);
        }
        // ½(II + IX − ZI + ZX)
        let m = chi.matrix();
        let (ii, ix, zi, zx) = (0, 1, 12, 13);
        let u = [(ii, 1.0), (ix, 1.0), (zi, -1.0), (zx, 1.0)];
        for &(a, sa) in &u {
            for &(b, sb) in &u {
                assert!((m[(a, b)] - c64(0.25 * sa * sb, 0.0)).norm() < 1e-15);
            }
        }
        let ev = chi.eigenvalues();
        assert!((ev[15] - 1.0).abs() < 1e-12 && ev[14].abs() < 1e-12);
    }

    #[test]
    fn depolarizing_channel() {
        let chi = depolarizing_chi();
        let psi = product_state(StateLabel::D, StateLabel::L);
        let rho = CMatrix::from_fn(4, 4, |a, b| psi[a] * psi[b].conj());
        let out = process_apply(&chi, &rho).unwrap();
        assert!(out.max_abs_diff(&CMatrix::identity(4).scale(c64(0.25, 0.0))) < 1e-15);
        let f = chi_fidelity(&ideal_cnot_chi(), &chi).unwrap();
        assert!((f - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn parametrization_examples() {
        let mut t = vec![0.0; CHI_PARAMS];
        t[0] = 0.7;
        let chi = chi_parametrize(&t).unwrap();
        assert!((chi.matrix()[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!(chi.matrix().frobenius_sqr() - 1.0 < 1e-15);
        assert!(chi_parametrize(&vec![0.0; CHI_PARAMS]).is_err());
        assert!(chi_parametrize(&[1.0; 3]).is_err());

        let mut rng = seeded_rng(2);
        let t: Vec<f64> = (0..CHI_PARAMS).map(|_| rng.random_range(-1.0..1.0)).collect();
        let chi = chi_parametrize(&t).unwrap();
        assert!(ChiMatrix::new(chi.matrix().clone()).is_ok());
        let back = chi_parametrize(&chi_to_parameters(&chi).unwrap()).unwrap();
        assert!(back.matrix().max_abs_diff(chi.matrix()) < 1e-10);

        let ideal = ideal_cnot_chi();
        let back = chi_parametrize(&chi_to_parameters(&ideal).unwrap()).unwrap();
        assert!(back.matrix().max_abs_diff(ideal.matrix()) < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let configs = standard_configs();
        let data: QptDataset = configs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let n = i as u64;
                (*c, CountRecord::from_counts([10 + n, 3 * n + 1, 7, 40 - n / 2]))
            })
            .collect();
        let problem = MleProblem::new(&data, &EfficiencyVector::new([1.0, 1.2, 1.1, 1.3]).unwrap()).unwrap();
        let mut rng = seeded_rng(8);
        let t: Vec<f64> = (0..CHI_PARAMS).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut grad = vec![0.0; CHI_PARAMS];
        problem.cost_and_gradient(&t, &mut grad);
        for k in [0, 5, 15, 16, 17, 100, 201, 255] {
            let h = 1e-6;
            let mut tp = t.clone();
            tp[k] += h;
            let mut tm = t.clone();
            tm[k] -= h;
            let fd = (problem.cost(&tp) - problem.cost(&tm)) / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-7 * (1.0 + fd.abs()), "k={k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn coverage_is_enforced() {
        let data: QptDataset = standard_configs()
            .into_iter()
            .take(40)
            .map(|c| (c, CountRecord::from_counts([1, 1, 1, 1])))
            .collect();
        let err = mle_reconstruct(&data, &EfficiencyVector::uniform(), &MleOptions::default()).unwrap_err();
        assert_eq!(err, Error::Coverage { found: 40, required: 64 });
    }

    #[test]
    fn efficiency_examples() {
        let rec = |k: usize, c: u64| {
            let mut counts = [0; 4];
            counts[k] = c;
            CountRecord::from_counts(counts)
        };
        let e = estimate_efficiencies(&[rec(0, 500), rec(1, 500), rec(2, 500), rec(3, 500)]).unwrap();
        assert_eq!(e.values(), [1.0; 4]);
        let e = estimate_efficiencies(&[rec(0, 2000), rec(1, 1000), rec(2, 2000), rec(3, 2000)]).unwrap();
        assert_eq!(e.values(), [1.0, 2.0, 1.0, 1.0]);
        assert!(estimate_efficiencies(&[rec(0, 0), rec(1, 1), rec(2, 1), rec(3, 1)]).is_err());
    }

    #[test]
    fn routing_configs_hit_their_outcome() {
        let chi = ideal_cnot_chi();
        for k in 0..4 {
            let c = routing_config(k);
            let outs = c.outcome_states();
            let p = predict_probability(&chi, &c.prep_state(), &outs[k]).unwrap();
            assert!((p - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ideal_chip_matches_ideal_gate_on_all_settings() {
        let chip = ChipParameters::ideal();
        let sim = QptSimulation::default();
        let chi = ideal_cnot_chi();
        for config in standard_configs() {
            let p = sim.detected_probabilities(&chip, config.tunable_phases()).unwrap();
            let outs = config.outcome_states();
            for k in 0..4 {
                let q = predict_probability(&chi, &config.prep_state(), &outs[k]).unwrap();
                assert!((9.0 * p[k] - q).abs() < 1e-12, "{config} outcome {k}");
            }
        }
    }

    #[test]
    fn simulation_is_seeded() {
        let configs = standard_configs();
        let chip = ChipParameters::ideal();
        let sim = QptSimulation::default();
        let a = run_qpt_simulation(&chip, &configs, &sim, &mut seeded_rng(11)).unwrap();
        let b = run_qpt_simulation(&chip, &configs, &sim, &mut seeded_rng(11)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
    }
}
