//! Component matrices and the six-mode chip unitary.
//!
//! The chip is `U = U₂ · CNOT · U₁`:
//!
//! - `U₁` holds the two preparation gates. Each is a Mach-Zehnder
//!   interferometer followed by a phase shifter on the upper rail,
//!   `P(φ_z) · MZI(φ_x)`.
//! - `CNOT = B₃ T₂ B₂ T₁ B₁`. `B₁`, `B₃` are 50:50 couplers on the target
//!   rails (modes 4–5), `T₁`, `T₂` static phases on the same rails, and `B₂`
//!   places 1/3 couplers on the mode pairs (1,2), (3,4), (5,6).
//! - `U₂` holds the two measurement gates, a phase shifter followed by an
//!   interferometer, `MZI(φ_x) · P(φ_z)`.
//!
//! Parameter positions (1-based, as in the config file):
//!
//! | block | ratios      | phases                                 |
//! |-------|-------------|----------------------------------------|
//! | `U₁`  | R1–R2, R3–R4 | φ1 (MZI) φ2 (Rz) qubit 1, φ3 φ4 qubit 2 |
//! | CNOT  | R5, R6–R8, R9 | θ1 (T₁), θ2 (T₂)                       |
//! | `U₂`  | R10–R11, R12–R13 | φ5 (Rz) φ6 (MZI) qubit 1, φ7 φ8 qubit 2 |
//!
//! With this layout the preparation phase table (H → (π,π), V → (0,0),
//! D → (π/2,π/2), A → (π/2,3π/2), R → (π/2,π), L → (π/2,0)) and the
//! measurement table (hv → (π,π), da → (π/2,π/2), rl → (0,π/2)) produce the
//! textbook states exactly, and the post-selected logical gate of the ideal
//! chip is the zero-controlled NOT
//! `|00⟩→|01⟩, |01⟩→|00⟩, |10⟩→|10⟩, |11⟩→|11⟩` with success probability 1/9.
//! Qubit 1 (modes 2–3) is the control; its `|0⟩` rail is mode 2.

use alloc::vec::Vec;

use crate::error::{bail, Error, Result};
use crate::linalg::{c64, CMatrix, RMatrix, C64};
use crate::math;

/// Tolerance for calling a matrix unitary.
pub const UNITARY_TOL: f64 = 1e-10;

/// Number of optical modes on the chip.
pub const MODES: usize = 6;

/// Directional coupler with power reflectivity `r` (the fraction of power
/// that stays in its input waveguide).
pub fn dc_matrix(r: f64) -> Result<CMatrix> {
    if !(0.0..=1.0).contains(&r) {
        bail!(Domain, "reflectivity {r} outside [0, 1]");
    }
    let s = c64(math::sqrt(r), 0.0);
    let t = c64(0.0, math::sqrt(1.0 - r));
    CMatrix::from_vec(2, 2, alloc::vec![s, t, t, s])
}

/// Phase shifter on the upper mode of a pair: `diag(e^{iφ}, 1)`.
pub fn phase_matrix(phi: f64) -> CMatrix {
    CMatrix::diagonal(&[C64::from_polar(1.0, phi), c64(1.0, 0.0)])
}

/// `DC(r2) · P(φ) · DC(r1)`.
pub fn mzi_matrix(r1: f64, r2: f64, phi: f64) -> Result<CMatrix> {
    let first = dc_matrix(r1)?;
    let second = dc_matrix(r2)?;
    Ok(&(&second * &phase_matrix(phi)) * &first)
}

/// Preparation gate: interferometer, then a phase on the upper rail.
pub fn preparation_gate(r1: f64, r2: f64, phi_x: f64, phi_z: f64) -> Result<CMatrix> {
    Ok(&phase_matrix(phi_z) * &mzi_matrix(r1, r2, phi_x)?)
}

/// Measurement gate: a phase on the upper rail, then the interferometer.
pub fn measurement_gate(r1: f64, r2: f64, phi_z: f64, phi_x: f64) -> Result<CMatrix> {
    Ok(&mzi_matrix(r1, r2, phi_x)? * &phase_matrix(phi_z))
}

/// The 23 real numbers that define the chip unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct ChipParameters {
    /// Power reflectivities R1…R13.
    pub splitting_ratios: [f64; 13],
    /// Heater phases φ1…φ8 in radians.
    pub tunable_phases: [f64; 8],
    /// Static phases θ1, θ2 in radians.
    pub static_phases: [f64; 2],
}

/// Tunable phases that set every single-qubit gate to the identity.
pub const IDENTITY_GATE_PHASES: [f64; 8] = [math::PI; 8];

impl ChipParameters {
    /// Design values: 1/3 couplers at R6–R8, balanced couplers elsewhere,
    /// zero static phases, all tunable phases zero.
    pub fn ideal() -> Self {
        let mut r = [0.5; 13];
        r[5] = 1.0 / 3.0;
        r[6] = 1.0 / 3.0;
        r[7] = 1.0 / 3.0;
        Self {
            splitting_ratios: r,
            tunable_phases: [0.0; 8],
            static_phases: [0.0; 2],
        }
    }

    pub fn with_tunable_phases(mut self, phases: [f64; 8]) -> Self {
        self.tunable_phases = phases;
        self
    }

    /// Reflectivity `Rj` by its 1-based index.
    pub fn ratio(&self, j: usize) -> f64 {
        self.splitting_ratios[j - 1]
    }

    /// Phase `φj` by its 1-based index.
    pub fn phase(&self, j: usize) -> f64 {
        self.tunable_phases[j - 1]
    }

    pub fn validate(&self) -> Result<()> {
        for (j, &r) in self.splitting_ratios.iter().enumerate() {
            if !(0.0..=1.0).contains(&r) {
                bail!(Domain, "R{} = {} outside [0, 1]", j + 1, r);
            }
        }
        let finite = self
            .tunable_phases
            .iter()
            .chain(&self.static_phases)
            .all(|p| p.is_finite());
        if !finite {
            bail!(Domain, "phases must be finite");
        }
        Ok(())
    }
}

impl Default for ChipParameters {
    fn default() -> Self {
        Self::ideal()
    }
}

fn two_gate_layer(upper: &CMatrix, lower: &CMatrix) -> Result<CMatrix> {
    let a = CMatrix::embed(MODES, 1, upper)?;
    let b = CMatrix::embed(MODES, 3, lower)?;
    a.matmul(&b)
}

/// `U₁`: preparation gates on modes 2–3 and 4–5.
pub fn input_layer(p: &ChipParameters) -> Result<CMatrix> {
    two_gate_layer(
        &preparation_gate(p.ratio(1), p.ratio(2), p.phase(1), p.phase(2))?,
        &preparation_gate(p.ratio(3), p.ratio(4), p.phase(3), p.phase(4))?,
    )
}

/// `U₂`: measurement gates on modes 2–3 and 4–5.
pub fn output_layer(p: &ChipParameters) -> Result<CMatrix> {
    two_gate_layer(
        &measurement_gate(p.ratio(10), p.ratio(11), p.phase(5), p.phase(6))?,
        &measurement_gate(p.ratio(12), p.ratio(13), p.phase(7), p.phase(8))?,
    )
}

/// `B₃ T₂ B₂ T₁ B₁`.
pub fn cnot_block(p: &ChipParameters) -> Result<CMatrix> {
    let b1 = CMatrix::embed(MODES, 3, &dc_matrix(p.ratio(5))?)?;
    let t1 = CMatrix::embed(MODES, 3, &phase_matrix(p.static_phases[0]))?;
    let mut b2 = CMatrix::identity(MODES);
    for (k, j) in [6, 7, 8].into_iter().enumerate() {
        b2 = b2.matmul(&CMatrix::embed(MODES, 2 * k, &dc_matrix(p.ratio(j))?)?)?;
    }
    let t2 = CMatrix::embed(MODES, 3, &phase_matrix(p.static_phases[1]))?;
    let b3 = CMatrix::embed(MODES, 3, &dc_matrix(p.ratio(9))?)?;
    [t2, b2, t1, b1]
        .iter()
        .try_fold(b3, |acc, m| acc.matmul(m))
}

/// `U = U₂ · CNOT · U₁`.
pub fn build_chip_unitary(p: &ChipParameters) -> Result<CMatrix> {
    p.validate()?;
    let u = output_layer(p)?
        .matmul(&cnot_block(p)?)?
        .matmul(&input_layer(p)?)?;
    debug_assert!(u.is_unitary(UNITARY_TOL));
    Ok(u)
}

/// Matrix fidelity `|Tr(Ue†Ut)|² / (Tr(Ue†Ue) Tr(Ut†Ut))`.
pub fn fidelity(ue: &CMatrix, ut: &CMatrix) -> Result<f64> {
    if ue.rows() != ut.rows() || ue.cols() != ut.cols() {
        bail!(
            Dimension,
            "fidelity between {}x{} and {}x{}",
            ue.rows(),
            ue.cols(),
            ut.rows(),
            ut.cols()
        );
    }
    let overlap: C64 = ue
        .as_slice()
        .iter()
        .zip(ut.as_slice())
        .map(|(a, b)| a.conj() * b)
        .sum();
    let denom = ue.frobenius_sqr() * ut.frobenius_sqr();
    if denom <= 0.0 {
        bail!(Domain, "fidelity of an all-zero matrix");
    }
    Ok((overlap.norm_sqr() / denom).min(1.0))
}

/// Iteration cap for [`sinkhorn_scale`].
pub const SINKHORN_MAX_ITER: usize = 10_000;
/// Row/column-sum tolerance for [`sinkhorn_scale`].
pub const SINKHORN_TOL: f64 = 1e-10;

/// Result of Sinkhorn-Knopp balancing.
#[derive(Clone, Debug)]
pub struct SinkhornScaling {
    pub matrix: RMatrix,
    pub row_factors: Vec<f64>,
    pub col_factors: Vec<f64>,
    pub iterations: usize,
}

/// Scales a non-negative square matrix to doubly-stochastic form
/// `D₁ M D₂` by alternating row and column normalization.
pub fn sinkhorn_scale(m: &RMatrix) -> Result<SinkhornScaling> {
    let n = m.rows();
    if m.cols() != n {
        bail!(Dimension, "Sinkhorn scaling needs a square matrix");
    }
    if m.as_slice().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        bail!(Domain, "power matrix entries must be finite and non-negative");
    }
    if m.row_sums().iter().chain(&m.col_sums()).any(|&s| s <= 0.0) {
        bail!(Domain, "every row and column needs a positive sum");
    }
    let mut r = alloc::vec![1.0; n];
    let mut c = alloc::vec![1.0; n];
    let scaled = |r: &[f64], c: &[f64]| RMatrix::from_fn(n, n, |i, j| r[i] * m[(i, j)] * c[j]);
    let residual = |s: &RMatrix| {
        s.row_sums()
            .iter()
            .chain(&s.col_sums())
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max)
    };
    for it in 0..=SINKHORN_MAX_ITER {
        let s = scaled(&r, &c);
        let res = residual(&s);
        if res < SINKHORN_TOL {
            return Ok(SinkhornScaling {
                matrix: s,
                row_factors: r,
                col_factors: c,
                iterations: it,
            });
        }
        if it == SINKHORN_MAX_ITER {
            return Err(Error::Convergence {
                iterations: it,
                residual: res,
            });
        }
        for (i, ri) in r.iter_mut().enumerate() {
            let sum: f64 = (0..n).map(|j| m[(i, j)] * c[j]).sum();
            *ri = 1.0 / sum;
        }
        for (j, cj) in c.iter_mut().enumerate() {
            let sum: f64 = (0..n).map(|i| r[i] * m[(i, j)]).sum();
            *cj = 1.0 / sum;
        }
    }
    unreachable!()
}

/// Logical two-qubit basis state; qubit 1 on modes 2–3, qubit 2 on 4–5.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LogicalState {
    pub qubit1: bool,
    pub qubit2: bool,
}

impl LogicalState {
    pub const ALL: [LogicalState; 4] = [
        LogicalState::new(false, false),
        LogicalState::new(false, true),
        LogicalState::new(true, false),
        LogicalState::new(true, true),
    ];

    pub const fn new(qubit1: bool, qubit2: bool) -> Self {
        Self { qubit1, qubit2 }
    }

    /// Index in `|00⟩, |01⟩, |10⟩, |11⟩` order, which is also the
    /// coincidence order C1…C4.
    pub fn index(self) -> usize {
        2 * self.qubit1 as usize + self.qubit2 as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::new(i & 2 != 0, i & 1 != 0)
    }

    /// Zero-based mode indices occupied by the two photons.
    pub fn modes(self) -> [usize; 2] {
        [1 + self.qubit1 as usize, 3 + self.qubit2 as usize]
    }

    /// Occupation numbers over the six modes.
    pub fn occupations(self) -> [usize; MODES] {
        let mut occ = [0; MODES];
        for m in self.modes() {
            occ[m] = 1;
        }
        occ
    }
}
