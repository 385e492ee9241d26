//! Two-photon output statistics: permanents, transition probabilities with
//! partial distinguishability, coincidence sampling and HOM curves.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{bail, Result};
use crate::linalg::{CMatrix, C64};
use crate::optics::{LogicalState, MODES};

/// Photon occupation numbers, one entry per optical mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FockState(Vec<usize>);

impl FockState {
    pub fn new(occupations: Vec<usize>) -> Self {
        Self(occupations)
    }

    pub fn occupations(&self) -> &[usize] {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn photon_count(&self) -> usize {
        self.0.iter().sum()
    }

    /// Mode index of every photon, repeated by occupation.
    pub fn mode_list(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(m, &n)| core::iter::repeat_n(m, n))
            .collect()
    }

    /// `∏ nₖ!`
    pub fn factorial_weight(&self) -> f64 {
        self.0
            .iter()
            .map(|&n| (1..=n).map(|k| k as f64).product::<f64>())
            .product()
    }

    /// Every state with `photons` photons spread over `modes` modes, in
    /// reverse-lexicographic order of occupations.
    pub fn enumerate(modes: usize, photons: usize) -> Vec<FockState> {
        fn rec(prefix: &mut Vec<usize>, left: usize, modes: usize, out: &mut Vec<FockState>) {
            if prefix.len() + 1 == modes {
                prefix.push(left);
                out.push(FockState(prefix.clone()));
                prefix.pop();
                return;
            }
            for k in (0..=left).rev() {
                prefix.push(k);
                rec(prefix, left - k, modes, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if modes > 0 {
            rec(&mut Vec::new(), photons, modes, &mut out);
        }
        out
    }
}

impl From<LogicalState> for FockState {
    fn from(s: LogicalState) -> Self {
        FockState(s.occupations().to_vec())
    }
}

/// Input state of every experiment: one photon in mode 2 and one in mode 4.
pub fn logical_input() -> FockState {
    LogicalState::new(false, false).into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PermanentMethod {
    /// Sum over all `n!` permutations.
    ExactSum,
    /// Ryser's inclusion–exclusion formula in Gray-code order.
    Ryser,
}

pub const EXACT_SUM_MAX_N: usize = 8;
pub const RYSER_MAX_N: usize = 20;

pub fn permanent(m: &CMatrix, method: PermanentMethod) -> Result<C64> {
    if !m.is_square() {
        bail!(Domain, "permanent of a {}x{} matrix", m.rows(), m.cols());
    }
    let n = m.rows();
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    match method {
        PermanentMethod::ExactSum if n > EXACT_SUM_MAX_N => {
            bail!(Domain, "exact-sum permanent limited to n <= {EXACT_SUM_MAX_N}")
        }
        PermanentMethod::Ryser if n > RYSER_MAX_N => {
            bail!(Domain, "Ryser permanent limited to n <= {RYSER_MAX_N}")
        }
        PermanentMethod::ExactSum => Ok(permanent_exact(m)),
        PermanentMethod::Ryser => Ok(permanent_ryser(m)),
    }
}

fn permanent_exact(m: &CMatrix) -> C64 {
    // Heap's algorithm over column permutations
    let n = m.rows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let term = |p: &[usize]| (0..n).map(|i| m[(i, p[i])]).product::<C64>();
    let mut total = term(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            total += term(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    total
}

fn permanent_ryser(m: &CMatrix) -> C64 {
    let n = m.rows();
    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    let mut in_set = vec![false; n];
    let mut total = C64::new(0.0, 0.0);
    let mut size = 0usize;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        let sign = if in_set[j] { -1.0 } else { 1.0 };
        in_set[j] = !in_set[j];
        if in_set[j] {
            size += 1;
        } else {
            size -= 1;
        }
        for (i, s) in row_sums.iter_mut().enumerate() {
            *s += m[(i, j)] * sign;
        }
        let prod: C64 = row_sums.iter().product();
        if size.is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        -total
    } else {
        total
    }
}

/// Rows from the output occupations, columns from the input occupations,
/// each repeated by multiplicity.
pub fn submatrix_for_transition(
    u: &CMatrix,
    input: &FockState,
    output: &FockState,
) -> Result<CMatrix> {
    if input.photon_count() != output.photon_count() {
        bail!(
            Domain,
            "input has {} photons, output {}",
            input.photon_count(),
            output.photon_count()
        );
    }
    if input.modes() != u.cols() || output.modes() != u.rows() {
        bail!(
            Dimension,
            "states over {}/{} modes for a {}x{} transfer matrix",
            input.modes(),
            output.modes(),
            u.rows(),
            u.cols()
        );
    }
    u.select(&output.mode_list(), &input.mode_list())
}

/// `|Perm(U_in,out)|² / (∏ iₖ! ∏ jₖ!)` for fully indistinguishable photons.
pub fn prob_indistinguishable(u: &CMatrix, input: &FockState, output: &FockState) -> Result<f64> {
    let sub = submatrix_for_transition(u, input, output)?;
    let perm = permanent(&sub, PermanentMethod::Ryser)?;
    Ok(perm.norm_sqr() / (input.factorial_weight() * output.factorial_weight()))
}

/// Single-photon wavefunction overlap `x ∈ [0, 1]` between the two photons.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Overlap(f64);

impl Overlap {
    pub const INDISTINGUISHABLE: Overlap = Overlap(1.0);
    pub const DISTINGUISHABLE: Overlap = Overlap(0.0);

    pub fn new(x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            bail!(Domain, "overlap {x} outside [0, 1]");
        }
        Ok(Self(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Two-photon transition probability with overlap `x`.
///
/// With `U_in,out = [[a, b], [c, d]]` this is
/// `(|a|²|d|² + |b|²|c|² + x²·2Re(ad(bc)*)) / ∏ jₖ!`.
pub fn prob_partial(
    u: &CMatrix,
    input: &FockState,
    output: &FockState,
    x: Overlap,
) -> Result<f64> {
    if input.photon_count() != 2 || input.occupations().iter().any(|&n| n > 1) {
        bail!(
            Unsupported,
            "partial distinguishability needs two photons in distinct input modes"
        );
    }
    let s = submatrix_for_transition(u, input, output)?;
    let (a, b, c, d) = (s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)]);
    let classical = a.norm_sqr() * d.norm_sqr() + b.norm_sqr() * c.norm_sqr();
    let interference = 2.0 * (a * d * (b * c).conj()).re;
    let p = (classical + x.0 * x.0 * interference) / output.factorial_weight();
    Ok(p.max(0.0))
}

/// Probabilities of the four logical coincidences C1…C4 for a logical input.
pub fn coincidence_probabilities_from(
    u: &CMatrix,
    input: LogicalState,
    x: Overlap,
) -> Result<[f64; 4]> {
    let input = FockState::from(input);
    let mut p = [0.0; 4];
    for (k, out) in LogicalState::ALL.iter().enumerate() {
        p[k] = prob_partial(u, &input, &FockState::from(*out), x)?;
    }
    Ok(p)
}

/// Probabilities of C1…C4 for the experimental input `|0,1,0,1,0,0⟩`.
pub fn coincidence_probabilities(u: &CMatrix, x: Overlap) -> Result<[f64; 4]> {
    coincidence_probabilities_from(u, LogicalState::new(false, false), x)
}

/// Two-photon amplitudes between logical basis states,
/// `T[out][in] = Perm(U_in,out)`.
pub fn logical_transfer(u: &CMatrix) -> Result<CMatrix> {
    if u.rows() != MODES || u.cols() != MODES {
        bail!(Dimension, "logical transfer needs the 6-mode chip unitary");
    }
    let mut t = CMatrix::zeros(4, 4);
    for input in LogicalState::ALL {
        for output in LogicalState::ALL {
            let s = u.select(&output.modes(), &input.modes())?;
            t[(output.index(), input.index())] = permanent(&s, PermanentMethod::Ryser)?;
        }
    }
    Ok(t)
}

/// Two-fold coincidence counts C1…C4 of one exposure.
#[derive(Clone, Debug, PartialEq)]
pub struct CountRecord {
    pub counts: [u64; 4],
    /// Photon-pair rate ν (pairs per second).
    pub pair_rate: f64,
    /// Exposure time T (seconds).
    pub exposure: f64,
}

impl CountRecord {
    /// Bare counts without exposure metadata.
    pub fn from_counts(counts: [u64; 4]) -> Self {
        Self {
            counts,
            pair_rate: 0.0,
            exposure: 0.0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Draws `round(νT)` photon pairs and distributes them multinomially over
/// C1…C4 and a discarded "no coincidence" bucket holding `1 − ΣPⱼ`.
pub fn sample_counts<R: Rng + ?Sized>(
    probabilities: &[f64; 4],
    pair_rate: f64,
    exposure: f64,
    rng: &mut R,
) -> Result<CountRecord> {
    let mean_pairs = pair_rate * exposure;
    if !(mean_pairs > 0.0) || !mean_pairs.is_finite() {
        bail!(Domain, "pair rate times exposure must be positive, got {mean_pairs}");
    }
    if probabilities.iter().any(|&p| !(p >= 0.0)) {
        bail!(Domain, "negative outcome probability");
    }
    let sum: f64 = probabilities.iter().sum();
    if sum > 1.0 + 1e-9 {
        bail!(Domain, "outcome probabilities sum to {sum} > 1");
    }
    let mut remaining = libm::round(mean_pairs) as u64;
    let mut mass = sum.max(1.0);
    let mut counts = [0u64; 4];
    for (c, &p) in counts.iter_mut().zip(probabilities) {
        if remaining == 0 || mass <= 0.0 {
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q)
                .expect("binomial parameters validated above")
                .sample(rng)
        };
        *c = k;
        remaining -= k;
        mass -= p;
    }
    Ok(CountRecord {
        counts,
        pair_rate,
        exposure,
    })
}

/// Coincidence probability between two output modes for photons injected in
/// two input modes, for every overlap in `overlaps`.
pub fn hom_curve(
    u: &CMatrix,
    input_modes: [usize; 2],
    output_modes: [usize; 2],
    overlaps: &[f64],
) -> Result<Vec<f64>> {
    let n = u.rows();
    if input_modes[0] == input_modes[1] || output_modes[0] == output_modes[1] {
        bail!(Domain, "HOM curve needs two distinct input and output modes");
    }
    if input_modes.iter().chain(&output_modes).any(|&m| m >= n) {
        bail!(Dimension, "mode index outside a {n}-mode transfer matrix");
    }
    let mut input = vec![0; n];
    let mut output = vec![0; n];
    for m in input_modes {
        input[m] = 1;
    }
    for m in output_modes {
        output[m] = 1;
    }
    let (input, output) = (FockState(input), FockState(output));
    overlaps
        .iter()
        .map(|&x| prob_partial(u, &input, &output, Overlap::new(x)?))
        .collect()
}

/// `(P_max − P_min) / P_max` over a sampled curve.
pub fn visibility(curve: &[f64]) -> Result<f64> {
    let max = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = curve.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) {
        bail!(Degenerate, "visibility of a curve with no positive value");
    }
    Ok((max - min) / max)
}

/// Overlap that produces visibility `v` on a balanced splitter (`V = x²`).
pub fn overlap_for_visibility(v: f64) -> Result<Overlap> {
    if !(0.0..=1.0).contains(&v) {
        bail!(Domain, "visibility {v} outside [0, 1]");
    }
    Overlap::new(crate::math::sqrt(v))
}
