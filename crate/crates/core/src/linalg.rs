//! Small dense complex and real matrices.
//!
//! Everything in this workspace works with matrices of size 16 or smaller,
//! so a row-major `Vec` with straightforward loops is all that is needed.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{bail, Result};
use crate::math;

pub type C64 = Complex64;

/// Shorthand constructor for a complex number.
#[inline]
pub const fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Wraps row-major data; the length must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            bail!(
                Dimension,
                "{} entries cannot fill a {}x{} matrix",
                data.len(),
                rows,
                cols
            );
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a closure over `(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// Bounds-checked element access.
    pub fn get(&self, row: usize, col: usize) -> Option<C64> {
        (row < self.rows && col < self.cols).then(|| self.data[row * self.cols + col])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// Matrix product with a shape check.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            bail!(
                Dimension,
                "cannot multiply {}x{} by {}x{}",
                self.rows,
                self.cols,
                rhs.rows,
                rhs.cols
            );
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            bail!(
                Dimension,
                "vector of length {} for a {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            );
        }
        Ok((0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect())
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        Self::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |i, j| {
            self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)]
        })
    }

    /// Embeds `block` into an `n`×`n` identity with its top-left corner at
    /// `(offset, offset)`.
    pub fn embed(n: usize, offset: usize, block: &Self) -> Result<Self> {
        if !block.is_square() || offset + block.rows > n {
            bail!(
                Dimension,
                "{}x{} block at offset {} does not fit in {}x{}",
                block.rows,
                block.cols,
                offset,
                n,
                n
            );
        }
        let mut m = Self::identity(n);
        for i in 0..block.rows {
            for j in 0..block.cols {
                m[(offset + i, offset + j)] = block[(i, j)];
            }
        }
        Ok(m)
    }

    /// Picks the listed rows and columns (repeats allowed).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        if rows.iter().any(|&r| r >= self.rows) || cols.iter().any(|&c| c >= self.cols) {
            bail!(Dimension, "row/column selection out of bounds");
        }
        Ok(Self::from_fn(rows.len(), cols.len(), |i, j| {
            self[(rows[i], cols[j])]
        }))
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |U†U − I|`, the unitarity defect.
    pub fn unitarity_defect(&self) -> f64 {
        let g = &self.adjoint() * self;
        g.max_abs_diff(&Self::identity(self.cols))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square() && self.unitarity_defect() < tol
    }

    /// Largest `|A − A†|` entry.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Elementwise squared moduli.
    pub fn abs_sqr(&self) -> RMatrix {
        RMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    ///
    /// The `n`×`n` Hermitian `H = A + iB` is mapped to the real symmetric
    /// `[[A, −B], [B, A]]`, whose spectrum is that of `H` with every value
    /// doubled.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            bail!(Dimension, "eigenvalues of a non-square matrix");
        }
        let n = self.rows;
        let m = 2 * n;
        let mut s = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                // symmetrize to absorb rounding in the input
                let z = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                s[i * m + j] = z.re;
                s[(i + n) * m + j + n] = z.re;
                s[i * m + j + n] = -z.im;
                s[(i + n) * m + j] = z.im;
            }
        }
        let mut ev = symmetric_eigenvalues(&mut s, m)?;
        ev.sort_by(f64::total_cmp);
        Ok(ev.into_iter().step_by(2).collect())
    }

    /// Lower-triangular `L` with real non-negative diagonal such that
    /// `L L† = self`, for a positive-semidefinite Hermitian input.
    ///
    /// Pivots in `[-tol, 0]` count as zero. Their column must then vanish to
    /// within `√tol`, otherwise the input is rejected as indefinite.
    pub fn cholesky_psd(&self, tol: f64) -> Result<Self> {
        if !self.is_square() {
            bail!(Dimension, "Cholesky of a non-square matrix");
        }
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if d < -tol {
                bail!(Domain, "matrix is not positive semidefinite (pivot {d:e})");
            }
            let column: Vec<C64> = (j + 1..n)
                .map(|i| {
                    let mut v = self[(i, j)];
                    for k in 0..j {
                        v -= l[(i, k)] * l[(j, k)].conj();
                    }
                    v
                })
                .collect();
            if d <= 0.0 {
                if column.iter().any(|v| v.norm_sqr() > tol) {
                    bail!(Domain, "matrix is not positive semidefinite (zero pivot {j} with coupled column)");
                }
                continue;
            }
            let djj = math::sqrt(d);
            l[(j, j)] = C64::new(djj, 0.0);
            for (i, v) in (j + 1..n).zip(column) {
                l[(i, j)] = v / djj;
            }
        }
        Ok(l)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    /// Panics on a shape mismatch; use [`CMatrix::matmul`] to get a `Result`.
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("matrix shapes do not match")
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Dense row-major real matrix (power and moduli-squared matrices).
#[derive(Clone, Debug, PartialEq)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            bail!(
                Dimension,
                "{} entries cannot fill a {}x{} matrix",
                data.len(),
                rows,
                cols
            );
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.data.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for row in self.data.chunks(self.cols) {
            for (acc, v) in s.iter_mut().zip(row) {
                *acc += v;
            }
        }
        s
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Promotes to a complex matrix with zero imaginary part.
    pub fn to_complex(&self) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }
}

impl Index<(usize, usize)> for RMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `a x = b` for a square row-major `a` by Gaussian elimination with
/// partial pivoting.
pub fn solve_real(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n * n {
        bail!(Dimension, "system matrix has {} entries for {} unknowns", a.len(), n);
    }
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = a.iter().fold(0.0_f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap_or(col);
        if m[pivot * n + col].abs() <= 1e-13 * scale {
            bail!(Singular, "pivot {} vanishes", col);
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
        }
        let d = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut v = x[col];
        for k in col + 1..n {
            v -= m[col * n + k] * x[k];
        }
        x[col] = v / m[col * n + col];
    }
    Ok(x)
}

/// Eigenvalues of a real symmetric `n`×`n` matrix by cyclic Jacobi rotations.
/// The input buffer is destroyed.
pub fn symmetric_eigenvalues(a: &mut [f64], n: usize) -> Result<Vec<f64>> {
    const MAX_SWEEPS: usize = 100;
    let norm: f64 = a.iter().map(|v| v * v).sum::<f64>();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off <= 1e-30 * norm.max(f64::MIN_POSITIVE) {
            return Ok((0..n).map(|i| a[i * n + i]).collect());
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let residual = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| a[i * n + j].abs())
        .fold(0.0, f64::max);
    Err(crate::Error::Convergence {
        iterations: MAX_SWEEPS,
        residual,
    })
}

/// Draws a Haar-random `n`×`n` unitary (Gram-Schmidt on a complex Ginibre
/// matrix).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                C64::new(re, im)
            })
            .collect();
        for u in &cols {
            let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = math::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if norm < 1e-8 {
            continue;
        }
        for vi in &mut v {
            *vi /= norm;
        }
        cols.push(v);
    }
    CMatrix::from_fn(n, n, |i, j| cols[j][i])
}
