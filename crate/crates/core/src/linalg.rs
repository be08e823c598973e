//! Small dense complex linear algebra.
//!
//! Everything here works on matrices of dimension 2 or 4, so storage is dense
//! and nothing is optimized for size. Hermitian eigenproblems are solved with
//! nalgebra; this module adds eigenvalue clustering into spectral projectors,
//! a deterministic eigenvector phase, and the spectral calculus used to build
//! operator-valued Gaussians.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Entrywise tolerance for treating a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues closer than this share one spectral projector.
pub const CLUSTER_TOL: f64 = 1e-9;
/// Allowed deviation of `<psi|psi>` from one.
pub const NORM_TOL: f64 = 1e-12;
/// Largest imaginary part tolerated in an expectation value.
pub const IMAG_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Column vector of complex amplitudes.
#[derive(Clone, PartialEq)]
pub struct ComplexVector(DVector<Complex64>);

impl ComplexVector {
    pub fn from_slice(entries: &[Complex64]) -> Self {
        ComplexVector(DVector::from_column_slice(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        ComplexVector(DVector::from_element(dim, ZERO))
    }

    /// Unit vector `|index>` in a space of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, index: usize) -> Complex64 {
        self.0[index]
    }

    pub fn entries(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Returns `self / |self|`. A zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scale(Complex64::new(1.0 / n, 0.0))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        ComplexVector(&self.0 * factor)
    }

    /// The inner product `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &ComplexVector) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.0.dotc(&other.0))
    }

    /// The outer product `|self><other|`.
    pub fn outer(&self, other: &ComplexVector) -> ComplexMatrix {
        ComplexMatrix(&self.0 * other.0.adjoint())
    }

    pub fn max_abs_diff(&self, other: &ComplexVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "vector dimensions differ");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Fails unless `<self|self>` is one within [`NORM_TOL`].
    pub fn check_normalized(&self) -> Result<()> {
        let norm_sqr = self.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(())
    }
}

impl fmt::Debug for ComplexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[Complex64]) -> Self {
        ComplexMatrix(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> Self {
        let entries: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_row_slice(rows, cols, &entries)
    }

    pub fn identity(dim: usize) -> Self {
        ComplexMatrix(DMatrix::identity(dim, dim))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix(DMatrix::from_element(rows, cols, ZERO))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.0[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        ComplexMatrix(&self.0 * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        check_dim(self.cols(), v.dim())?;
        Ok(ComplexVector(&self.0 * &v.0))
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(
            (self.rows(), self.cols()),
            (other.rows(), other.cols()),
            "matrix shapes differ"
        );
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise distance between the matrix and its adjoint.
    pub fn hermitian_deviation(&self) -> f64 {
        if self.rows() != self.cols() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= HERMITIAN_TOL
    }

    fn check_hermitian(&self) -> Result<()> {
        if self.rows() != self.cols() {
            return Err(Error::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for r in 0..self.rows() {
            let row: Vec<Complex64> = (0..self.cols()).map(|c| self.get(r, c)).collect();
            list.entry(&row);
        }
        list.finish()
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

/// Kronecker product. The left operand is the slow index, so for two
/// photons `index = 2·i_a + i_b`.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for ComplexMatrix {
    fn tensor(&self, other: &Self) -> Self {
        ComplexMatrix(self.0.kronecker(&other.0))
    }
}

impl Tensor for ComplexVector {
    fn tensor(&self, other: &Self) -> Self {
        ComplexVector(self.0.kronecker(&other.0))
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

/// Orthogonal projector onto one (possibly degenerate) eigenspace.
#[derive(Clone, Debug)]
pub struct SpectralProjector {
    pub eigenvalue: f64,
    pub matrix: ComplexMatrix,
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are ascending. Eigenvalues within [`CLUSTER_TOL`] of their
/// neighbor are grouped into one projector whose eigenvalue is the cluster
/// mean.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<ComplexVector>,
    pub projectors: Vec<SpectralProjector>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Spectral calculus: `Σ f(λ)·Π_λ`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> ComplexMatrix {
        let n = self.dim();
        self.projectors
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, p| {
                &acc + &p.matrix.scale_real(f(p.eigenvalue))
            })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|x| x)
    }
}

pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<SpectralDecomposition> {
    m.check_hermitian()?;
    let n = m.rows();
    // symmetrize so rounding noise below the tolerance cannot leak in
    let sym = (&m.0 + m.0.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::EigenFailure)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors: Vec<ComplexVector> = order
        .iter()
        .map(|&i| fix_phase(ComplexVector(eig.eigenvectors.column(i).into_owned())))
        .collect();

    let mut projectors: Vec<SpectralProjector> = Vec::new();
    let mut start = 0;
    for end in 1..=n {
        let split = end == n || eigenvalues[end] - eigenvalues[end - 1] >= CLUSTER_TOL;
        if !split {
            continue;
        }
        let members = start..end;
        let mean = eigenvalues[members.clone()].iter().sum::<f64>() / members.len() as f64;
        let matrix = eigenvectors[members]
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, v| &acc + &v.outer(v));
        projectors.push(SpectralProjector {
            eigenvalue: mean,
            matrix,
        });
        start = end;
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        projectors,
    })
}

/// Rotates the global phase so the first largest-magnitude entry is real
/// and positive.
fn fix_phase(v: ComplexVector) -> ComplexVector {
    let max = v.0.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return v;
    }
    let pivot =
        v.0.iter()
            .find(|z| z.norm() >= max - 1e-12)
            .copied()
            .unwrap_or(ONE);
    let phase = pivot.conj() / pivot.norm();
    let mut fixed = v.scale(phase);
    // remove the rounding residue in the pivot's imaginary part
    if let Some(z) = fixed.0.iter_mut().find(|z| z.norm() >= max - 1e-12) {
        z.im = 0.0;
    }
    fixed
}

/// `f(m)` through the spectral decomposition of a Hermitian `m`.
pub fn operator_function<F: Fn(f64) -> f64>(m: &ComplexMatrix, f: F) -> Result<ComplexMatrix> {
    Ok(hermitian_eigen(m)?.map(f))
}

/// `<state|m|state>` for a normalized state. Fails if the result is not real.
pub fn expectation(state: &ComplexVector, m: &ComplexMatrix) -> Result<f64> {
    check_dim(m.rows(), state.dim())?;
    check_dim(m.cols(), state.dim())?;
    state.check_normalized()?;
    let value = state.inner(&m.apply(state)?)?;
    if value.im.abs() > IMAG_TOL {
        return Err(Error::ComplexExpectation { imag: value.im });
    }
    Ok(value.re)
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}
