//! Dense complex linear algebra on small tensor-product Hilbert spaces.
//!
//! Subsystem ordering follows the convention used throughout the crate:
//! index 0 is the measured system `S`, index 1 the apparatus `A` and indices
//! `2..` are bath modes. Two-level factors are written in the `sigma_z`
//! eigenbasis `{|+>, |->}`, so the joint `S+A` basis is
//! `|++>, |+->, |-+>, |-->`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result, Violation};
use crate::scalar::{cexp, cplx, Real};

/// Dense complex matrix whose entries are all finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    data: DMatrix<Complex<T>>,
}

fn first_non_finite<T: Real>(m: &DMatrix<Complex<T>>) -> Option<(usize, usize)> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let z = m[(r, c)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Some((r, c));
            }
        }
    }
    None
}

impl<T: Real> ComplexMatrix<T> {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(
                "matrix must have at least one row and column".into(),
            ));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, &entries))
    }

    /// Wraps an nalgebra matrix, rejecting NaN/Inf entries.
    pub fn from_dmatrix(data: DMatrix<Complex<T>>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::Dimension(
                "matrix must have at least one row and column".into(),
            ));
        }
        if let Some((row, col)) = first_non_finite(&data) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self { data })
    }

    /// Builds from real row-major entries.
    pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::from_row_major(rows, cols, entries.iter().map(|&x| cplx(x, 0.0)).collect())
    }

    pub(crate) fn from_dmatrix_unchecked(data: DMatrix<Complex<T>>) -> Self {
        debug_assert!(first_non_finite(&data).is_none());
        Self { data }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: DMatrix::zeros(rows, cols),
        }
    }

    pub fn diagonal(entries: &[Complex<T>]) -> Self {
        Self {
            data: DMatrix::from_diagonal(&DVector::from_column_slice(entries)),
        }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.data[(row, col)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<Complex<T>> {
        &self.data
    }

    pub fn into_dmatrix(self) -> DMatrix<Complex<T>> {
        self.data
    }

    pub fn to_row_major(&self) -> Vec<Complex<T>> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                out.push(self.data[(r, c)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            data: self.data.map(|z| z * s),
        }
    }

    pub fn trace(&self) -> Complex<T> {
        self.data.trace()
    }

    pub fn apply(&self, v: &DVector<Complex<T>>) -> Result<DVector<Complex<T>>> {
        if v.len() != self.cols() {
            return Err(Error::Dimension(format!(
                "cannot apply a {}x{} matrix to a vector of length {}",
                self.rows(),
                self.cols(),
                v.len()
            )));
        }
        Ok(&self.data * v)
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(Self {
            data: &self.data * &rhs.data,
        })
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(
            self.data.shape(),
            other.data.shape(),
            "shape mismatch in max_abs_diff"
        );
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (*a - *b).norm_sqr().sqrt())
            .fold(T::zero(), |m, x| if x > m { x } else { m })
    }

    /// Largest elementwise modulus.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm_sqr().sqrt())
            .fold(T::zero(), |m, x| if x > m { x } else { m })
    }

    /// Largest elementwise `|M - M^dagger|`.
    pub fn hermiticity_residual(&self) -> T {
        if !self.is_square() {
            return T::max_value().unwrap_or_else(T::one);
        }
        self.max_abs_diff(&self.adjoint())
    }

    /// Largest elementwise `|U U^dagger - I|`.
    pub fn unitarity_residual(&self) -> T {
        if !self.is_square() {
            return T::max_value().unwrap_or_else(T::one);
        }
        let prod = Self {
            data: &self.data * self.data.adjoint(),
        };
        prod.max_abs_diff(&Self::identity(self.rows()))
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        self.matmul(rhs).expect("shape mismatch in matrix product")
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        ComplexMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        ComplexMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

pub fn pauli_x<T: Real>() -> ComplexMatrix<T> {
    ComplexMatrix::from_real_rows(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

pub fn pauli_y<T: Real>() -> ComplexMatrix<T> {
    ComplexMatrix::from_row_major(
        2,
        2,
        vec![
            cplx(0.0, 0.0),
            cplx(0.0, -1.0),
            cplx(0.0, 1.0),
            cplx(0.0, 0.0),
        ],
    )
    .unwrap()
}

pub fn pauli_z<T: Real>() -> ComplexMatrix<T> {
    ComplexMatrix::from_real_rows(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
}

/// Kronecker product `A ⊗ B`.
pub fn tensor_product<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    ComplexMatrix {
        data: a.data.kronecker(&b.data),
    }
}

/// Kronecker product of a list of factors, left to right.
pub fn tensor_all<T: Real>(factors: &[ComplexMatrix<T>]) -> ComplexMatrix<T> {
    let mut iter = factors.iter();
    let first = iter.next().expect("at least one factor").clone();
    iter.fold(first, |acc, f| tensor_product(&acc, f))
}

/// Kronecker product of two vectors.
pub fn kron_vec<T: Real>(a: &DVector<Complex<T>>, b: &DVector<Complex<T>>) -> DVector<Complex<T>> {
    a.kronecker(b)
}

/// Rotates a vector by a global phase so that its first non-negligible
/// amplitude is real and nonnegative.
pub fn normalize_global_phase<T: Real>(v: &DVector<Complex<T>>) -> DVector<Complex<T>> {
    let tiny = T::norm_tol();
    match v.iter().find(|z| z.norm_sqr().sqrt() > tiny) {
        Some(z) => {
            let r = z.norm_sqr().sqrt();
            let u = Complex::new(z.re / r, -z.im / r);
            v.map(|x| x * u)
        }
        None => v.clone(),
    }
}

/// Eigendecomposition of a Hermitian matrix, `H = V diag(λ) V^dagger`.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: DMatrix<Complex<T>>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn new(h: &ComplexMatrix<T>) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix is not square",
                h.rows(),
                h.cols()
            )));
        }
        let residual = h.hermiticity_residual();
        if residual > T::check_tol() {
            return Err(Error::NotHermitian {
                residual: residual.to_f64(),
            });
        }
        let half = Complex::new(T::lit(0.5), T::zero());
        let sym = (&h.data + h.data.adjoint()).map(|z| z * half);
        let eig = sym.symmetric_eigen();
        Ok(Self {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    /// `exp(scale * H)`.
    pub fn exp(&self, scale: Complex<T>) -> ComplexMatrix<T> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let f = cexp(scale * Complex::new(lam, T::zero()));
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= f);
        }
        ComplexMatrix {
            data: scaled * v.adjoint(),
        }
    }
}

/// `exp(scale * H)` for Hermitian `H`, computed by diagonalizing `H`,
/// exponentiating its eigenvalues and rotating back.
pub fn expm_hermitian<T: Real>(
    h: &ComplexMatrix<T>,
    scale: Complex<T>,
) -> Result<ComplexMatrix<T>> {
    Ok(HermitianEigen::new(h)?.exp(scale))
}

/// Normalized pure state on a tensor-product space.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState<T: Real> {
    dims: Vec<usize>,
    amplitudes: DVector<Complex<T>>,
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Dimension(format!(
            "invalid subsystem dimensions {dims:?}"
        )));
    }
    Ok(dims.iter().product())
}

impl<T: Real> JointState<T> {
    pub fn new(dims: Vec<usize>, amplitudes: DVector<Complex<T>>) -> Result<Self> {
        let total = check_dims(&dims)?;
        if amplitudes.len() != total {
            return Err(Error::Dimension(format!(
                "{} amplitudes for subsystem dimensions {dims:?}",
                amplitudes.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::Parameter("state has non-finite amplitudes".into()));
        }
        let norm = amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt();
        if (norm - T::one()).abs() > T::norm_tol() {
            return Err(Error::NotNormalized {
                norm: norm.to_f64(),
            });
        }
        Ok(Self { dims, amplitudes })
    }

    pub fn from_slice(dims: Vec<usize>, amplitudes: &[Complex<T>]) -> Result<Self> {
        Self::new(dims, DVector::from_column_slice(amplitudes))
    }

    /// Product state of normalized single-subsystem vectors.
    pub fn product(factors: &[DVector<Complex<T>>]) -> Result<Self> {
        let dims = factors.iter().map(|f| f.len()).collect();
        let mut iter = factors.iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::Dimension("empty product".into()))?
            .clone();
        let amps = iter.fold(first, |acc, f| acc.kronecker(f));
        Self::new(dims, amps)
    }

    /// Computational basis vector with the given flat index.
    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        let total = check_dims(&dims)?;
        if index >= total {
            return Err(Error::Dimension(format!(
                "basis index {index} out of range {total}"
            )));
        }
        let mut v = DVector::zeros(total);
        v[index] = Complex::new(T::one(), T::zero());
        Self::new(dims, v)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex<T>> {
        &self.amplitudes
    }

    pub fn amplitude(&self, i: usize) -> Complex<T> {
        self.amplitudes[i]
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Applies a unitary on the full space.
    pub fn evolve(&self, u: &ComplexMatrix<T>) -> Result<Self> {
        Self::new(self.dims.clone(), u.apply(&self.amplitudes)?)
    }

    /// Euclidean distance `||self - other||`.
    pub fn distance(&self, other: &Self) -> T {
        (&self.amplitudes - &other.amplitudes)
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Largest amplitude error after fixing both global phases.
    pub fn max_abs_diff_up_to_phase(&self, other: &Self) -> T {
        let a = normalize_global_phase(&self.amplitudes);
        let b = normalize_global_phase(&other.amplitudes);
        (a - b)
            .iter()
            .map(|z| z.norm_sqr().sqrt())
            .fold(T::zero(), |m, x| if x > m { x } else { m })
    }

    pub fn density(&self) -> DensityOperator<T> {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityOperator {
            dims: self.dims.clone(),
            matrix: ComplexMatrix { data: m },
        }
    }
}

/// Hermitian, unit-trace, positive-semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator<T: Real> {
    dims: Vec<usize>,
    matrix: ComplexMatrix<T>,
}

/// Checks `rho` against the density-operator invariants and reports every
/// violated one with its measured residual.
pub fn validate_density<T: Real>(
    rho: ComplexMatrix<T>,
    dims: &[usize],
) -> Result<DensityOperator<T>> {
    let total = check_dims(dims)?;
    if !rho.is_square() || rho.rows() != total {
        return Err(Error::Dimension(format!(
            "{}x{} matrix does not match subsystem dimensions {dims:?}",
            rho.rows(),
            rho.cols()
        )));
    }
    let tol = T::check_tol();
    let mut violations = Vec::new();

    let herm = rho.hermiticity_residual();
    if herm > tol {
        violations.push(Violation::NotHermitian {
            residual: herm.to_f64(),
        });
    }
    let tr = rho.trace();
    let trace_dev = tr.re - T::one();
    if trace_dev.abs() > tol || tr.im.abs() > tol {
        let residual = if trace_dev.abs() >= tr.im.abs() {
            trace_dev
        } else {
            tr.im
        };
        violations.push(Violation::Trace {
            residual: residual.to_f64(),
        });
    }
    let min_eig = min_eigenvalue(&rho);
    if min_eig < -tol {
        violations.push(Violation::NegativeEigenvalue {
            eigenvalue: min_eig.to_f64(),
        });
    }

    if violations.is_empty() {
        Ok(DensityOperator {
            dims: dims.to_vec(),
            matrix: rho,
        })
    } else {
        Err(Error::InvalidDensity(violations))
    }
}

fn hermitian_part<T: Real>(m: &ComplexMatrix<T>) -> DMatrix<Complex<T>> {
    let half = Complex::new(T::lit(0.5), T::zero());
    (&m.data + m.data.adjoint()).map(|z| z * half)
}

fn min_eigenvalue<T: Real>(m: &ComplexMatrix<T>) -> T {
    let n = m.rows();
    if n == 1 {
        return m.get(0, 0).re;
    }
    // Diagonal matrices are common (thermal states, decohered states).
    let h = hermitian_part(m);
    let off_diag =
        (0..n).any(|r| (0..n).any(|c| r != c && h[(r, c)] != Complex::new(T::zero(), T::zero())));
    if !off_diag {
        return (0..n)
            .map(|i| h[(i, i)].re)
            .fold(T::max_value().unwrap(), |a, b| if b < a { b } else { a });
    }
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(T::max_value().unwrap(), |a, b| if b < a { b } else { a })
}

impl<T: Real> DensityOperator<T> {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.matrix.get(row, col)
    }

    pub fn populations(&self) -> Vec<T> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        let mut ev: Vec<T> = hermitian_part(&self.matrix)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.matrix.max_abs_diff(&other.matrix)
    }

    /// Tensor product with another density operator; dimensions concatenate.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            dims,
            matrix: tensor_product(&self.matrix, &other.matrix),
        }
    }

    /// `U rho U^dagger`, revalidated.
    pub fn conjugate_by(&self, u: &ComplexMatrix<T>) -> Result<Self> {
        let m = &(u * &self.matrix) * &u.adjoint();
        validate_density(m, &self.dims)
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        partial_trace(self, keep)
    }
}

/// Traces out every subsystem not listed in `keep`.
///
/// `keep` must be a nonempty proper subset of the subsystem indices; the
/// kept subsystems retain their original relative order.
pub fn partial_trace<T: Real>(
    rho: &DensityOperator<T>,
    keep: &[usize],
) -> Result<DensityOperator<T>> {
    let dims = &rho.dims;
    let n = dims.len();
    if keep.is_empty() || keep.len() >= n {
        return Err(Error::Subsystems(format!(
            "keep set {keep:?} must be a nonempty proper subset of {n} subsystems"
        )));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&k| k >= n) {
        return Err(Error::Subsystems(format!(
            "invalid keep set {keep:?} for {n} subsystems"
        )));
    }
    let traced: Vec<usize> = (0..n).filter(|i| !kept.contains(i)).collect();

    // Row-major strides of the full space.
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let offsets = |subs: &[usize]| -> Vec<usize> {
        let total: usize = subs.iter().map(|&s| dims[s]).product();
        let mut out = Vec::with_capacity(total);
        for mut flat in 0..total {
            let mut off = 0;
            for &s in subs.iter().rev() {
                off += (flat % dims[s]) * strides[s];
                flat /= dims[s];
            }
            out.push(off);
        }
        out
    };
    let kept_off = offsets(&kept);
    let traced_off = offsets(&traced);

    let dk = kept_off.len();
    let m = rho.matrix.as_dmatrix();
    let mut out = DMatrix::<Complex<T>>::zeros(dk, dk);
    for (i, &oi) in kept_off.iter().enumerate() {
        for (j, &oj) in kept_off.iter().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for &ot in &traced_off {
                acc += m[(oi + ot, oj + ot)];
            }
            out[(i, j)] = acc;
        }
    }
    let new_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    validate_density(ComplexMatrix { data: out }, &new_dims)
}
