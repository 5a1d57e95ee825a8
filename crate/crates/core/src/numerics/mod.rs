//! Dense complex linear algebra primitives.
//!
//! Everything downstream (operator algebras, channels, feasibility
//! searches) is built on [`ComplexMatrix`], a row-major dense matrix of
//! `Complex64` entries, and the Hermitian eigensolver in [`eig`].

mod eig;
pub mod rand;

pub use eig::{
    eig_hermitian, hermitian_function, imag_power_on_support, matrix_imag_power, nullspace,
    polar_unitary, pseudo_inverse, support_isometry, support_projection, EigH,
};
pub use num_complex::Complex64;

use crate::{Error, Result};

/// Numerical tolerances shared across the crate.
///
/// `eq_tol` governs entrywise comparisons, `eig_cluster_tol` eigenvalue
/// clustering and rank decisions tied to spectra, `feas_tol` feasibility
/// residuals of convex searches and subspace membership tests.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub eq_tol: f64,
    pub eig_cluster_tol: f64,
    pub feas_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eq_tol: 1e-9,
            eig_cluster_tol: 1e-7,
            feas_tol: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.eq_tol > 0.0 && self.eig_cluster_tol > 0.0 && self.feas_tol > 0.0) {
            return Err(Error::InvalidInput(
                "tolerances must be strictly positive".into(),
            ));
        }
        if self.eq_tol > self.eig_cluster_tol {
            return Err(Error::InvalidInput(
                "eq_tol must not exceed eig_cluster_tol".into(),
            ));
        }
        Ok(())
    }
}

/// Which tensor factor a partial trace removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSide {
    /// Trace out the first factor of `C^{d1} (x) C^{d2}`; result is `d2 x d2`.
    First,
    /// Trace out the second factor; result is `d1 x d1`.
    Second,
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::default(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != nc) {
            return Err(Error::DimensionMismatch("ragged row lengths".into()));
        }
        Ok(ComplexMatrix {
            rows: nr,
            cols: nc,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Diagonal matrix from real entries.
    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        m
    }

    /// Rank-one matrix `v v*`.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    /// Matrix unit `|i><j|`.
    pub fn matrix_unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = Complex64::new(1.0, 0.0);
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn from_columns(rows: usize, cols: &[Vec<Complex64>]) -> Self {
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(self.same_shape(other), "shape mismatch in add");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert!(self.same_shape(other), "shape mismatch in sub");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch in mul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in mul_vec");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|k| self[(i, k)] * v[k]).sum())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn fro_dist(&self, other: &Self) -> f64 {
        assert!(self.same_shape(other), "shape mismatch in fro_dist");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Kronecker product; `(A (x) B)[(i*rB+s),(j*cB+t)] = A[i,j] B[s,t]`.
    pub fn kron(&self, other: &Self) -> Self {
        let (ra, ca) = (self.rows, self.cols);
        let (rb, cb) = (other.rows, other.cols);
        let mut out = Self::zeros(ra * rb, ca * cb);
        for i in 0..ra {
            for j in 0..ca {
                let a = self[(i, j)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for s in 0..rb {
                    for t in 0..cb {
                        out[(i * rb + s, j * cb + t)] = a * other[(s, t)];
                    }
                }
            }
        }
        out
    }

    /// `V* A V` for an isometry or general map `V`.
    pub fn compress(&self, v: &Self) -> Self {
        v.adjoint().mul(&self.mul(v))
    }

    /// `V A V*`.
    pub fn expand(&self, v: &Self) -> Self {
        v.mul(&self.mul(&v.adjoint()))
    }

    /// Row-major vectorization.
    pub fn vectorize(&self) -> Vec<Complex64> {
        self.data.clone()
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} cannot fill a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// Partial trace over one tensor factor of a matrix on `C^{d1} (x) C^{d2}`.
    pub fn partial_trace(&self, d1: usize, d2: usize, side: TraceSide) -> Result<Self> {
        if !self.is_square() || self.rows != d1 * d2 {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, expected square of size {}",
                self.rows,
                self.cols,
                d1 * d2
            )));
        }
        Ok(match side {
            TraceSide::Second => Self::from_fn(d1, d1, |i, j| {
                (0..d2).map(|s| self[(i * d2 + s, j * d2 + s)]).sum()
            }),
            TraceSide::First => Self::from_fn(d2, d2, |s, t| {
                (0..d1).map(|i| self[(i * d2 + s, i * d2 + t)]).sum()
            }),
        })
    }

    /// Max deviation from Hermitian symmetry.
    pub fn herm_residual(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.herm_residual() <= tol * (1.0 + self.max_abs())
    }

    /// Hermitian part `(A + A*)/2`.
    pub fn hermitize(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    pub fn min_eigenvalue(&self, tols: &Tolerances) -> Result<f64> {
        let e = eig_hermitian(self, tols)?;
        Ok(e.values.first().copied().unwrap_or(0.0))
    }

    pub fn is_psd(&self, tols: &Tolerances) -> bool {
        if !self.is_hermitian(tols.eq_tol) {
            return false;
        }
        match self.min_eigenvalue(tols) {
            Ok(min) => min >= -tols.eq_tol * (1.0 + self.max_abs()),
            Err(_) => false,
        }
    }

    pub fn is_density(&self, tols: &Tolerances) -> bool {
        self.is_psd(tols) && (self.trace().re - 1.0).abs() <= tols.eq_tol * 2.0
            && self.trace().im.abs() <= tols.eq_tol * 2.0
    }
}

/// Hilbert-Schmidt inner product `tr(A* B)`, conjugate-linear in `A`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch(format!(
            "hs_inner of {}x{} against {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| x.conj() * y)
        .sum())
}
