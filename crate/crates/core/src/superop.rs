//! Linear maps between matrix spaces in the Heisenberg picture.
//!
//! A [`Superoperator`] stores its action on the row-major vectorized
//! operator space together with a lazily computed Choi matrix. Complete
//! positivity is the PSD predicate of the Choi matrix; the predual (the
//! Schrodinger-picture state map) is the Hilbert-Schmidt adjoint.

use crate::numerics::{eig_hermitian, ComplexMatrix, Complex64, Tolerances};
use crate::{Error, Result};
use std::sync::OnceLock;

pub struct Superoperator {
    in_dim: usize,
    out_dim: usize,
    action: ComplexMatrix,
    choi: OnceLock<ComplexMatrix>,
}

impl Clone for Superoperator {
    fn clone(&self) -> Self {
        let choi = OnceLock::new();
        if let Some(j) = self.choi.get() {
            let _ = choi.set(j.clone());
        }
        Superoperator {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            action: self.action.clone(),
            choi,
        }
    }
}

impl std::fmt::Debug for Superoperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Superoperator {{ in_dim: {}, out_dim: {} }}",
            self.in_dim, self.out_dim
        )
    }
}

impl Superoperator {
    /// Build from the action matrix on vectorized operators
    /// (`out_dim^2 x in_dim^2`, row-major vectorization).
    pub fn from_action(in_dim: usize, out_dim: usize, action: ComplexMatrix) -> Result<Self> {
        if action.rows() != out_dim * out_dim || action.cols() != in_dim * in_dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator action is {}x{}, expected {}x{}",
                action.rows(),
                action.cols(),
                out_dim * out_dim,
                in_dim * in_dim
            )));
        }
        Ok(Superoperator {
            in_dim,
            out_dim,
            action,
            choi: OnceLock::new(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Superoperator {
            in_dim: dim,
            out_dim: dim,
            action: ComplexMatrix::identity(dim * dim),
            choi: OnceLock::new(),
        }
    }

    /// Build by applying `f` to every matrix unit of the input space.
    pub fn from_map(
        in_dim: usize,
        out_dim: usize,
        mut f: impl FnMut(&ComplexMatrix) -> ComplexMatrix,
    ) -> Result<Self> {
        let mut action = ComplexMatrix::zeros(out_dim * out_dim, in_dim * in_dim);
        for i in 0..in_dim {
            for j in 0..in_dim {
                let image = f(&ComplexMatrix::matrix_unit(in_dim, i, j));
                if image.rows() != out_dim || image.cols() != out_dim {
                    return Err(Error::DimensionMismatch(format!(
                        "map produced a {}x{} image, expected {}x{}",
                        image.rows(),
                        image.cols(),
                        out_dim,
                        out_dim
                    )));
                }
                let col = i * in_dim + j;
                for (row, z) in image.vectorize().into_iter().enumerate() {
                    action[(row, col)] = z;
                }
            }
        }
        Self::from_action(in_dim, out_dim, action)
    }

    /// Reconstruct the map whose Choi matrix is `choi`
    /// (`choi` lives on `C^{in} (x) C^{out}`).
    pub fn from_choi(in_dim: usize, out_dim: usize, choi: &ComplexMatrix) -> Result<Self> {
        if choi.rows() != in_dim * out_dim || !choi.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "choi matrix is {}x{}, expected square of size {}",
                choi.rows(),
                choi.cols(),
                in_dim * out_dim
            )));
        }
        let mut action = ComplexMatrix::zeros(out_dim * out_dim, in_dim * in_dim);
        for i in 0..in_dim {
            for j in 0..in_dim {
                let col = i * in_dim + j;
                for k in 0..out_dim {
                    for l in 0..out_dim {
                        action[(k * out_dim + l, col)] = choi[(i * out_dim + k, j * out_dim + l)];
                    }
                }
            }
        }
        let sup = Self::from_action(in_dim, out_dim, action)?;
        let _ = sup.choi.set(choi.clone());
        Ok(sup)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn action(&self) -> &ComplexMatrix {
        &self.action
    }

    pub fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.rows() != self.in_dim || a.cols() != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "applying a {}->{} superoperator to a {}x{} matrix",
                self.in_dim,
                self.out_dim,
                a.rows(),
                a.cols()
            )));
        }
        let out = self.action.mul_vec(&a.vectorize());
        ComplexMatrix::from_vec(self.out_dim, self.out_dim, out)
    }

    /// Schrodinger-picture map on states: the HS adjoint of the action.
    pub fn predual(&self) -> Superoperator {
        Superoperator {
            in_dim: self.out_dim,
            out_dim: self.in_dim,
            action: self.action.adjoint(),
            choi: OnceLock::new(),
        }
    }

    pub fn predual_apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.predual().apply(rho)
    }

    /// `self . inner` (apply `inner` first).
    pub fn compose(&self, inner: &Superoperator) -> Result<Superoperator> {
        if inner.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "composing {}->{} after {}->{}",
                self.in_dim, self.out_dim, inner.in_dim, inner.out_dim
            )));
        }
        Superoperator::from_action(inner.in_dim, self.out_dim, self.action.mul(&inner.action))
    }

    /// Choi matrix `sum_ij E_ij (x) Phi(E_ij)` on `C^{in} (x) C^{out}`.
    pub fn choi(&self) -> &ComplexMatrix {
        self.choi.get_or_init(|| {
            let (din, dout) = (self.in_dim, self.out_dim);
            let mut j = ComplexMatrix::zeros(din * dout, din * dout);
            for a in 0..din {
                for b in 0..din {
                    let img = self
                        .apply(&ComplexMatrix::matrix_unit(din, a, b))
                        .expect("dimensions fixed");
                    for k in 0..dout {
                        for l in 0..dout {
                            j[(a * dout + k, b * dout + l)] = img[(k, l)];
                        }
                    }
                }
            }
            j
        })
    }

    pub fn is_unital(&self, tols: &Tolerances) -> bool {
        match self.apply(&ComplexMatrix::identity(self.in_dim)) {
            Ok(img) => img.fro_dist(&ComplexMatrix::identity(self.out_dim)) <= tols.feas_tol,
            Err(_) => false,
        }
    }

    /// Smallest Choi eigenvalue; complete positivity demands it above `-1e-9`.
    pub fn choi_min_eigenvalue(&self, tols: &Tolerances) -> Result<f64> {
        let choi = self.choi().hermitize();
        let e = eig_hermitian(&choi, tols)?;
        Ok(e.values.first().copied().unwrap_or(0.0))
    }

    pub fn is_cp(&self, tols: &Tolerances) -> bool {
        let sym = self.choi().herm_residual() <= tols.eq_tol * (1.0 + self.choi().max_abs());
        sym && matches!(self.choi_min_eigenvalue(tols), Ok(min) if min >= -1e-9)
    }

    /// Heisenberg-picture channel: unital and CP (the predual is then
    /// trace preserving).
    pub fn is_channel(&self, tols: &Tolerances) -> bool {
        self.is_unital(tols) && self.is_cp(tols)
    }

    /// Worst sampled violation of the Schwarz inequality
    /// `Phi(A* A) >= Phi(A*) Phi(A)`: the most negative eigenvalue of the
    /// difference over random samples, clipped to 0 when none.
    pub fn schwarz_violation_sampled(
        &self,
        samples: usize,
        rng: &mut impl rand::Rng,
        tols: &Tolerances,
    ) -> Result<f64> {
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let a = crate::numerics::rand::random_complex_matrix(self.in_dim, self.in_dim, rng);
            let gap = self
                .apply(&a.adjoint().mul(&a))?
                .sub(&self.apply(&a.adjoint())?.mul(&self.apply(&a)?));
            let min = eig_hermitian(&gap.hermitize(), tols)?
                .values
                .first()
                .copied()
                .unwrap_or(0.0);
            worst = worst.min(min);
        }
        Ok(-worst.min(0.0))
    }

    pub fn action_dist(&self, other: &Superoperator) -> f64 {
        self.action.fro_dist(&other.action)
    }

    pub fn choi_dist(&self, other: &Superoperator) -> f64 {
        self.choi().fro_dist(other.choi())
    }

    /// `tr[rho Phi(A)]` convenience.
    pub fn pairing(&self, rho: &ComplexMatrix, a: &ComplexMatrix) -> Result<Complex64> {
        Ok(rho.mul(&self.apply(a)?).trace())
    }
}
