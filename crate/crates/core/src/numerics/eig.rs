//! Hermitian eigendecomposition by cyclic Jacobi, plus the spectral
//! constructions built on it (support projections, imaginary powers,
//! nullspaces, pseudo-inverses, polar factors).

use super::{ComplexMatrix, Complex64, Tolerances};
use crate::{Error, Result};

/// Eigendecomposition of a Hermitian matrix: `values` ascending, the
/// columns of `vectors` are the matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigH {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigH {
    /// Reassemble `U diag(f(lambda)) U*`.
    pub fn assemble(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.values.len();
        let u = &self.vectors;
        let mut scaled = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let fj = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] = u[(i, j)] * fj;
            }
        }
        scaled.mul(&u.adjoint())
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
///
/// Sweeps run until the largest off-diagonal modulus drops below
/// `1e-12 * ||H||_F`. Errors with [`Error::NotHermitian`] when the input
/// fails the Hermitian predicate at `tols.eq_tol`.
pub fn eig_hermitian(h: &ComplexMatrix, tols: &Tolerances) -> Result<EigH> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            h.rows(),
            h.cols()
        )));
    }
    let residual = h.herm_residual();
    if residual > tols.eq_tol * (1.0 + h.max_abs()) {
        return Err(Error::NotHermitian {
            residual,
            tol: tols.eq_tol,
        });
    }
    let n = h.rows();
    let mut a = h.hermitize();
    let mut v = ComplexMatrix::identity(n);
    let fro = a.fro_norm();
    if n <= 1 || fro == 0.0 {
        let values = (0..n).map(|i| a[(i, i)].re).collect();
        return Ok(EigH { values, vectors: v });
    }
    let target = 1e-12 * fro;

    for _sweep in 0..100 {
        let mut off_max = 0.0f64;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                off_max = off_max.max(mag);
                if mag <= target * 1e-2 {
                    continue;
                }
                // Unitary 2x2 rotation annihilating a[(p,q)].
                let alpha = a[(p, p)].re;
                let beta = a[(q, q)].re;
                let phase = apq / mag;
                let tau = (beta - alpha) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let s_ph = phase * s;

                // A <- J* A J with J = [[c, s*ph], [-s*conj(ph), c]] on (p,q).
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * s_ph.conj();
                    a[(k, q)] = akp * s_ph + akq * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - s_ph * aqk;
                    a[(q, k)] = apk * s_ph.conj() + aqk * c;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * s_ph.conj();
                    v[(k, q)] = vkp * s_ph + vkq * c;
                }
            }
        }
        if off_max <= target {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigH { values, vectors })
}

/// `U f(lambda) U*` for Hermitian input.
pub fn hermitian_function(
    h: &ComplexMatrix,
    tols: &Tolerances,
    f: impl Fn(f64) -> Complex64,
) -> Result<ComplexMatrix> {
    Ok(eig_hermitian(h, tols)?.assemble(f))
}

/// Orthogonal projection onto the support of a PSD matrix.
///
/// The support keeps eigenvectors with `lambda > eig_cluster_tol * lambda_max`.
pub fn support_projection(rho: &ComplexMatrix, tols: &Tolerances) -> Result<ComplexMatrix> {
    let e = eig_hermitian(rho, tols)?;
    let lambda_max = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let thr = tols.eig_cluster_tol * lambda_max;
    Ok(e.assemble(|lam| {
        if lam > thr {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::default()
        }
    }))
}

/// Orthonormal columns spanning the support of a PSD matrix (`n x r`).
pub fn support_isometry(rho: &ComplexMatrix, tols: &Tolerances) -> Result<ComplexMatrix> {
    let e = eig_hermitian(rho, tols)?;
    let lambda_max = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let thr = tols.eig_cluster_tol * lambda_max;
    let keep: Vec<usize> = (0..e.values.len())
        .filter(|&k| e.values[k] > thr)
        .collect();
    Ok(ComplexMatrix::from_fn(rho.rows(), keep.len(), |i, j| {
        e.vectors[(i, keep[j])]
    }))
}

/// `rho^{it}` for strictly positive `rho`; unitary output.
///
/// Errors with [`Error::SingularState`] when the smallest eigenvalue does
/// not clear `eig_cluster_tol`.
pub fn matrix_imag_power(rho: &ComplexMatrix, t: f64, tols: &Tolerances) -> Result<ComplexMatrix> {
    let e = eig_hermitian(rho, tols)?;
    let min_eig = e.values.first().copied().unwrap_or(0.0);
    if min_eig <= tols.eig_cluster_tol {
        return Err(Error::SingularState { min_eig });
    }
    Ok(e.assemble(|lam| Complex64::from_polar(1.0, t * lam.ln())))
}

/// `rho^{it}` on the support of a PSD matrix, zero on its kernel; the
/// partial-isometry convention used by state cocycles against a faithful
/// reference. Agrees with [`matrix_imag_power`] on strictly positive input.
pub fn imag_power_on_support(
    rho: &ComplexMatrix,
    t: f64,
    tols: &Tolerances,
) -> Result<ComplexMatrix> {
    let e = eig_hermitian(rho, tols)?;
    let lambda_max = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let thr = tols.eig_cluster_tol * lambda_max;
    Ok(e.assemble(|lam| {
        if lam > thr {
            Complex64::from_polar(1.0, t * lam.ln())
        } else {
            Complex64::default()
        }
    }))
}

/// Orthonormal basis of the numerical nullspace of `m`, as columns.
///
/// A direction belongs to the nullspace when its singular value is at most
/// `1e-8 * sigma_max` (the crate-wide rank policy). Hermitian inputs are
/// thresholded on their spectrum directly; other inputs go through the
/// normal equations with a loose eigen-cut and a direct residual check,
/// since squaring buries `1e-8`-level singular values in rounding noise.
pub fn nullspace(m: &ComplexMatrix, tols: &Tolerances) -> Result<ComplexMatrix> {
    let hermitian = m.is_square() && m.herm_residual() <= 1e-12 * (1.0 + m.max_abs());
    if hermitian {
        let e = eig_hermitian(&m.hermitize(), tols)?;
        let sigma_max = e.values.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        let keep: Vec<usize> = (0..e.values.len())
            .filter(|&k| sigma_max == 0.0 || e.values[k].abs() <= 1e-8 * sigma_max)
            .collect();
        return Ok(ComplexMatrix::from_fn(m.cols(), keep.len(), |i, j| {
            e.vectors[(i, keep[j])]
        }));
    }
    let normal = m.adjoint().mul(m);
    let e = eig_hermitian(&normal, tols)?;
    let lam_max = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let sigma_max = lam_max.sqrt();
    let loose = 1e-12 * lam_max;
    let mut keep = Vec::new();
    for k in 0..e.values.len() {
        if lam_max > 0.0 && e.values[k] > loose {
            continue;
        }
        let x = e.vectors.column(k);
        let mx = m.mul_vec(&x);
        let res = mx.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if sigma_max == 0.0 || res <= 1e-8 * sigma_max {
            keep.push(k);
        }
    }
    Ok(ComplexMatrix::from_fn(m.cols(), keep.len(), |i, j| {
        e.vectors[(i, keep[j])]
    }))
}

/// Moore-Penrose pseudo-inverse through the normal equations, with the
/// same `1e-8 * sigma_max` rank cutoff as [`nullspace`].
pub fn pseudo_inverse(m: &ComplexMatrix, tols: &Tolerances) -> Result<ComplexMatrix> {
    let normal = m.adjoint().mul(m);
    let e = eig_hermitian(&normal, tols)?;
    let sigma2_max = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let thr = 1e-16 * sigma2_max;
    let inv_normal = e.assemble(|lam| {
        if lam > thr && lam > 0.0 {
            Complex64::new(1.0 / lam, 0.0)
        } else {
            Complex64::default()
        }
    });
    Ok(inv_normal.mul(&m.adjoint()))
}

/// Unitary (or isometric, for tall full-rank input) polar factor
/// `A (A* A)^{-1/2}`.
pub fn polar_unitary(a: &ComplexMatrix, tols: &Tolerances) -> Result<ComplexMatrix> {
    let gram = a.adjoint().mul(a);
    let e = eig_hermitian(&gram, tols)?;
    let lam_max = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let floor = 1e-16 * lam_max;
    let inv_sqrt = e.assemble(|lam| {
        if lam > floor && lam > 0.0 {
            Complex64::new(1.0 / lam.sqrt(), 0.0)
        } else {
            Complex64::default()
        }
    });
    Ok(a.mul(&inv_sqrt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rand::{random_density, random_hermitian, random_unit_vector};
    use proptest::prelude::*;
    use ::rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn reconstruction_residual(h: &ComplexMatrix, e: &EigH) -> f64 {
        let rebuilt = e.assemble(|lam| Complex64::new(lam, 0.0));
        h.fro_dist(&rebuilt)
    }

    #[test]
    fn identity_eigenvalues() {
        let e = eig_hermitian(&ComplexMatrix::identity(2), &tols()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let u = &e.vectors;
        assert!(u.adjoint().mul(u).fro_dist(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = ComplexMatrix::from_rows(vec![
            vec![Complex64::default(), Complex64::new(1.0, 0.0)],
            vec![Complex64::new(1.0, 0.0), Complex64::default()],
        ])
        .unwrap();
        let e = eig_hermitian(&x, &tols()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let h = random_hermitian(8, &mut rng);
        let e = eig_hermitian(&h, &tols()).unwrap();
        let bound = 1e-10 * (1.0 + h.fro_norm());
        assert!(reconstruction_residual(&h, &e) <= bound);
        let u = &e.vectors;
        assert!(u.adjoint().mul(u).fro_dist(&ComplexMatrix::identity(8)) <= 1e-10);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(3);
        m[(0, 1)] = Complex64::new(0.5, 0.0);
        assert!(matches!(
            eig_hermitian(&m, &tols()),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn support_projection_full_rank_and_rank_deficient() {
        let t = tols();
        let p = support_projection(&ComplexMatrix::identity(4).scale_re(0.25), &t).unwrap();
        assert!(p.fro_dist(&ComplexMatrix::identity(4)) < 1e-12);

        let rho = ComplexMatrix::diag(&[0.5, 0.5, 0.0]);
        let p = support_projection(&rho, &t).unwrap();
        assert!(p.fro_dist(&ComplexMatrix::diag(&[1.0, 1.0, 0.0])) < 1e-12);
    }

    #[test]
    fn support_projection_of_rank_one_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let v = random_unit_vector(5, &mut rng);
        let rho = ComplexMatrix::outer(&v);
        let p = support_projection(&rho, &tols()).unwrap();
        assert!(p.fro_dist(&rho) < 1e-9);
    }

    #[test]
    fn support_projection_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let rho = random_density(5, 3, &mut rng);
        let t = tols();
        let p = support_projection(&rho, &t).unwrap();
        let p2 = support_projection(&p, &t).unwrap();
        assert!(p2.fro_dist(&p) < 1e-10);
        // captures all the mass
        assert!((p.mul(&rho).trace().re - rho.trace().re).abs() < t.feas_tol);
    }

    #[test]
    fn imag_power_trivial_cases() {
        let t = tols();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rho = random_density(4, 4, &mut rng);
        let u0 = matrix_imag_power(&rho, 0.0, &t).unwrap();
        assert!(u0.fro_dist(&ComplexMatrix::identity(4)) < 1e-12);

        let c = 0.3;
        let scal = matrix_imag_power(&ComplexMatrix::identity(3).scale_re(c), 1.7, &t).unwrap();
        let expected = ComplexMatrix::identity(3).scale(Complex64::from_polar(1.0, 1.7 * c.ln()));
        assert!(scal.fro_dist(&expected) < 1e-12);
    }

    #[test]
    fn imag_power_group_law_and_adjoint() {
        let t = tols();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let rho = random_density(4, 4, &mut rng);
        let (s, u) = (0.62, 1.31);
        let a = matrix_imag_power(&rho, s, &t).unwrap();
        let b = matrix_imag_power(&rho, u, &t).unwrap();
        let ab = a.mul(&b);
        let direct = matrix_imag_power(&rho, s + u, &t).unwrap();
        assert!(ab.fro_dist(&direct) < 1e-9);
        let inv = matrix_imag_power(&rho, -s, &t).unwrap();
        assert!(a.adjoint().fro_dist(&inv) < 1e-9);
        // unitarity
        assert!(a.adjoint().mul(&a).fro_dist(&ComplexMatrix::identity(4)) < 1e-9);
    }

    #[test]
    fn imag_power_rejects_singular_state() {
        let rho = ComplexMatrix::diag(&[1.0, 0.0]);
        assert!(matches!(
            matrix_imag_power(&rho, 1.0, &tols()),
            Err(Error::SingularState { .. })
        ));
    }

    #[test]
    fn nullspace_of_singular_diagonal() {
        let m = ComplexMatrix::diag(&[2.0, 0.0, 1.0]);
        let ns = nullspace(&m, &tols()).unwrap();
        assert_eq!(ns.cols(), 1);
        assert!((ns[(1, 0)].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pseudo_inverse_solves_consistent_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = random_hermitian(5, &mut rng);
        let pinv = pseudo_inverse(&a, &tols()).unwrap();
        assert!(a.mul(&pinv).mul(&a).fro_dist(&a) < 1e-8);
    }

    #[test]
    fn polar_factor_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let a = ComplexMatrix::from_fn(4, 4, |_, _| {
            Complex64::new(
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
            )
        });
        let u = polar_unitary(&a, &tols()).unwrap();
        assert!(u.adjoint().mul(&u).fro_dist(&ComplexMatrix::identity(4)) < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn eig_reconstructs_any_random_hermitian(seed in 0u64..1u64 << 48, n in 2usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_hermitian(n, &mut rng);
            let e = eig_hermitian(&h, &Tolerances::default()).unwrap();
            let bound = 1e-10 * (1.0 + h.fro_norm());
            prop_assert!(reconstruction_residual(&h, &e) <= bound);
            for w in e.values.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
        }
    }
}
