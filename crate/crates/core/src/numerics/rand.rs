//! Seeded random matrix constructions used by the randomized pieces of
//! the library (generic central elements, feasibility starts) and by the
//! test suites.

use super::{polar_unitary, ComplexMatrix, Complex64, Tolerances};
use rand::Rng;

/// Standard complex Gaussian entry (Box-Muller).
pub fn gaussian_complex(rng: &mut impl Rng) -> Complex64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    Complex64::new(
        r * (2.0 * std::f64::consts::PI * u2).cos(),
        r * (2.0 * std::f64::consts::PI * u2).sin(),
    )
}

pub fn random_complex_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_complex(rng))
}

pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    random_complex_matrix(n, n, rng).hermitize()
}

pub fn random_unit_vector(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..n).map(|_| gaussian_complex(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    v
}

/// Haar-ish random unitary from the polar factor of a Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let a = random_complex_matrix(n, n, rng);
    polar_unitary(&a, &Tolerances::default()).expect("gaussian matrix is full rank")
}

/// Random density matrix of the given rank (`rank <= n`).
pub fn random_density(n: usize, rank: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let rank = rank.clamp(1, n);
    let a = random_complex_matrix(n, rank, rng);
    let g = a.mul(&a.adjoint());
    let tr = g.trace().re;
    g.scale_re(1.0 / tr)
}

/// Random PSD matrix with unit-scale entries.
pub fn random_psd(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let a = random_complex_matrix(n, n, rng);
    a.mul(&a.adjoint()).scale_re(1.0 / n as f64)
}

/// Random probability vector of length `n`.
pub fn random_probability(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let s: f64 = p.iter().sum();
    for x in &mut p {
        *x /= s;
    }
    p
}
