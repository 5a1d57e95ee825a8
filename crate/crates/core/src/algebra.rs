//! Finite-dimensional *-algebra machinery.
//!
//! A [`StarAlgebra`] is a unital, adjoint- and product-closed operator
//! subspace handed around as a Hilbert-Schmidt-orthonormal basis. The
//! module computes generated algebras, commutants, the Wedderburn block
//! structure `⊕_α M_{d_α} ⊗ 1_{m_α}` (with explicit isometries), and the
//! conditional expectation onto a block algebra weighted by per-block
//! states.

use crate::numerics::rand::gaussian_complex;
use crate::numerics::{
    eig_hermitian, hs_inner, pseudo_inverse, ComplexMatrix, Complex64, Tolerances, TraceSide,
};
use crate::superop::Superoperator;
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Norm below which a Gram-Schmidt remainder is discarded as dependent
/// during algebra generation.
const GS_DROP_TOL: f64 = 1e-8;
/// Looser cutoff for spans derived from already-computed algebras
/// (compressions, Hermitian splittings): remainders at the closure-error
/// scale must not be normalized into spurious directions.
const DERIVED_DROP_TOL: f64 = 1e-6;

/// Unital adjoint-closed multiplicatively-closed operator subspace,
/// stored as an HS-orthonormal basis on the ambient matrix space.
#[derive(Debug, Clone)]
pub struct StarAlgebra {
    ambient_dim: usize,
    basis: Vec<ComplexMatrix>,
}

/// One factor of a Wedderburn decomposition: the compression by
/// `isometry` carries the block algebra onto `M_d ⊗ 1_m`.
#[derive(Debug, Clone)]
pub struct WedderburnBlock {
    pub central_projection: ComplexMatrix,
    pub d: usize,
    pub m: usize,
    /// Maps `C^d (x) C^m` into the ambient space; `V V* = central_projection`.
    pub isometry: ComplexMatrix,
}

impl WedderburnBlock {
    /// Compress `a` by the isometry and split off the nearest `X (x) 1_m`;
    /// returns `(X, ||V* a V - X (x) 1_m||_F)`.
    pub fn tensor_part(&self, a: &ComplexMatrix) -> (ComplexMatrix, f64) {
        let y = a.compress(&self.isometry);
        let m = self.m;
        let x = ComplexMatrix::from_fn(self.d, self.d, |i, j| {
            (0..m)
                .map(|s| y[(i * m + s, j * m + s)])
                .sum::<Complex64>()
                / m as f64
        });
        let residual = y.fro_dist(&x.kron(&ComplexMatrix::identity(m)));
        (x, residual)
    }
}

/// Modified Gram-Schmidt step: orthogonalize `candidate` against `basis`
/// (two passes) and return it normalized, unless it collapses below the
/// drop tolerance.
fn orthogonalize_with(
    candidate: &ComplexMatrix,
    basis: &[ComplexMatrix],
    drop_tol: f64,
) -> Option<ComplexMatrix> {
    let mut v = candidate.clone();
    for _ in 0..2 {
        for b in basis {
            let coeff = hs_inner(b, &v).expect("shapes agree");
            if coeff.norm_sqr() > 0.0 {
                v = v.sub(&b.scale(coeff));
            }
        }
    }
    let norm = v.fro_norm();
    if norm <= drop_tol {
        return None;
    }
    Some(v.scale_re(1.0 / norm))
}

fn orthogonalize(candidate: &ComplexMatrix, basis: &[ComplexMatrix]) -> Option<ComplexMatrix> {
    orthogonalize_with(candidate, basis, GS_DROP_TOL)
}

impl StarAlgebra {
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    /// The scalars `C . 1`.
    pub fn trivial(ambient_dim: usize) -> Self {
        let id = ComplexMatrix::identity(ambient_dim);
        let norm = id.fro_norm();
        StarAlgebra {
            ambient_dim,
            basis: vec![id.scale_re(1.0 / norm)],
        }
    }

    /// Orthogonal projection of `m` onto the spanned subspace.
    pub fn project(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.ambient_dim, self.ambient_dim);
        for b in &self.basis {
            let coeff = hs_inner(b, m).expect("shapes agree");
            if coeff.norm_sqr() > 0.0 {
                out = out.add(&b.scale(coeff));
            }
        }
        out
    }

    pub fn span_residual(&self, m: &ComplexMatrix) -> f64 {
        m.fro_dist(&self.project(m))
    }

    pub fn contains(&self, m: &ComplexMatrix, tol: f64) -> bool {
        self.span_residual(m) <= tol * (1.0 + m.fro_norm())
    }

    /// Check the defining invariants: orthonormal basis, adjoint and
    /// product closure, identity membership.
    pub fn validate(&self, tols: &Tolerances) -> Result<()> {
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let g = hs_inner(a, b)?;
                let expected = if i == j { 1.0 } else { 0.0 };
                if (g - Complex64::new(expected, 0.0)).norm() > 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "algebra basis is not orthonormal at pair ({i},{j})"
                    )));
                }
            }
        }
        let id = ComplexMatrix::identity(self.ambient_dim);
        if self.span_residual(&id) > tols.feas_tol * (1.0 + id.fro_norm()) {
            return Err(Error::InvalidInput("identity not in algebra span".into()));
        }
        for a in &self.basis {
            if self.span_residual(&a.adjoint()) > tols.feas_tol * 2.0 {
                return Err(Error::InvalidInput("algebra not adjoint-closed".into()));
            }
            for b in &self.basis {
                if self.span_residual(&a.mul(b)) > tols.feas_tol * 2.0 {
                    return Err(Error::InvalidInput("algebra not product-closed".into()));
                }
            }
        }
        Ok(())
    }
}

/// Smallest unital *-algebra containing the generators: seed with the
/// identity, the generators, and their adjoints, then append pairwise
/// products until the dimension stabilizes over a full round.
pub fn generate_star_algebra(
    generators: &[ComplexMatrix],
    ambient_dim: usize,
) -> Result<StarAlgebra> {
    for g in generators {
        if g.rows() != ambient_dim || g.cols() != ambient_dim {
            return Err(Error::DimensionMismatch(format!(
                "generator is {}x{}, ambient dimension is {}",
                g.rows(),
                g.cols(),
                ambient_dim
            )));
        }
    }
    let full_dim = ambient_dim * ambient_dim;
    let mut basis: Vec<ComplexMatrix> = Vec::new();
    let push = |basis: &mut Vec<ComplexMatrix>, cand: &ComplexMatrix| {
        if let Some(v) = orthogonalize(cand, basis) {
            basis.push(v);
        }
    };
    push(&mut basis, &ComplexMatrix::identity(ambient_dim));
    for g in generators {
        push(&mut basis, g);
        push(&mut basis, &g.adjoint());
    }
    // product closure; only products touching elements added after the
    // previous round can leave the current span
    let mut fresh_from = 0usize;
    loop {
        let len = basis.len();
        if len >= full_dim {
            break;
        }
        let mut appended = Vec::new();
        for i in 0..len {
            for j in 0..len {
                if i < fresh_from && j < fresh_from {
                    continue;
                }
                let prod = basis[i].mul(&basis[j]);
                if let Some(v) = orthogonalize(&prod, &basis) {
                    basis.push(v.clone());
                    appended.push(v);
                }
            }
        }
        fresh_from = len;
        if basis.len() == len {
            break;
        }
    }
    Ok(StarAlgebra { ambient_dim, basis })
}

/// Commutant `{X : [X, B] = 0 for all B in A}` as a StarAlgebra, from the
/// nullspace of the stacked commutator system on the operator space.
pub fn commutant(a: &StarAlgebra, tols: &Tolerances) -> Result<StarAlgebra> {
    let n = a.ambient_dim;
    let n2 = n * n;
    let id = ComplexMatrix::identity(n);
    // normal matrix of the stacked system: sum_B K_B* K_B with
    // K_B = I (x) B^T - B (x) I  (row-major vectorization)
    let mut normal = ComplexMatrix::zeros(n2, n2);
    for b in &a.basis {
        let k = id.kron(&b.transpose()).sub(&b.kron(&id));
        normal = normal.add(&k.adjoint().mul(&k));
    }
    let ns = crate::numerics::nullspace(&normal, tols)?;
    // nullspace of K*K equals nullspace of the stack
    let mut raw = Vec::new();
    for j in 0..ns.cols() {
        let m = ComplexMatrix::from_vec(n, n, ns.column(j))?;
        if let Some(v) = orthogonalize(&m, &raw) {
            raw.push(v);
        }
    }
    // re-span through Hermitian elements so the basis is adjoint-closed
    // exactly, not just within the eigenvector accuracy
    let basis = hermitian_family_of(&raw);
    Ok(StarAlgebra {
        ambient_dim: n,
        basis,
    })
}

/// Subspace equality through mutual projection residuals.
pub fn subspace_equal(a: &StarAlgebra, b: &StarAlgebra, tols: &Tolerances) -> Result<bool> {
    if a.ambient_dim != b.ambient_dim {
        return Err(Error::DimensionMismatch(format!(
            "comparing algebras on ambient dimensions {} and {}",
            a.ambient_dim, b.ambient_dim
        )));
    }
    if a.dim() != b.dim() {
        return Ok(false);
    }
    let ok = a
        .basis
        .iter()
        .all(|m| b.span_residual(m) <= tols.feas_tol)
        && b.basis.iter().all(|m| a.span_residual(m) <= tols.feas_tol);
    Ok(ok)
}

/// Center `A ∩ A'`.
pub fn center(a: &StarAlgebra, tols: &Tolerances) -> Result<StarAlgebra> {
    let com = commutant(a, tols)?;
    intersect(a, &com, tols)
}

fn span_projector(a: &StarAlgebra) -> ComplexMatrix {
    let n2 = a.ambient_dim * a.ambient_dim;
    let mut p = ComplexMatrix::zeros(n2, n2);
    for b in &a.basis {
        let v = b.vectorize();
        for (r, zr) in v.iter().enumerate() {
            if zr.norm_sqr() == 0.0 {
                continue;
            }
            for (c, zc) in v.iter().enumerate() {
                p[(r, c)] += zr * zc.conj();
            }
        }
    }
    p
}

fn intersect(a: &StarAlgebra, b: &StarAlgebra, tols: &Tolerances) -> Result<StarAlgebra> {
    let n = a.ambient_dim;
    let n2 = n * n;
    let pa = span_projector(a);
    let pb = span_projector(b);
    let id = ComplexMatrix::identity(n2);
    let gap = id.sub(&pa).add(&id.sub(&pb));
    let e = eig_hermitian(&gap.hermitize(), tols)?;
    let mut raw = Vec::new();
    for (k, &lam) in e.values.iter().enumerate() {
        if lam > 1e-8 {
            continue;
        }
        let m = ComplexMatrix::from_vec(n, n, e.vectors.column(k))?;
        // keep only directions genuinely inside both spans
        if a.span_residual(&m) <= tols.feas_tol && b.span_residual(&m) <= tols.feas_tol {
            if let Some(v) = orthogonalize(&m, &raw) {
                raw.push(v);
            }
        }
    }
    let basis = hermitian_family_of(&raw);
    Ok(StarAlgebra {
        ambient_dim: n,
        basis,
    })
}

/// Real-orthonormal family of Hermitian elements spanning the Hermitian
/// part of the algebra. The drop tolerance sits above the closure-error
/// scale so that adjoint-closure defects of the input basis cannot leak
/// in as spurious directions.
fn hermitian_family_of(basis: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let mut fam: Vec<ComplexMatrix> = Vec::new();
    for b in basis {
        let h1 = b.add(&b.adjoint()).scale_re(0.5);
        let h2 = b.sub(&b.adjoint()).scale(Complex64::new(0.0, -0.5));
        for h in [h1, h2] {
            if let Some(v) = orthogonalize_with(&h, &fam, DERIVED_DROP_TOL) {
                fam.push(v.hermitize());
            }
        }
    }
    fam
}

fn hermitian_family(a: &StarAlgebra) -> Vec<ComplexMatrix> {
    hermitian_family_of(&a.basis)
}

fn random_hermitian_combo(fam: &[ComplexMatrix], rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let n = fam[0].rows();
    let mut h = ComplexMatrix::zeros(n, n);
    for f in fam {
        h = h.add(&f.scale_re(gaussian_complex(rng).re));
    }
    h.hermitize()
}

/// Cluster ascending eigenvalues; two neighbours share a cluster iff
/// their gap is at most `cluster_tol * (1 + |lambda|)`.
fn cluster_eigenvalues(values: &[f64], cluster_tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut clusters = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        let split = k == values.len() || {
            let gap = values[k] - values[k - 1];
            gap > cluster_tol * (1.0 + values[k].abs().max(values[k - 1].abs()))
        };
        if split {
            clusters.push(start..k);
            start = k;
        }
    }
    clusters
}

fn min_intercluster_gap(values: &[f64], clusters: &[std::ops::Range<usize>]) -> f64 {
    let mut min_gap = f64::INFINITY;
    for w in clusters.windows(2) {
        let hi = values[w[0].end - 1];
        let lo = values[w[1].start];
        min_gap = min_gap.min(lo - hi);
    }
    min_gap
}

fn integer_check(x: f64, what: &str) -> Result<usize> {
    let r = x.round();
    if (x - r).abs() > 1e-6 || r < 0.5 {
        return Err(Error::InvalidInput(format!(
            "{what} = {x} is not a positive integer"
        )));
    }
    Ok(r as usize)
}

/// Orthonormal columns spanning the eigenspace of a projection-like
/// Hermitian matrix with eigenvalues near 1; `expect` fixes the count.
fn range_isometry(p: &ComplexMatrix, expect: usize, tols: &Tolerances) -> Result<ComplexMatrix> {
    let e = eig_hermitian(&p.hermitize(), tols)?;
    let n = e.values.len();
    let keep: Vec<usize> = (0..n).filter(|&k| e.values[k] > 0.5).collect();
    if keep.len() != expect {
        return Err(Error::InvalidInput(format!(
            "projection rank {} differs from expected {}",
            keep.len(),
            expect
        )));
    }
    Ok(ComplexMatrix::from_fn(p.rows(), keep.len(), |i, j| {
        e.vectors[(i, keep[j])]
    }))
}

/// Wedderburn decomposition of a star algebra into blocks
/// `M_{d_α} ⊗ 1_{m_α}`, each realized by an explicit isometry.
///
/// Minimal central projections come from eigenvalue clustering of a
/// random Hermitian central element; non-generic draws are retried up to
/// 3 times before reporting [`Error::NumericalDegeneracy`].
pub fn wedderburn_decompose(
    a: &StarAlgebra,
    tols: &Tolerances,
    seed: u64,
) -> Result<Vec<WedderburnBlock>> {
    let n = a.ambient_dim;
    let com = commutant(a, tols)?;
    let z = intersect(a, &com, tols)?;
    let z_dim = z.dim();
    if z_dim == 0 {
        return Err(Error::InvalidInput(
            "algebra has an empty center; it cannot be unital".into(),
        ));
    }
    let z_herm = hermitian_family(&z);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut projections: Option<Vec<ComplexMatrix>> = None;
    let mut last_gap = f64::NAN;
    let attempts = 3;
    for _ in 0..attempts {
        let h = random_hermitian_combo(&z_herm, &mut rng);
        let e = eig_hermitian(&h, tols)?;
        let clusters = cluster_eigenvalues(&e.values, tols.eig_cluster_tol);
        last_gap = min_intercluster_gap(&e.values, &clusters);
        if clusters.len() != z_dim {
            continue; // non-generic draw
        }
        let mut ps = Vec::with_capacity(clusters.len());
        let mut ok = true;
        for cl in &clusters {
            let mut p = ComplexMatrix::zeros(n, n);
            for k in cl.clone() {
                p = p.add(&ComplexMatrix::outer(&e.vectors.column(k)));
            }
            if z.span_residual(&p) > tols.feas_tol * (1.0 + p.fro_norm()) {
                ok = false;
                break;
            }
            ps.push(p);
        }
        if ok {
            projections = Some(ps);
            break;
        }
    }
    let projections = projections.ok_or(Error::NumericalDegeneracy {
        attempts,
        min_gap: last_gap,
        tol: tols.eig_cluster_tol,
    })?;

    let mut blocks = Vec::with_capacity(projections.len());
    for p in projections {
        blocks.push(build_block(a, &com, &p, tols, &mut rng)?);
    }

    // global consistency: sum d^2 = dim A, sum d*m = supported dimension
    let d2: usize = blocks.iter().map(|b| b.d * b.d).sum();
    if d2 != a.dim() {
        return Err(Error::InvalidInput(format!(
            "block dimensions sum to {} but the algebra has dimension {}",
            d2,
            a.dim()
        )));
    }
    let dm: usize = blocks.iter().map(|b| b.d * b.m).sum();
    if dm != n {
        return Err(Error::InvalidInput(format!(
            "blocks cover dimension {dm} of an ambient space of dimension {n}"
        )));
    }
    Ok(blocks)
}

fn build_block(
    a: &StarAlgebra,
    com: &StarAlgebra,
    p: &ComplexMatrix,
    tols: &Tolerances,
    rng: &mut ChaCha8Rng,
) -> Result<WedderburnBlock> {
    let rank = integer_check(p.trace().re, "central projection rank")?;
    let u_p = range_isometry(p, rank, tols)?;

    // compress algebra and commutant to the block
    let mut block_basis: Vec<ComplexMatrix> = Vec::new();
    for b in &a.basis {
        if let Some(v) = orthogonalize_with(&b.compress(&u_p), &block_basis, DERIVED_DROP_TOL) {
            block_basis.push(v);
        }
    }
    let d = integer_check((block_basis.len() as f64).sqrt(), "sqrt(block algebra dim)")?;
    if d * d != block_basis.len() {
        return Err(Error::InvalidInput(format!(
            "block algebra dimension {} is not a perfect square",
            block_basis.len()
        )));
    }
    let m = integer_check(rank as f64 / d as f64, "block multiplicity")?;

    let mut rc_basis: Vec<ComplexMatrix> = Vec::new();
    for c in &com.basis {
        if let Some(v) = orthogonalize_with(&c.compress(&u_p), &rc_basis, DERIVED_DROP_TOL) {
            rc_basis.push(v);
        }
    }

    // minimal projection of the relative commutant: a random Hermitian
    // element looks like 1_d (x) K, so each eigenvalue cluster has size d
    let rc_herm = hermitian_family(&StarAlgebra {
        ambient_dim: rank,
        basis: rc_basis,
    });
    let mut q_opt = None;
    for _ in 0..3 {
        let h = random_hermitian_combo(&rc_herm, rng);
        let e = eig_hermitian(&h, tols)?;
        let clusters = cluster_eigenvalues(&e.values, tols.eig_cluster_tol);
        if clusters.len() != m || clusters.iter().any(|c| c.len() != d) {
            continue;
        }
        // pick the cluster with the largest |eigenvalue| for stability
        let best = clusters
            .iter()
            .max_by(|x, y| {
                let vx = e.values[x.start].abs().max(e.values[x.end - 1].abs());
                let vy = e.values[y.start].abs().max(e.values[y.end - 1].abs());
                vx.partial_cmp(&vy).unwrap()
            })
            .unwrap();
        let mut q = ComplexMatrix::zeros(rank, rank);
        for k in best.clone() {
            q = q.add(&ComplexMatrix::outer(&e.vectors.column(k)));
        }
        q_opt = Some(q);
        break;
    }
    let q = q_opt.ok_or(Error::NumericalDegeneracy {
        attempts: 3,
        min_gap: f64::NAN,
        tol: tols.eig_cluster_tol,
    })?;

    // irreducible representation of the block algebra on ran q
    let u_q = range_isometry(&q, d, tols)?;
    let reps: Vec<ComplexMatrix> = block_basis.iter().map(|b| b.compress(&u_q)).collect();
    let rep_mat = ComplexMatrix::from_fn(d * d, d * d, |r, c| reps[c].vectorize()[r]);
    let rep_pinv = pseudo_inverse(&rep_mat, tols)?;

    let pull_back = |i: usize, j: usize| -> ComplexMatrix {
        let target = ComplexMatrix::matrix_unit(d, i, j).vectorize();
        let coeff = rep_pinv.mul_vec(&target);
        let mut e = ComplexMatrix::zeros(rank, rank);
        for (k, b) in block_basis.iter().enumerate() {
            if coeff[k].norm_sqr() > 0.0 {
                e = e.add(&b.scale(coeff[k]));
            }
        }
        e
    };

    let e11 = pull_back(0, 0);
    let w1 = range_isometry(&e11, m, tols)?;
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(d * m);
    for i in 0..d {
        let ei1 = if i == 0 { e11.clone() } else { pull_back(i, 0) };
        for s in 0..m {
            columns.push(ei1.mul_vec(&w1.column(s)));
        }
    }
    let w = ComplexMatrix::from_columns(rank, &columns);
    let v_local = crate::numerics::polar_unitary(&w, tols)?;
    let isometry = u_p.mul(&v_local);

    // hard postconditions on the isometry
    let idm = ComplexMatrix::identity(d * m);
    if isometry.adjoint().mul(&isometry).fro_dist(&idm) > 1e-9 * (1.0 + (d * m) as f64) {
        return Err(Error::InvalidInput(
            "block isometry failed V*V = I validation".into(),
        ));
    }
    if isometry.mul(&isometry.adjoint()).fro_dist(p) > 1e-8 {
        return Err(Error::InvalidInput(
            "block isometry failed V V* = P validation".into(),
        ));
    }
    let block = WedderburnBlock {
        central_projection: p.clone(),
        d,
        m,
        isometry,
    };
    for b in &a.basis {
        let compressed = p.mul(&b.mul(p));
        if compressed.fro_norm() < GS_DROP_TOL {
            continue;
        }
        let (_, resid) = block.tensor_part(b);
        if resid > 1e-7 * (1.0 + b.fro_norm()) {
            return Err(Error::InvalidInput(format!(
                "block compression is not of product form (residual {resid:.3e})"
            )));
        }
    }
    Ok(block)
}

/// Conditional expectation onto the block algebra of `blocks`, weighted
/// by the per-block states `omega_α`:
/// `E(A) = Σ_α V_α ( tr_2[ V_α* A V_α (1_d (x) ω_α) ] (x) 1_m ) V_α*`.
pub fn conditional_expectation(
    blocks: &[WedderburnBlock],
    weights: &[ComplexMatrix],
    ambient_dim: usize,
    tols: &Tolerances,
) -> Result<Superoperator> {
    if blocks.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} blocks but {} weight states",
            blocks.len(),
            weights.len()
        )));
    }
    for (b, w) in blocks.iter().zip(weights) {
        if w.rows() != b.m || w.cols() != b.m {
            return Err(Error::DimensionMismatch(format!(
                "weight state is {}x{}, block multiplicity is {}",
                w.rows(),
                w.cols(),
                b.m
            )));
        }
        if !w.is_density(tols) {
            return Err(Error::InvalidInput(
                "block weight is not a density matrix".into(),
            ));
        }
    }
    Superoperator::from_map(ambient_dim, ambient_dim, |unit| {
        let mut out = ComplexMatrix::zeros(ambient_dim, ambient_dim);
        for (b, w) in blocks.iter().zip(weights) {
            let y = unit.compress(&b.isometry);
            let weighted = y.mul(&ComplexMatrix::identity(b.d).kron(w));
            let x = weighted
                .partial_trace(b.d, b.m, TraceSide::Second)
                .expect("block dimensions fixed");
            let lifted = x.kron(&ComplexMatrix::identity(b.m)).expand(&b.isometry);
            out = out.add(&lifted);
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rand::{random_density, random_hermitian, random_unitary};
    use ::rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_rows(vec![
            vec![Complex64::default(), Complex64::new(1.0, 0.0)],
            vec![Complex64::new(1.0, 0.0), Complex64::default()],
        ])
        .unwrap()
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::diag(&[1.0, -1.0])
    }

    /// Algebra of all matrices X (x) 1_m conjugated by `u`.
    fn model_algebra(d: usize, m: usize, u: &ComplexMatrix, rng: &mut ChaCha8Rng) -> StarAlgebra {
        let n = d * m;
        let gens: Vec<ComplexMatrix> = (0..2)
            .map(|_| {
                let x = random_hermitian(d, rng);
                u.mul(&x.kron(&ComplexMatrix::identity(m))).mul(&u.adjoint())
            })
            .collect();
        generate_star_algebra(&gens, n).unwrap()
    }

    #[test]
    fn empty_generators_give_scalars() {
        let a = generate_star_algebra(&[], 3).unwrap();
        assert_eq!(a.dim(), 1);
        a.validate(&tols()).unwrap();
    }

    #[test]
    fn sigma_z_generates_diagonal_algebra() {
        let a = generate_star_algebra(&[pauli_z()], 2).unwrap();
        assert_eq!(a.dim(), 2);
        a.validate(&tols()).unwrap();
    }

    #[test]
    fn sigma_x_and_z_generate_full_matrix_algebra() {
        // oracle: rank of the Gram matrix of all words up to length 3
        let words = {
            let (x, z) = (pauli_x(), pauli_z());
            let mut ws = vec![ComplexMatrix::identity(2), x.clone(), z.clone()];
            let singles = ws.clone();
            for a in &singles {
                for b in &singles {
                    ws.push(a.mul(b));
                }
            }
            ws
        };
        let mut gram_basis: Vec<ComplexMatrix> = Vec::new();
        for w in &words {
            if let Some(v) = orthogonalize(w, &gram_basis) {
                gram_basis.push(v);
            }
        }
        assert_eq!(gram_basis.len(), 4);

        let a = generate_star_algebra(&[pauli_x(), pauli_z()], 2).unwrap();
        assert_eq!(a.dim(), 4);
        a.validate(&tols()).unwrap();
    }

    #[test]
    fn generation_is_monotone_in_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g1 = random_hermitian(4, &mut rng);
        let g2 = random_hermitian(4, &mut rng);
        let a1 = generate_star_algebra(std::slice::from_ref(&g1), 4).unwrap();
        let a12 = generate_star_algebra(&[g1, g2], 4).unwrap();
        assert!(a12.dim() >= a1.dim());
    }

    #[test]
    fn commutant_of_full_algebra_is_scalars() {
        let a = generate_star_algebra(&[pauli_x(), pauli_z()], 2).unwrap();
        let c = commutant(&a, &tols()).unwrap();
        assert_eq!(c.dim(), 1);
    }

    #[test]
    fn commutant_of_diagonal_is_diagonal() {
        let a = generate_star_algebra(&[pauli_z()], 2).unwrap();
        let c = commutant(&a, &tols()).unwrap();
        assert_eq!(c.dim(), 2);
        assert!(subspace_equal(&a, &c, &tols()).unwrap());
    }

    #[test]
    fn double_commutant_recovers_generated_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [3usize, 4, 6] {
            let g = random_hermitian(n, &mut rng);
            let a = generate_star_algebra(std::slice::from_ref(&g), n).unwrap();
            let cc = commutant(&commutant(&a, &tols()).unwrap(), &tols()).unwrap();
            assert!(
                subspace_equal(&a, &cc, &tols()).unwrap(),
                "A'' != A at n={n} (dims {} vs {})",
                a.dim(),
                cc.dim()
            );
        }
    }

    #[test]
    fn subspace_equal_cases() {
        let t = tols();
        let a = generate_star_algebra(&[pauli_z()], 2).unwrap();
        assert!(subspace_equal(&a, &a, &t).unwrap());
        let full = generate_star_algebra(&[pauli_x(), pauli_z()], 2).unwrap();
        assert!(!subspace_equal(&a, &full, &t).unwrap());
        // closures of the same generators in shuffled order agree
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gens: Vec<ComplexMatrix> = (0..3).map(|_| random_hermitian(4, &mut rng)).collect();
        let fwd = generate_star_algebra(&gens, 4).unwrap();
        let mut rev = gens;
        rev.reverse();
        let bwd = generate_star_algebra(&rev, 4).unwrap();
        assert!(subspace_equal(&fwd, &bwd, &t).unwrap());
    }

    #[test]
    fn wedderburn_of_full_algebra() {
        let a = generate_star_algebra(&[pauli_x(), pauli_z()], 2).unwrap();
        let blocks = wedderburn_decompose(&a, &tols(), 40).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!((blocks[0].d, blocks[0].m), (2, 1));
    }

    #[test]
    fn wedderburn_of_scalars() {
        let a = StarAlgebra::trivial(4);
        let blocks = wedderburn_decompose(&a, &tols(), 41).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!((blocks[0].d, blocks[0].m), (1, 4));
    }

    #[test]
    fn wedderburn_recovers_conjugated_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let u = random_unitary(6, &mut rng);
        let a = model_algebra(2, 3, &u, &mut rng);
        assert_eq!(a.dim(), 4);
        let blocks = wedderburn_decompose(&a, &tols(), 42).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!((blocks[0].d, blocks[0].m), (2, 3));
        for b in a.basis() {
            let (_, resid) = blocks[0].tensor_part(b);
            assert!(resid <= 1e-8 * (1.0 + b.fro_norm()));
        }
    }

    #[test]
    fn wedderburn_two_block_structure() {
        // direct sum M_2 (x) 1_2  (+)  M_1 (x) 1_1 inside M_5, conjugated
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let u = random_unitary(5, &mut rng);
        let gens: Vec<ComplexMatrix> = (0..2)
            .map(|_| {
                let x = random_hermitian(2, &mut rng);
                let scal = rng.gen::<f64>();
                let mut g = ComplexMatrix::zeros(5, 5);
                let xk = x.kron(&ComplexMatrix::identity(2));
                for i in 0..4 {
                    for j in 0..4 {
                        g[(i, j)] = xk[(i, j)];
                    }
                }
                g[(4, 4)] = Complex64::new(scal, 0.0);
                u.mul(&g).mul(&u.adjoint())
            })
            .collect();
        let a = generate_star_algebra(&gens, 5).unwrap();
        assert_eq!(a.dim(), 5); // 4 + 1
        let blocks = wedderburn_decompose(&a, &tols(), 77).unwrap();
        let mut dims: Vec<(usize, usize)> = blocks.iter().map(|b| (b.d, b.m)).collect();
        dims.sort();
        assert_eq!(dims, vec![(1, 1), (2, 2)]);
        let sum_p = blocks
            .iter()
            .fold(ComplexMatrix::zeros(5, 5), |acc, b| {
                acc.add(&b.central_projection)
            });
        assert!(sum_p.fro_dist(&ComplexMatrix::identity(5)) < 1e-7);
    }

    #[test]
    fn conditional_expectation_on_full_algebra_is_identity() {
        let a = generate_star_algebra(&[pauli_x(), pauli_z()], 2).unwrap();
        let blocks = wedderburn_decompose(&a, &tols(), 99).unwrap();
        let weights = vec![ComplexMatrix::identity(1)];
        let e = conditional_expectation(&blocks, &weights, 2, &tols()).unwrap();
        assert!(e.action_dist(&Superoperator::identity(2)) < 1e-9);
    }

    #[test]
    fn conditional_expectation_on_scalars_collapses_to_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let sigma = random_density(3, 3, &mut rng);
        let blocks = wedderburn_decompose(&StarAlgebra::trivial(3), &tols(), 7).unwrap();
        let e = conditional_expectation(&blocks, std::slice::from_ref(&sigma), 3, &tols()).unwrap();
        let a = random_hermitian(3, &mut rng);
        // basis of the block may differ from the computational one by a
        // unitary on the multiplicity space; E(A) = tr[w A] 1 with w the
        // pushed-forward weight. Check E fixes scalars and is a channel.
        let img = e.apply(&a).unwrap();
        let c = img.trace() / Complex64::new(3.0, 0.0);
        assert!(img.fro_dist(&ComplexMatrix::identity(3).scale(c)) < 1e-9);
        assert!(e.is_channel(&tols()));
    }

    #[test]
    fn conditional_expectation_axioms_on_two_block_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let u = random_unitary(5, &mut rng);
        let gens: Vec<ComplexMatrix> = (0..2)
            .map(|_| {
                let x = random_hermitian(2, &mut rng);
                let s = rng.gen::<f64>();
                let mut g = ComplexMatrix::zeros(5, 5);
                let xk = x.kron(&ComplexMatrix::identity(2));
                for i in 0..4 {
                    for j in 0..4 {
                        g[(i, j)] = xk[(i, j)];
                    }
                }
                g[(4, 4)] = Complex64::new(s, 0.0);
                u.mul(&g).mul(&u.adjoint())
            })
            .collect();
        let a = generate_star_algebra(&gens, 5).unwrap();
        let blocks = wedderburn_decompose(&a, &tols(), 5).unwrap();
        let weights: Vec<ComplexMatrix> = blocks
            .iter()
            .map(|b| random_density(b.m, b.m, &mut rng))
            .collect();
        let e = conditional_expectation(&blocks, &weights, 5, &tols()).unwrap();

        // idempotent, unital, CP
        assert!(e.compose(&e).unwrap().action_dist(&e) < 1e-9);
        assert!(e
            .apply(&ComplexMatrix::identity(5))
            .unwrap()
            .fro_dist(&ComplexMatrix::identity(5))
            < 1e-10);
        assert!(e.choi_min_eigenvalue(&tols()).unwrap() >= -1e-9);

        // fixes the algebra pointwise, and the fixed-point space has the
        // algebra's dimension
        for b in a.basis() {
            assert!(e.apply(b).unwrap().fro_dist(b) < tols().feas_tol);
        }
        let gap = e
            .action()
            .sub(&ComplexMatrix::identity(25));
        let ns = crate::numerics::nullspace(&gap, &tols()).unwrap();
        assert_eq!(ns.cols(), a.dim());

        // module property over random algebra elements
        for _ in 0..10 {
            let mut b1 = ComplexMatrix::zeros(5, 5);
            let mut b2 = ComplexMatrix::zeros(5, 5);
            for b in a.basis() {
                b1 = b1.add(&b.scale(gaussian_complex(&mut rng)));
                b2 = b2.add(&b.scale(gaussian_complex(&mut rng)));
            }
            let x = random_hermitian(5, &mut rng);
            let lhs = e.apply(&b1.mul(&x).mul(&b2)).unwrap();
            let rhs = b1.mul(&e.apply(&x).unwrap()).mul(&b2);
            assert!(lhs.fro_dist(&rhs) < 1e-8 * (1.0 + rhs.fro_norm()));
        }
    }
}

