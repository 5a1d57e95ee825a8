//! Statistical experiments on matrix algebras.
//!
//! An experiment is a labeled family of density matrices. The central
//! computation is its block normal form: support restriction, the
//! minimal sufficient subalgebra generated by state cocycles, the
//! Wedderburn structure of that algebra, and the per-block splitting
//! `ρ_θ = ⊕_α q_{αθ} ρ_{αθ} (x) ω_α` with parameter-independent `ω_α`.
//! On top of that sit the state-preserving conditional expectation, the
//! minimal form, and certificate searches for fixing channels,
//! coarse-grainings, and isomorphisms.

mod channels;
mod isomorphism;

pub use channels::{check_coarse_graining, find_fixing_channel, SearchOptions};
pub use isomorphism::{experiments_isomorphic, IsomorphismWitness};

use crate::algebra::{
    conditional_expectation, generate_star_algebra, subspace_equal, wedderburn_decompose,
    StarAlgebra, WedderburnBlock,
};
use crate::numerics::{
    imag_power_on_support, matrix_imag_power, support_isometry, ComplexMatrix, Tolerances,
    TraceSide,
};
use crate::superop::Superoperator;
use crate::{Error, Result};

/// Cocycle parameters used to generate the minimal subalgebra; an
/// irrational-looking spread so that no two points are rationally tied.
pub const DEFAULT_T_GRID: [f64; 8] = [0.37, 0.71, 1.13, 1.61, 2.23, 2.91, 3.57, 4.33];

/// First `n` grid points: the base grid under dyadic scalings
/// `1, 1/2, 1/4, 3/4, 1/8, 3/8, ...`, so doubling `n` refines the grid.
pub fn t_grid_points(n: usize) -> Vec<f64> {
    let mut scales = vec![1.0f64];
    let mut denom = 2.0;
    while scales.len() * DEFAULT_T_GRID.len() < n {
        let mut k = 1.0;
        while k < denom {
            scales.push(k / denom);
            k += 2.0;
        }
        denom *= 2.0;
    }
    let mut pts = Vec::with_capacity(n);
    'outer: for &s in &scales {
        for &t in &DEFAULT_T_GRID {
            pts.push(t * s);
            if pts.len() == n {
                break 'outer;
            }
        }
    }
    pts
}

/// A labeled family of density matrices on `M_dim`, optionally declared
/// block-diagonal (`⊕_α M_{d_α}`).
#[derive(Debug, Clone)]
pub struct StatisticalExperiment {
    dim: usize,
    states: Vec<(String, ComplexMatrix)>,
    block_dims: Option<Vec<usize>>,
}

impl StatisticalExperiment {
    pub fn new(
        dim: usize,
        states: Vec<(String, ComplexMatrix)>,
        block_dims: Option<Vec<usize>>,
        tols: &Tolerances,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidInput(
                "an experiment needs at least one state".into(),
            ));
        }
        if let Some(bd) = &block_dims {
            if bd.iter().sum::<usize>() != dim || bd.iter().any(|&d| d == 0) {
                return Err(Error::InvalidInput(format!(
                    "block dims {bd:?} do not partition dimension {dim}"
                )));
            }
        }
        for (label, rho) in &states {
            if rho.rows() != dim || rho.cols() != dim {
                return Err(Error::InvalidInput(format!(
                    "state '{label}' is {}x{}, expected {dim}x{dim}",
                    rho.rows(),
                    rho.cols()
                )));
            }
            if !rho.is_density(tols) {
                return Err(Error::InvalidInput(format!(
                    "state '{label}' is not a density matrix within tolerances"
                )));
            }
        }
        let exp = StatisticalExperiment {
            dim,
            states,
            block_dims,
        };
        if let Some(bd) = &exp.block_dims {
            for (label, rho) in &exp.states {
                if off_block_mass(rho, bd) > tols.feas_tol {
                    return Err(Error::InvalidInput(format!(
                        "state '{label}' is not block-diagonal for the declared blocks"
                    )));
                }
            }
        }
        Ok(exp)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[(String, ComplexMatrix)] {
        &self.states
    }

    pub fn labels(&self) -> Vec<&str> {
        self.states.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn state(&self, idx: usize) -> &ComplexMatrix {
        &self.states[idx].1
    }

    pub fn block_dims(&self) -> Option<&[usize]> {
        self.block_dims.as_deref()
    }

    /// Declared blocks, defaulting to a single full block.
    pub fn effective_block_dims(&self) -> Vec<usize> {
        self.block_dims.clone().unwrap_or_else(|| vec![self.dim])
    }

    /// Uniform average of the family; faithful iff this is strictly
    /// positive.
    pub fn average_state(&self) -> ComplexMatrix {
        let mut sigma = ComplexMatrix::zeros(self.dim, self.dim);
        for (_, rho) in &self.states {
            sigma = sigma.add(rho);
        }
        sigma.scale_re(1.0 / self.states.len() as f64)
    }

    /// Tensor a fixed ancilla state onto every member.
    pub fn embed_with_ancilla(&self, omega: &ComplexMatrix, tols: &Tolerances) -> Result<Self> {
        if !omega.is_density(tols) {
            return Err(Error::InvalidInput("ancilla is not a density matrix".into()));
        }
        let states = self
            .states
            .iter()
            .map(|(l, rho)| (l.clone(), rho.kron(omega)))
            .collect();
        StatisticalExperiment::new(self.dim * omega.rows(), states, None, tols)
    }

    /// Pad every member with a zero block of the given dimension.
    pub fn embed_direct_sum(&self, pad_dim: usize, tols: &Tolerances) -> Result<Self> {
        if pad_dim == 0 {
            return Ok(self.clone());
        }
        let n = self.dim + pad_dim;
        let states = self
            .states
            .iter()
            .map(|(l, rho)| {
                let mut big = ComplexMatrix::zeros(n, n);
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        big[(i, j)] = rho[(i, j)];
                    }
                }
                (l.clone(), big)
            })
            .collect();
        StatisticalExperiment::new(n, states, None, tols)
    }
}

fn off_block_mass(rho: &ComplexMatrix, block_dims: &[usize]) -> f64 {
    let mut block_of = Vec::with_capacity(rho.rows());
    for (b, &len) in block_dims.iter().enumerate() {
        block_of.extend(std::iter::repeat(b).take(len));
    }
    let mut mass = 0.0f64;
    for i in 0..rho.rows() {
        for j in 0..rho.cols() {
            if block_of[i] != block_of[j] {
                mass += rho[(i, j)].norm_sqr();
            }
        }
    }
    mass.sqrt()
}

/// Restrict to the support of the average state. Returns the restricted
/// experiment together with the channel embedding the restricted algebra
/// back into the original one (its predual compresses states).
pub fn restrict_to_support(
    exp: &StatisticalExperiment,
    tols: &Tolerances,
) -> Result<(StatisticalExperiment, Superoperator)> {
    let (restricted, u) = support_restriction_parts(exp, tols)?;
    let n = exp.dim();
    let r = u.cols();
    if r == n {
        return Ok((restricted, Superoperator::identity(n)));
    }
    let p = u.mul(&u.adjoint());
    let complement = ComplexMatrix::identity(n).sub(&p);
    let phi = ComplexMatrix::identity(r).scale_re(1.0 / r as f64);
    let compression = Superoperator::from_map(r, n, |b| {
        let lifted = u.mul(&b.mul(&u.adjoint()));
        let scalar = phi.mul(b).trace();
        lifted.add(&complement.scale(scalar))
    })?;
    Ok((restricted, compression))
}

/// Support isometry of the average state plus the compressed experiment.
fn support_restriction_parts(
    exp: &StatisticalExperiment,
    tols: &Tolerances,
) -> Result<(StatisticalExperiment, ComplexMatrix)> {
    let sigma = exp.average_state();
    let u = support_isometry(&sigma, tols)?;
    if u.cols() == exp.dim() {
        return Ok((exp.clone(), ComplexMatrix::identity(exp.dim())));
    }
    let states = exp
        .states
        .iter()
        .map(|(l, rho)| (l.clone(), rho.compress(&u)))
        .collect();
    let restricted = StatisticalExperiment::new(u.cols(), states, None, tols)?;
    Ok((restricted, u))
}

/// Cocycles `ρ_θ^{it} σ^{-it}` of every state against the average, over
/// the grid. The average must be strictly positive; individual states may
/// be rank-deficient, in which case their imaginary power is taken on the
/// support (the cocycle is then a partial isometry carrying the state's
/// support projection).
pub fn cocycle_generators(
    exp: &StatisticalExperiment,
    t_grid: &[f64],
    tols: &Tolerances,
) -> Result<Vec<ComplexMatrix>> {
    let sigma = exp.average_state();
    let mut gens = Vec::with_capacity(exp.len() * t_grid.len());
    for &t in t_grid {
        let sigma_neg = matrix_imag_power(&sigma, -t, tols)?;
        for (_, rho) in &exp.states {
            gens.push(imag_power_on_support(rho, t, tols)?.mul(&sigma_neg));
        }
    }
    Ok(gens)
}

/// Smallest subalgebra containing the cocycles of the family, closed
/// under conjugation by `σ^{it}` over the same grid.
pub fn minimal_sufficient_subalgebra(
    exp: &StatisticalExperiment,
    t_grid: &[f64],
    tols: &Tolerances,
) -> Result<StarAlgebra> {
    let n = exp.dim();
    let sigma = exp.average_state();
    let gens = cocycle_generators(exp, t_grid, tols)?;
    let mut algebra = generate_star_algebra(&gens, n)?;
    let full_dim = n * n;
    let rotations: Vec<ComplexMatrix> = t_grid
        .iter()
        .flat_map(|&t| [t, -t])
        .map(|t| matrix_imag_power(&sigma, t, tols))
        .collect::<Result<_>>()?;
    for _round in 0..50 {
        if algebra.dim() >= full_dim {
            return Ok(algebra);
        }
        let mut offenders: Vec<ComplexMatrix> = Vec::new();
        for u in &rotations {
            for b in algebra.basis() {
                let conj = u.mul(&b.mul(&u.adjoint()));
                if algebra.span_residual(&conj) > tols.feas_tol {
                    offenders.push(conj);
                }
            }
        }
        if offenders.is_empty() {
            return Ok(algebra);
        }
        let mut gens: Vec<ComplexMatrix> = algebra.basis().to_vec();
        gens.extend(offenders);
        let grown = generate_star_algebra(&gens, n)?;
        if subspace_equal(&algebra, &grown, tols)? {
            return Ok(algebra);
        }
        algebra = grown;
    }
    Err(Error::AlgebraNotStabilized)
}

/// One block of a decomposition: the Wedderburn factor plus the state
/// data living on it.
#[derive(Debug, Clone)]
pub struct KiBlock {
    pub block: WedderburnBlock,
    /// Parameter-independent state on the multiplicity space (`m x m`).
    pub omega: ComplexMatrix,
    /// `q_{αθ}` per state, summing to 1 over blocks.
    pub weights: Vec<f64>,
    /// Normalized block states `ρ_{αθ}` (`d x d`); maximally mixed
    /// placeholder where the weight vanishes.
    pub states: Vec<ComplexMatrix>,
}

/// Full decomposition of an experiment:
/// `ρ_θ = U ( ⊕_α q_{αθ} ρ_{αθ} (x) ω_α ) U*` with `U` the support
/// isometry and the blocks living on the support space.
#[derive(Debug, Clone)]
pub struct KiDecomposition {
    pub dim: usize,
    /// `dim x support_dim` isometry onto the support of the average state.
    pub support: ComplexMatrix,
    pub blocks: Vec<KiBlock>,
    /// The minimal sufficient subalgebra on the support space.
    pub algebra: StarAlgebra,
    pub labels: Vec<String>,
}

impl KiDecomposition {
    pub fn support_dim(&self) -> usize {
        self.support.cols()
    }

    /// Isometry of block `alpha` composed with the support embedding
    /// (`dim x (d_α m_α)`).
    pub fn lifted_isometry(&self, alpha: usize) -> ComplexMatrix {
        self.support.mul(&self.blocks[alpha].block.isometry)
    }

    /// Block dimensions `(d_α)` of the minimal form.
    pub fn minimal_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.block.d).collect()
    }

    /// Reassemble state `theta` from the block data.
    pub fn reconstruct(&self, theta: usize) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (alpha, kb) in self.blocks.iter().enumerate() {
            let q = kb.weights[theta];
            if q <= 0.0 {
                continue;
            }
            let inner = kb.states[theta].scale_re(q).kron(&kb.omega);
            out = out.add(&inner.expand(&self.lifted_isometry(alpha)));
        }
        out
    }

    /// Largest Frobenius deviation between reassembled and input states.
    pub fn reconstruction_residual(&self, exp: &StatisticalExperiment) -> f64 {
        (0..exp.len())
            .map(|t| self.reconstruct(t).fro_dist(exp.state(t)))
            .fold(0.0, f64::max)
    }
}

/// Koashi-Imoto decomposition: support restriction, cocycle-generated
/// minimal subalgebra, Wedderburn blocks, and per-block state splitting.
///
/// The parameter-independence of every `ω_α` is validated at `1e-7`;
/// a failure triggers a refinement of the cocycle grid (two levels)
/// before reporting [`Error::OmegaInconsistent`].
pub fn ki_decompose(
    exp: &StatisticalExperiment,
    tols: &Tolerances,
    seed: u64,
) -> Result<KiDecomposition> {
    ki_decompose_with(exp, tols, seed, DEFAULT_T_GRID.len())
}

/// [`ki_decompose`] with an explicit starting grid size; refinements
/// double it twice before giving up.
pub fn ki_decompose_with(
    exp: &StatisticalExperiment,
    tols: &Tolerances,
    seed: u64,
    base_grid: usize,
) -> Result<KiDecomposition> {
    let base_grid = base_grid.max(1);
    let (restricted, support) = support_restriction_parts(exp, tols)?;
    let mut worst_dev = f64::NAN;
    for level in 0..3 {
        let grid = t_grid_points(base_grid << level);
        let algebra = minimal_sufficient_subalgebra(&restricted, &grid, tols)?;
        let blocks = wedderburn_decompose(&algebra, tols, seed ^ (level as u64) << 32)?;
        match extract_blocks(&restricted, &blocks, tols) {
            Ok(ki_blocks) => {
                let ki = KiDecomposition {
                    dim: exp.dim(),
                    support: support.clone(),
                    blocks: ki_blocks,
                    algebra,
                    labels: exp.states.iter().map(|(l, _)| l.clone()).collect(),
                };
                let recon = ki.reconstruction_residual(exp);
                if recon <= 1e-8 * (1.0 + exp.dim() as f64) {
                    return Ok(ki);
                }
                worst_dev = recon;
            }
            Err(Error::OmegaInconsistent { deviation, .. }) => {
                worst_dev = deviation;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::OmegaInconsistent {
        deviation: worst_dev,
        tol: 1e-7,
    })
}

fn extract_blocks(
    exp: &StatisticalExperiment,
    blocks: &[WedderburnBlock],
    tols: &Tolerances,
) -> Result<Vec<KiBlock>> {
    let mut out = Vec::with_capacity(blocks.len());
    for wb in blocks {
        let (d, m) = (wb.d, wb.m);
        let mut weights = Vec::with_capacity(exp.len());
        let mut states = Vec::with_capacity(exp.len());
        let mut omega_acc = ComplexMatrix::zeros(m, m);
        let mut omega_cands: Vec<(usize, ComplexMatrix)> = Vec::new();
        let mut q_total = 0.0;
        for (theta, (_, rho)) in exp.states.iter().enumerate() {
            let compressed = rho.compress(&wb.isometry);
            let q = compressed.trace().re.max(0.0);
            if q <= tols.feas_tol {
                weights.push(0.0);
                states.push(ComplexMatrix::identity(d).scale_re(1.0 / d as f64));
                continue;
            }
            let rho_block = compressed
                .partial_trace(d, m, TraceSide::Second)?
                .scale_re(1.0 / q);
            let omega_cand = compressed
                .partial_trace(d, m, TraceSide::First)?
                .scale_re(1.0 / q);
            omega_acc = omega_acc.add(&omega_cand.scale_re(q));
            q_total += q;
            omega_cands.push((theta, omega_cand));
            weights.push(q);
            states.push(rho_block.hermitize());
        }
        if q_total <= tols.feas_tol {
            return Err(Error::InvalidInput(
                "block carries no state weight at all".into(),
            ));
        }
        let omega = omega_acc.scale_re(1.0 / q_total).hermitize();
        let deviation = omega_cands
            .iter()
            .map(|(_, cand)| cand.fro_dist(&omega))
            .fold(0.0, f64::max);
        if deviation > 1e-7 {
            return Err(Error::OmegaInconsistent {
                deviation,
                tol: 1e-7,
            });
        }
        out.push(KiBlock {
            block: wb.clone(),
            omega,
            weights,
            states,
        });
    }
    // per-state weights across blocks must form a distribution
    for theta in 0..exp.len() {
        let total: f64 = out.iter().map(|kb| kb.weights[theta]).sum();
        if (total - 1.0).abs() > tols.feas_tol * 10.0 {
            return Err(Error::InvalidInput(format!(
                "block weights for state {theta} sum to {total}"
            )));
        }
    }
    Ok(out)
}

/// The minimal form: states `⊕_α q_{αθ} ρ_{αθ}` on the block algebra
/// `⊕_α M_{d_α}`, together with the decomposition it came from.
pub fn minimal_form(
    exp: &StatisticalExperiment,
    tols: &Tolerances,
    seed: u64,
) -> Result<(StatisticalExperiment, KiDecomposition)> {
    minimal_form_with(exp, tols, seed, DEFAULT_T_GRID.len())
}

/// [`minimal_form`] with an explicit starting cocycle grid size.
pub fn minimal_form_with(
    exp: &StatisticalExperiment,
    tols: &Tolerances,
    seed: u64,
    base_grid: usize,
) -> Result<(StatisticalExperiment, KiDecomposition)> {
    let ki = ki_decompose_with(exp, tols, seed, base_grid)?;
    let dims = ki.minimal_dims();
    let total: usize = dims.iter().sum();
    let mut offsets = Vec::with_capacity(dims.len());
    let mut acc = 0;
    for &d in &dims {
        offsets.push(acc);
        acc += d;
    }
    let states: Vec<(String, ComplexMatrix)> = ki
        .labels
        .iter()
        .enumerate()
        .map(|(theta, label)| {
            let mut rho = ComplexMatrix::zeros(total, total);
            for (alpha, kb) in ki.blocks.iter().enumerate() {
                let q = kb.weights[theta];
                if q <= 0.0 {
                    continue;
                }
                let block = kb.states[theta].scale_re(q);
                let off = offsets[alpha];
                for i in 0..kb.block.d {
                    for j in 0..kb.block.d {
                        rho[(off + i, off + j)] = block[(i, j)];
                    }
                }
            }
            (label.clone(), rho)
        })
        .collect();
    let min_exp = StatisticalExperiment::new(total, states, Some(dims), tols)?;
    Ok((min_exp, ki))
}

/// State-preserving conditional expectation onto the decomposition's
/// block algebra, acting on the original space. A rank-deficient support
/// contributes one extra scalar block on its complement so the map stays
/// unital.
pub fn conditional_expectation_for(
    exp: &StatisticalExperiment,
    ki: &KiDecomposition,
    tols: &Tolerances,
) -> Result<Superoperator> {
    if ki.dim != exp.dim() || ki.labels.len() != exp.len() {
        return Err(Error::DimensionMismatch(
            "decomposition does not belong to this experiment".into(),
        ));
    }
    let n = exp.dim();
    let mut blocks = Vec::with_capacity(ki.blocks.len() + 1);
    let mut weights = Vec::with_capacity(ki.blocks.len() + 1);
    for (alpha, kb) in ki.blocks.iter().enumerate() {
        let isometry = ki.lifted_isometry(alpha);
        let central_projection = isometry.mul(&isometry.adjoint());
        blocks.push(WedderburnBlock {
            central_projection,
            d: kb.block.d,
            m: kb.block.m,
            isometry,
        });
        weights.push(kb.omega.clone());
    }
    let r = ki.support_dim();
    if r < n {
        let p = ki.support.mul(&ki.support.adjoint());
        let complement = ComplexMatrix::identity(n).sub(&p);
        let k = n - r;
        let w = crate::numerics::support_isometry(&complement, tols)?;
        if w.cols() != k {
            return Err(Error::InvalidInput(
                "support complement has unexpected rank".into(),
            ));
        }
        blocks.push(WedderburnBlock {
            central_projection: complement,
            d: 1,
            m: k,
            isometry: w,
        });
        weights.push(ComplexMatrix::identity(k).scale_re(1.0 / k as f64));
    }
    conditional_expectation(&blocks, &weights, n, tols)
}

/// Convenience wrapper: decomposition and conditional expectation in one
/// call, validating state preservation.
pub fn state_preserving_expectation(
    exp: &StatisticalExperiment,
    tols: &Tolerances,
    seed: u64,
) -> Result<(KiDecomposition, Superoperator)> {
    let ki = ki_decompose(exp, tols, seed)?;
    let e = conditional_expectation_for(exp, &ki, tols)?;
    Ok((ki, e))
}
