//! Isomorphism testing between minimal forms.
//!
//! Two minimal forms are isomorphic iff some block pairing matches
//! dimensions and weights and the block state families are simultaneously
//! unitarily equivalent. Candidate pairings are filtered by trace
//! fingerprints of words in the states; surviving pairs get an explicit
//! intertwiner from the joint commutant equation, unitarized by a polar
//! decomposition and verified by conjugation residual.

use super::channels::{find_fixing_channel, match_labels, SearchOptions};
use super::StatisticalExperiment;
use crate::numerics::rand::gaussian_complex;
use crate::numerics::{nullspace, polar_unitary, ComplexMatrix, Tolerances};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MATCH_TOL: f64 = 1e-7;
const WORD_BUDGET: usize = 20_000;

/// Block permutation plus per-block unitaries with
/// `U_α ρ^{(1)}_{αθ} U_α* = ρ^{(2)}_{map(α),θ}`.
#[derive(Debug, Clone)]
pub struct IsomorphismWitness {
    pub block_map: Vec<usize>,
    pub unitaries: Vec<ComplexMatrix>,
    pub residual: f64,
}

struct BlockData {
    d: usize,
    q: Vec<f64>,
    states: Vec<ComplexMatrix>,
}

fn split_blocks(exp: &StatisticalExperiment, state_order: &[usize]) -> Vec<BlockData> {
    let dims = exp.effective_block_dims();
    let mut out = Vec::with_capacity(dims.len());
    let mut offset = 0;
    for &d in &dims {
        let mut q = Vec::with_capacity(state_order.len());
        let mut states = Vec::with_capacity(state_order.len());
        for &idx in state_order {
            let rho = exp.state(idx);
            let block = ComplexMatrix::from_fn(d, d, |i, j| rho[(offset + i, offset + j)]);
            let weight = block.trace().re.max(0.0);
            if weight > 1e-9 {
                states.push(block.scale_re(1.0 / weight).hermitize());
            } else {
                states.push(ComplexMatrix::identity(d).scale_re(1.0 / d as f64));
            }
            q.push(weight);
        }
        out.push(BlockData { d, q, states });
        offset += d;
    }
    out
}

/// Depth-first comparison of `tr[w]` over all words `w` in the two state
/// families, up to length `2 d^2` and a global word budget.
fn fingerprints_match(a: &BlockData, b: &BlockData) -> bool {
    let contributing: Vec<usize> = (0..a.q.len()).filter(|&t| a.q[t] > 1e-6).collect();
    if contributing.is_empty() {
        return true;
    }
    let max_len = 2 * a.d * a.d;
    let mut budget = WORD_BUDGET;
    // stack of unfinished words, represented by their running products
    let mut stack: Vec<(ComplexMatrix, ComplexMatrix, usize)> = contributing
        .iter()
        .rev()
        .map(|&t| (a.states[t].clone(), b.states[t].clone(), 1))
        .collect();
    while let Some((pa, pb, len)) = stack.pop() {
        let (ta, tb) = (pa.trace(), pb.trace());
        if (ta - tb).norm() > MATCH_TOL * (1.0 + ta.norm()) {
            return false;
        }
        if budget == 0 {
            continue;
        }
        if len < max_len {
            for &t in contributing.iter().rev() {
                if budget == 0 {
                    break;
                }
                budget -= 1;
                stack.push((pa.mul(&a.states[t]), pb.mul(&b.states[t]), len + 1));
            }
        }
    }
    true
}

fn weights_match(a: &BlockData, b: &BlockData) -> bool {
    a.d == b.d
        && a.q
            .iter()
            .zip(&b.q)
            .all(|(x, y)| (x - y).abs() <= MATCH_TOL * (1.0 + x.abs()))
}

/// Unitary intertwiner between two block state families, from a random
/// element of the solution space of `X ρ^{(1)}_θ = ρ^{(2)}_θ X`.
fn block_intertwiner(
    a: &BlockData,
    b: &BlockData,
    rng: &mut ChaCha8Rng,
    tols: &Tolerances,
) -> Option<(ComplexMatrix, f64)> {
    let d = a.d;
    if d == 1 {
        return Some((ComplexMatrix::identity(1), 0.0));
    }
    let id = ComplexMatrix::identity(d);
    let mut normal = ComplexMatrix::zeros(d * d, d * d);
    let mut any = false;
    for t in 0..a.q.len() {
        if a.q[t] <= 1e-6 {
            continue;
        }
        any = true;
        let k = id
            .kron(&a.states[t].transpose())
            .sub(&b.states[t].kron(&id));
        normal = normal.add(&k.adjoint().mul(&k));
    }
    if !any {
        return Some((ComplexMatrix::identity(d), 0.0));
    }
    let ns = nullspace(&normal, tols).ok()?;
    if ns.cols() == 0 {
        return None;
    }
    for _ in 0..3 {
        let mut x = ComplexMatrix::zeros(d, d);
        for j in 0..ns.cols() {
            let coeff = gaussian_complex(rng);
            let m = ComplexMatrix::from_vec(d, d, ns.column(j)).ok()?;
            x = x.add(&m.scale(coeff));
        }
        let Ok(u) = polar_unitary(&x, tols) else {
            continue;
        };
        if u.adjoint().mul(&u).fro_dist(&ComplexMatrix::identity(d)) > 1e-8 {
            continue;
        }
        let residual = (0..a.q.len())
            .filter(|&t| a.q[t] > 1e-6)
            .map(|t| u.mul(&a.states[t]).mul(&u.adjoint()).fro_dist(&b.states[t]))
            .fold(0.0, f64::max);
        if residual <= MATCH_TOL {
            return Some((u, residual));
        }
    }
    None
}

fn try_match(
    blocks1: &[BlockData],
    blocks2: &[BlockData],
    rng: &mut ChaCha8Rng,
    tols: &Tolerances,
) -> Option<IsomorphismWitness> {
    let n = blocks1.len();
    if n != blocks2.len() {
        return None;
    }
    // candidate lists per block of e1
    let candidates: Vec<Vec<usize>> = blocks1
        .iter()
        .map(|a| {
            (0..n)
                .filter(|&j| weights_match(a, &blocks2[j]) && fingerprints_match(a, &blocks2[j]))
                .collect()
        })
        .collect();
    let mut block_map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut unitaries: Vec<Option<(ComplexMatrix, f64)>> = vec![None; n];

    fn assign(
        alpha: usize,
        blocks1: &[BlockData],
        blocks2: &[BlockData],
        candidates: &[Vec<usize>],
        block_map: &mut [usize],
        used: &mut [bool],
        unitaries: &mut [Option<(ComplexMatrix, f64)>],
        rng: &mut ChaCha8Rng,
        tols: &Tolerances,
    ) -> bool {
        if alpha == blocks1.len() {
            return true;
        }
        for &beta in &candidates[alpha] {
            if used[beta] {
                continue;
            }
            if let Some(pair) = block_intertwiner(&blocks1[alpha], &blocks2[beta], rng, tols) {
                used[beta] = true;
                block_map[alpha] = beta;
                unitaries[alpha] = Some(pair);
                if assign(
                    alpha + 1,
                    blocks1,
                    blocks2,
                    candidates,
                    block_map,
                    used,
                    unitaries,
                    rng,
                    tols,
                ) {
                    return true;
                }
                used[beta] = false;
                block_map[alpha] = usize::MAX;
                unitaries[alpha] = None;
            }
        }
        false
    }

    if !assign(
        0,
        blocks1,
        blocks2,
        &candidates,
        &mut block_map,
        &mut used,
        &mut unitaries,
        rng,
        tols,
    ) {
        return None;
    }
    let mut residual = 0.0f64;
    let mut us = Vec::with_capacity(n);
    for u in unitaries.into_iter().flatten() {
        residual = residual.max(u.1);
        us.push(u.0);
    }
    Some(IsomorphismWitness {
        block_map,
        unitaries: us,
        residual,
    })
}

/// Decide isomorphism of two minimal forms and produce the block
/// permutation and unitaries when they are.
///
/// When no pairing verifies, minimality of both inputs is re-checked
/// with [`find_fixing_channel`]; a witness there means the inputs broke
/// the precondition, reported as [`Error::NotMinimalForm`]. Otherwise the
/// verdict is a sound `None`.
pub fn experiments_isomorphic(
    e1: &StatisticalExperiment,
    e2: &StatisticalExperiment,
    opts: &SearchOptions,
    tols: &Tolerances,
) -> Result<Option<IsomorphismWitness>> {
    let pairs = match_labels(e1, e2)?;
    let order1: Vec<usize> = (0..e1.len()).collect();
    let order2: Vec<usize> = pairs.iter().map(|&(_, j)| j).collect();
    let blocks1 = split_blocks(e1, &order1);
    let blocks2 = split_blocks(e2, &order2);

    let mut dims1: Vec<usize> = blocks1.iter().map(|b| b.d).collect();
    let mut dims2: Vec<usize> = blocks2.iter().map(|b| b.d).collect();
    dims1.sort_unstable();
    dims2.sort_unstable();

    if dims1 == dims2 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x1503);
        if let Some(witness) = try_match(&blocks1, &blocks2, &mut rng, tols) {
            return Ok(Some(witness));
        }
    }
    // no pairing: the answer is only sound if both inputs really are
    // minimal forms
    for exp in [e1, e2] {
        if find_fixing_channel(exp, opts, tols)?.is_some() {
            return Err(Error::NotMinimalForm);
        }
    }
    Ok(None)
}
