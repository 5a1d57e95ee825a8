//! Certificate searches over channel feasibility sets.
//!
//! Both searches run Dykstra alternating projections on the Choi matrix
//! of the candidate channel, constrained to be PSD, unital, and to
//! reproduce the required state relations. Positive answers are verified
//! witnesses; a `None` only says the budget found nothing.

use super::StatisticalExperiment;
use crate::numerics::{ComplexMatrix, Complex64, Tolerances};
use crate::optim::{AffinePsdProblem, ChoiPattern, DykstraSolver};
use crate::superop::Superoperator;
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Budgets for the randomized feasibility searches.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub starts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            starts: 20,
            max_iter: 5000,
            seed: 0,
        }
    }
}

fn block_of(blocks: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    for (b, &len) in blocks.iter().enumerate() {
        out.extend(std::iter::repeat(b).take(len));
    }
    out
}

/// Choi-matrix index helper: entry `((a,k),(b,l))` of a map `M_in -> M_out`.
fn choi_unit(din: usize, dout: usize, a: usize, k: usize, b: usize, l: usize) -> ComplexMatrix {
    let _ = din;
    ComplexMatrix::matrix_unit(din * dout, a * dout + k, b * dout + l)
}

/// Unitality (`tr_1 J = I`) and per-state predual constraints for a
/// channel `M_in -> M_out` whose Choi matrix respects the block pattern.
fn channel_problem(
    in_dims: &[usize],
    out_dims: &[usize],
    state_pairs: &[(ComplexMatrix, ComplexMatrix)], // (target on in-space, source on out-space)
) -> AffinePsdProblem {
    let din: usize = in_dims.iter().sum();
    let dout: usize = out_dims.iter().sum();
    let in_block = block_of(in_dims);
    let out_block = block_of(out_dims);
    let mut problem = AffinePsdProblem::new(din * dout, Vec::new());
    problem.pattern = Some(ChoiPattern {
        in_blocks: in_dims.to_vec(),
        out_blocks: out_dims.to_vec(),
    });

    // unitality: sum_a J[(a,k),(a,l)] = delta_kl, same-block (k,l) only
    for k in 0..dout {
        for l in k..dout {
            if out_block[k] != out_block[l] {
                continue;
            }
            let mut g = ComplexMatrix::zeros(din * dout, din * dout);
            for a in 0..din {
                g = g.add(&choi_unit(din, dout, a, k, a, l));
            }
            let value = if k == l { 1.0 } else { 0.0 };
            problem.push_complex_constraint(&g, Complex64::new(value, 0.0));
        }
    }

    // predual: tr[source . L(E_ab)] = target[b,a], same-block (a,b) only
    for (target, source) in state_pairs {
        for a in 0..din {
            for b in a..din {
                if in_block[a] != in_block[b] {
                    continue;
                }
                let g = ComplexMatrix::matrix_unit(din, a, b).kron(source);
                problem.push_complex_constraint(&g, target[(b, a)]);
            }
        }
    }
    problem
}

fn witness_from_choi(
    din: usize,
    dout: usize,
    choi: &ComplexMatrix,
    state_pairs: &[(ComplexMatrix, ComplexMatrix)],
    tols: &Tolerances,
) -> Option<Superoperator> {
    // per-constraint residuals of feas_tol aggregate to about dim * feas_tol
    // in Frobenius norm
    let slack = tols.feas_tol * (din.max(dout) as f64 + 1.0);
    let sup = Superoperator::from_choi(din, dout, choi).ok()?;
    let unit_img = sup.apply(&ComplexMatrix::identity(din)).ok()?;
    if unit_img.fro_dist(&ComplexMatrix::identity(dout)) > slack {
        return None;
    }
    if sup.choi_min_eigenvalue(tols).ok()? < -tols.feas_tol {
        return None;
    }
    for (target, source) in state_pairs {
        let mapped = sup.predual_apply(source).ok()?;
        if mapped.fro_dist(target) > slack {
            return None;
        }
    }
    Some(sup)
}

/// Search for a channel `Γ != id` on the experiment's outcome algebra
/// whose predual fixes every state. `Some` is a verified counterexample
/// to minimality; `None` is evidence of minimality within the budget.
pub fn find_fixing_channel(
    exp: &StatisticalExperiment,
    opts: &SearchOptions,
    tols: &Tolerances,
) -> Result<Option<Superoperator>> {
    let dims = exp.effective_block_dims();
    let d = exp.dim();
    let state_pairs: Vec<(ComplexMatrix, ComplexMatrix)> = exp
        .states()
        .iter()
        .map(|(_, rho)| (rho.clone(), rho.clone()))
        .collect();
    let problem = channel_problem(&dims, &dims, &state_pairs);
    let solver = DykstraSolver::new(&problem, tols)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // pinched identity: the Choi of id on the block algebra
    let mut j_id = ComplexMatrix::zeros(d * d, d * d);
    let blocks = block_of(&dims);
    for a in 0..d {
        for b in 0..d {
            if blocks[a] == blocks[b] {
                j_id[(a * d + a, b * d + b)] = Complex64::new(1.0, 0.0);
            }
        }
    }

    let mut accept = |x: &ComplexMatrix| x.fro_dist(&j_id) > 1e-5;
    let found = solver.search(
        opts.starts,
        opts.max_iter,
        &mut rng,
        Some(&j_id),
        &mut accept,
    )?;
    match found {
        Some(choi) => Ok(witness_from_choi(d, d, &choi, &state_pairs, tols)),
        None => Ok(None),
    }
}

/// Search for a channel `Λ: M_1 -> M_2` with `Λ_*(ρ_θ^{(2)}) = ρ_θ^{(1)}`
/// for every shared label, i.e. a certificate that `e1` is a
/// coarse-graining of `e2`.
pub fn check_coarse_graining(
    e1: &StatisticalExperiment,
    e2: &StatisticalExperiment,
    opts: &SearchOptions,
    tols: &Tolerances,
) -> Result<Option<Superoperator>> {
    let pairs = match_labels(e1, e2)?;
    let d1 = e1.dim();
    let d2 = e2.dim();
    let state_pairs: Vec<(ComplexMatrix, ComplexMatrix)> = pairs
        .iter()
        .map(|&(i, j)| (e1.state(i).clone(), e2.state(j).clone()))
        .collect();
    let problem = channel_problem(
        &e1.effective_block_dims(),
        &e2.effective_block_dims(),
        &state_pairs,
    );
    let solver = DykstraSolver::new(&problem, tols)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut accept = |_: &ComplexMatrix| true;
    let found = solver.search(opts.starts, opts.max_iter, &mut rng, None, &mut accept)?;
    match found {
        Some(choi) => Ok(witness_from_choi(d1, d2, &choi, &state_pairs, tols)),
        None => Ok(None),
    }
}

/// Pair up equal labels; both experiments must carry the same label set.
pub(crate) fn match_labels(
    e1: &StatisticalExperiment,
    e2: &StatisticalExperiment,
) -> Result<Vec<(usize, usize)>> {
    if e1.len() != e2.len() {
        return Err(Error::LabelMismatch);
    }
    let mut pairs = Vec::with_capacity(e1.len());
    for (i, (label, _)) in e1.states().iter().enumerate() {
        let j = e2
            .states()
            .iter()
            .position(|(l, _)| l == label)
            .ok_or(Error::LabelMismatch)?;
        pairs.push((i, j));
    }
    Ok(pairs)
}
