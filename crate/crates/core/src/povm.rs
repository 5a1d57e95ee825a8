//! Discrete POVMs as quantum-to-classical channels.
//!
//! A POVM is a finite list of PSD effects summing to the identity. Its
//! QC channel sends outcome functions to operators; postprocessing
//! between POVMs is an exact LP feasibility question over stochastic
//! kernels, kernel minimality an exact LP optimum, and relabeling
//! minimality a merge of proportional effects. The fully quantum
//! dilation realizes the QC channel as the restriction of a channel with
//! a matrix-algebra outcome space through the diagonal pinching.

use crate::experiment::StatisticalExperiment;
use crate::numerics::{hermitian_function, ComplexMatrix, Complex64, Tolerances};
use crate::optim::{lp_solve, LinearProgram, LpOutcome};
use crate::superop::Superoperator;
use crate::{Error, Result};

/// Finite POVM: labeled PSD effects with `sum_i M_i = 1`.
#[derive(Debug, Clone)]
pub struct DiscretePovm {
    dim: usize,
    effects: Vec<(String, ComplexMatrix)>,
}

impl DiscretePovm {
    pub fn new(
        dim: usize,
        effects: Vec<(String, ComplexMatrix)>,
        tols: &Tolerances,
    ) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidInput("a POVM needs at least one effect".into()));
        }
        let mut total = ComplexMatrix::zeros(dim, dim);
        for (label, m) in &effects {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::InvalidInput(format!(
                    "effect '{label}' is {}x{}, expected {dim}x{dim}",
                    m.rows(),
                    m.cols()
                )));
            }
            if !m.is_psd(tols) {
                return Err(Error::InvalidInput(format!(
                    "effect '{label}' is not positive semidefinite"
                )));
            }
            total = total.add(m);
        }
        if total.fro_dist(&ComplexMatrix::identity(dim)) > tols.feas_tol * (1.0 + dim as f64) {
            return Err(Error::InvalidInput(
                "effects do not sum to the identity".into(),
            ));
        }
        Ok(DiscretePovm { dim, effects })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[(String, ComplexMatrix)] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &ComplexMatrix {
        &self.effects[i].1
    }

    pub fn labels(&self) -> Vec<&str> {
        self.effects.iter().map(|(l, _)| l.as_str()).collect()
    }

    /// Outcome distribution `(tr[rho M_i])_i` of a state.
    pub fn outcome_distribution(&self, rho: &ComplexMatrix) -> Result<Vec<f64>> {
        if rho.rows() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "state is {}x{}, POVM acts on dimension {}",
                rho.rows(),
                rho.cols(),
                self.dim
            )));
        }
        Ok(self
            .effects
            .iter()
            .map(|(_, m)| rho.mul(m).trace().re)
            .collect())
    }

    /// Drop effects with trace at most `feas_tol`; returns the retained
    /// POVM and the index map old -> new (`None` for dropped effects).
    pub fn drop_zero_effects(&self, tols: &Tolerances) -> (DiscretePovm, Vec<Option<usize>>) {
        let mut map = Vec::with_capacity(self.effects.len());
        let mut kept = Vec::new();
        for (label, m) in &self.effects {
            if m.trace().re <= tols.feas_tol {
                map.push(None);
            } else {
                map.push(Some(kept.len()));
                kept.push((label.clone(), m.clone()));
            }
        }
        (
            DiscretePovm {
                dim: self.dim,
                effects: kept,
            },
            map,
        )
    }
}

/// Column-stochastic kernel `kappa(i|j)`: column `j` is the distribution
/// of the new outcome given old outcome `j`.
#[derive(Debug, Clone)]
pub struct StochasticKernel {
    /// `rows x cols`, row-major; rows index the produced outcome.
    pub matrix: Vec<Vec<f64>>,
}

impl StochasticKernel {
    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn cols(&self) -> usize {
        self.matrix.first().map_or(0, |r| r.len())
    }

    pub fn identity(n: usize) -> Self {
        StochasticKernel {
            matrix: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn validate(&self, tols: &Tolerances) -> Result<()> {
        let (r, c) = (self.rows(), self.cols());
        for j in 0..c {
            let mut col_sum = 0.0;
            for i in 0..r {
                let v = self.matrix[i][j];
                if v < -tols.feas_tol {
                    return Err(Error::InvalidInput(format!(
                        "kernel entry ({i},{j}) = {v} is negative"
                    )));
                }
                col_sum += v;
            }
            if (col_sum - 1.0).abs() > tols.feas_tol * (1.0 + r as f64) {
                return Err(Error::InvalidInput(format!(
                    "kernel column {j} sums to {col_sum}"
                )));
            }
        }
        Ok(())
    }

    /// `self . other`: first `other`, then `self`.
    pub fn compose(&self, other: &StochasticKernel) -> Result<StochasticKernel> {
        if self.cols() != other.rows() {
            return Err(Error::DimensionMismatch(format!(
                "composing a {}x{} kernel after {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        let matrix = (0..self.rows())
            .map(|i| {
                (0..other.cols())
                    .map(|j| {
                        (0..self.cols())
                            .map(|k| self.matrix[i][k] * other.matrix[k][j])
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Ok(StochasticKernel { matrix })
    }

    /// Apply to a POVM: `(kappa * N)_i = sum_j kappa(i|j) N_j`.
    pub fn apply(&self, povm: &DiscretePovm) -> Result<Vec<ComplexMatrix>> {
        if self.cols() != povm.len() {
            return Err(Error::DimensionMismatch(format!(
                "kernel has {} columns, POVM has {} outcomes",
                self.cols(),
                povm.len()
            )));
        }
        let d = povm.dim();
        Ok((0..self.rows())
            .map(|i| {
                let mut m = ComplexMatrix::zeros(d, d);
                for j in 0..self.cols() {
                    let w = self.matrix[i][j];
                    if w != 0.0 {
                        m = m.add(&povm.effect(j).scale_re(w));
                    }
                }
                m
            })
            .collect())
    }

    /// Largest Frobenius deviation of `kappa * N` from `M`.
    pub fn postprocessing_residual(
        &self,
        m: &DiscretePovm,
        n: &DiscretePovm,
    ) -> Result<f64> {
        let applied = self.apply(n)?;
        Ok(applied
            .iter()
            .zip(m.effects())
            .map(|(got, (_, want))| got.fro_dist(want))
            .fold(0.0, f64::max))
    }
}

/// QC channel of a POVM: functions on outcomes (as the diagonal of
/// `M_n`) map to `sum_i f_i M_i`; off-diagonal matrix units map to zero.
/// The predual carries a state to its outcome distribution.
pub fn qc_channel(povm: &DiscretePovm) -> Result<Superoperator> {
    let n = povm.len();
    let d = povm.dim();
    Superoperator::from_map(n, d, |unit| {
        let mut out = ComplexMatrix::zeros(d, d);
        for i in 0..n {
            let coeff = unit[(i, i)];
            if coeff.norm_sqr() > 0.0 {
                out = out.add(&povm.effect(i).scale(coeff));
            }
        }
        out
    })
}

/// LP rows expressing `sum_j kappa(i|j) N_j = M_i` plus column
/// stochasticity, over variables `kappa(i|j)` laid out as `i * n_n + j`.
fn postprocessing_lp(m: &DiscretePovm, n: &DiscretePovm, objective: Vec<f64>) -> LinearProgram {
    let (n_m, n_n, d) = (m.len(), n.len(), m.dim());
    let vars = n_m * n_n;
    let mut a = Vec::new();
    let mut b = Vec::new();
    // columns of kappa are distributions
    for j in 0..n_n {
        let mut row = vec![0.0; vars];
        for i in 0..n_m {
            row[i * n_n + j] = 1.0;
        }
        a.push(row);
        b.push(1.0);
    }
    // effect equations, split into real entries of the Hermitian matrices
    for i in 0..n_m {
        for r in 0..d {
            for c in r..d {
                // real part
                let mut row = vec![0.0; vars];
                for j in 0..n_n {
                    row[i * n_n + j] = n.effect(j)[(r, c)].re;
                }
                a.push(row);
                b.push(m.effect(i)[(r, c)].re);
                if c > r {
                    let mut row = vec![0.0; vars];
                    for j in 0..n_n {
                        row[i * n_n + j] = n.effect(j)[(r, c)].im;
                    }
                    a.push(row);
                    b.push(m.effect(i)[(r, c)].im);
                }
            }
        }
    }
    LinearProgram { a, b, c: objective }
}

fn kernel_from_solution(x: &[f64], n_m: usize, n_n: usize) -> StochasticKernel {
    StochasticKernel {
        matrix: (0..n_m)
            .map(|i| (0..n_n).map(|j| x[i * n_n + j].max(0.0)).collect())
            .collect(),
    }
}

/// Decide `M ⪯ N` by exact LP feasibility; `Some(kernel)` is a
/// postprocessing witness, `None` a certificate of infeasibility.
pub fn postprocessing_leq(
    m: &DiscretePovm,
    n: &DiscretePovm,
    tols: &Tolerances,
) -> Result<Option<StochasticKernel>> {
    if m.dim() != n.dim() {
        return Err(Error::DimensionMismatch(format!(
            "POVMs act on dimensions {} and {}",
            m.dim(),
            n.dim()
        )));
    }
    let lp = postprocessing_lp(m, n, vec![0.0; m.len() * n.len()]);
    match lp_solve(&lp)? {
        LpOutcome::Feasible { x, .. } => {
            let kernel = kernel_from_solution(&x, m.len(), n.len());
            kernel.validate(tols)?;
            Ok(Some(kernel))
        }
        LpOutcome::Infeasible => Ok(None),
    }
}

/// Postprocessing equivalence: kernels both ways, or `None`.
pub fn povm_postproc_equiv(
    m: &DiscretePovm,
    n: &DiscretePovm,
    tols: &Tolerances,
) -> Result<Option<(StochasticKernel, StochasticKernel)>> {
    let fwd = postprocessing_leq(m, n, tols)?;
    let Some(fwd) = fwd else { return Ok(None) };
    let bwd = postprocessing_leq(n, m, tols)?;
    Ok(bwd.map(|bwd| (fwd, bwd)))
}

/// Fixed informationally complete probe family: the maximally mixed
/// state followed by `(1 + H_k/2d)/d` over a Hermitian operator basis.
pub fn ic_probe_family(d: usize) -> Vec<ComplexMatrix> {
    let mut probes = vec![ComplexMatrix::identity(d).scale_re(1.0 / d as f64)];
    for h in hermitian_operator_basis(d) {
        let rho = ComplexMatrix::identity(d)
            .scale_re(1.0 / d as f64)
            .add(&h.scale_re(0.5 / d as f64));
        probes.push(rho);
    }
    probes
}

/// Traceless Hermitian basis of `M_d`, orthonormal in Hilbert-Schmidt.
fn hermitian_operator_basis(d: usize) -> Vec<ComplexMatrix> {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(d * d - 1);
    for i in 0..d {
        for j in i + 1..d {
            let mut x = ComplexMatrix::zeros(d, d);
            x[(i, j)] = Complex64::new(inv_sqrt2, 0.0);
            x[(j, i)] = Complex64::new(inv_sqrt2, 0.0);
            basis.push(x);
            let mut y = ComplexMatrix::zeros(d, d);
            y[(i, j)] = Complex64::new(0.0, -inv_sqrt2);
            y[(j, i)] = Complex64::new(0.0, inv_sqrt2);
            basis.push(y);
        }
    }
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut z = ComplexMatrix::zeros(d, d);
        for k in 0..l {
            z[(k, k)] = Complex64::new(norm, 0.0);
        }
        z[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0);
        basis.push(z);
    }
    basis
}

/// Likelihood-ratio statistic of each outcome against the probe family:
/// `T(i)_k = tr[rho_k M_i] / (tr[M_i]/d)`.
pub fn t_statistic(povm: &DiscretePovm) -> Result<Vec<Vec<f64>>> {
    let d = povm.dim();
    let probes = ic_probe_family(d);
    povm.effects()
        .iter()
        .map(|(_, m)| {
            let denom = m.trace().re / d as f64;
            probes
                .iter()
                .map(|rho| {
                    if denom <= 0.0 {
                        Ok(0.0)
                    } else {
                        Ok(rho.mul(m).trace().re / denom)
                    }
                })
                .collect()
        })
        .collect()
}

/// Merge outcomes with proportional effects (equal likelihood-ratio
/// statistics) after dropping zero effects. Returns the merged POVM and
/// the map old outcome -> new outcome (`None` for dropped effects).
pub fn relabeling_minimal_form(
    povm: &DiscretePovm,
    tols: &Tolerances,
) -> Result<(DiscretePovm, Vec<Option<usize>>)> {
    let (kept, drop_map) = povm.drop_zero_effects(tols);
    // group by proportionality: normalized effects within 1e-7 Frobenius
    let mut groups: Vec<(Vec<usize>, ComplexMatrix)> = Vec::new();
    for (idx, (_, m)) in kept.effects().iter().enumerate() {
        let normalized = m.scale_re(1.0 / m.trace().re);
        match groups
            .iter_mut()
            .find(|(_, rep)| rep.fro_dist(&normalized) <= 1e-7)
        {
            Some((members, _)) => members.push(idx),
            None => groups.push((vec![idx], normalized)),
        }
    }
    let mut merged_effects = Vec::with_capacity(groups.len());
    let mut kept_to_new = vec![0usize; kept.len()];
    for (new_idx, (members, _)) in groups.iter().enumerate() {
        let mut sum = ComplexMatrix::zeros(povm.dim(), povm.dim());
        let mut label_parts = Vec::new();
        for &i in members {
            sum = sum.add(kept.effect(i));
            label_parts.push(kept.effects()[i].0.clone());
            kept_to_new[i] = new_idx;
        }
        merged_effects.push((label_parts.join("+"), sum));
    }
    let merged = DiscretePovm::new(povm.dim(), merged_effects, tols)?;
    let map = drop_map
        .into_iter()
        .map(|slot| slot.map(|k| kept_to_new[k]))
        .collect();
    Ok((merged, map))
}

/// Kernel minimality check: maximize the off-diagonal mass of a
/// self-postprocessing kernel. The POVM is kernel minimal sufficient iff
/// the optimum vanishes.
pub fn kernel_minimal_check(povm: &DiscretePovm, tols: &Tolerances) -> Result<(bool, f64)> {
    let n = povm.len();
    let mut objective = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                objective[i * n + j] = 1.0;
            }
        }
    }
    let lp = postprocessing_lp(povm, povm, objective);
    match lp_solve(&lp)? {
        LpOutcome::Feasible { objective, .. } => Ok((objective <= tols.feas_tol, objective)),
        LpOutcome::Infeasible => Err(Error::InvalidInput(
            "self-postprocessing LP cannot be infeasible (identity kernel exists)".into(),
        )),
    }
}

/// Fully quantum dilation of a POVM: the channel
/// `Γ(A) = sum_i <i|A|i> M_i` from `M_n` (outcomes of the zero-effect-free
/// form) to `M_d`, plus the diagonal pinching `E(A) = sum_i <i|A|i> E_ii`.
/// Satisfies `Γ = Γ_qc . E` and `Γ` restricted to diagonals equals the QC
/// channel.
pub fn fully_quantum_dilation(
    povm: &DiscretePovm,
    tols: &Tolerances,
) -> Result<(Superoperator, Superoperator)> {
    let (kept, _) = povm.drop_zero_effects(tols);
    let n = kept.len();
    let d = kept.dim();
    let gamma = Superoperator::from_map(n, d, |unit| {
        let mut out = ComplexMatrix::zeros(d, d);
        for i in 0..n {
            let coeff = unit[(i, i)];
            if coeff.norm_sqr() > 0.0 {
                out = out.add(&kept.effect(i).scale(coeff));
            }
        }
        out
    })?;
    let pinching = Superoperator::from_map(n, n, |unit| {
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = unit[(i, i)];
        }
        out
    })?;
    Ok((gamma, pinching))
}

/// The classical experiment of a POVM: outcome distributions of the
/// probe states (default: the IC family) as diagonal states on the
/// outcome algebra.
pub fn povm_as_experiment(
    povm: &DiscretePovm,
    probes: Option<&[(String, ComplexMatrix)]>,
    tols: &Tolerances,
) -> Result<StatisticalExperiment> {
    let default_probes: Vec<(String, ComplexMatrix)>;
    let probes = match probes {
        Some(p) => p,
        None => {
            default_probes = ic_probe_family(povm.dim())
                .into_iter()
                .enumerate()
                .map(|(k, rho)| (format!("p{k}"), rho))
                .collect();
            &default_probes
        }
    };
    let n = povm.len();
    let states = probes
        .iter()
        .map(|(label, rho)| {
            let dist = povm.outcome_distribution(rho)?;
            let clamped: Vec<f64> = dist.iter().map(|&p| p.max(0.0)).collect();
            Ok((label.clone(), ComplexMatrix::diag(&clamped)))
        })
        .collect::<Result<Vec<_>>>()?;
    StatisticalExperiment::new(n, states, Some(vec![1; n]), tols)
}

/// Random POVM with `n` effects: normalized Wishart-style draws.
pub fn random_povm(dim: usize, n: usize, rng: &mut impl rand::Rng) -> DiscretePovm {
    use crate::numerics::rand::random_complex_matrix;
    let tols = Tolerances::default();
    loop {
        let gs: Vec<ComplexMatrix> = (0..n)
            .map(|_| {
                let a = random_complex_matrix(dim, dim, rng);
                a.mul(&a.adjoint())
            })
            .collect();
        let mut total = ComplexMatrix::zeros(dim, dim);
        for g in &gs {
            total = total.add(g);
        }
        let Ok(inv_sqrt) = hermitian_function(&total, &tols, |lam| {
            Complex64::new(1.0 / lam.max(1e-12).sqrt(), 0.0)
        }) else {
            continue;
        };
        let effects = gs
            .into_iter()
            .enumerate()
            .map(|(i, g)| (format!("e{i}"), inv_sqrt.mul(&g.mul(&inv_sqrt)).hermitize()))
            .collect();
        if let Ok(povm) = DiscretePovm::new(dim, effects, &tols) {
            return povm;
        }
    }
}

/// Random projection-valued measure with up to `groups` outcomes.
pub fn random_pvm(dim: usize, groups: usize, rng: &mut impl rand::Rng) -> DiscretePovm {
    use crate::numerics::rand::random_unitary;
    let tols = Tolerances::default();
    let u = random_unitary(dim, rng);
    let groups = groups.clamp(1, dim);
    // random surjective assignment of basis vectors to groups
    let mut assignment: Vec<usize> = (0..dim).map(|k| k % groups).collect();
    for k in 0..dim {
        let other = rng.gen_range(0..dim);
        assignment.swap(k, other);
    }
    let effects = (0..groups)
        .map(|g| {
            let mut p = ComplexMatrix::zeros(dim, dim);
            for (k, &ak) in assignment.iter().enumerate() {
                if ak == g {
                    p = p.add(&ComplexMatrix::outer(&u.column(k)));
                }
            }
            (format!("g{g}"), p)
        })
        .collect();
    DiscretePovm::new(dim, effects, &tols).expect("spectral projections form a PVM")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{minimal_form, SearchOptions};
    use crate::numerics::rand::random_density;
    use ::rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn split_projection_povm() -> (DiscretePovm, DiscretePovm) {
        // {P/2, P/2, I-P} and {P, I-P} with P = |0><0| + |1><1| in M_3
        let p = ComplexMatrix::diag(&[1.0, 1.0, 0.0]);
        let q = ComplexMatrix::diag(&[0.0, 0.0, 1.0]);
        let split = DiscretePovm::new(
            3,
            vec![
                ("a".into(), p.scale_re(0.5)),
                ("b".into(), p.scale_re(0.5)),
                ("c".into(), q.clone()),
            ],
            &tols(),
        )
        .unwrap();
        let merged = DiscretePovm::new(3, vec![("p".into(), p), ("q".into(), q)], &tols()).unwrap();
        (split, merged)
    }

    fn trine() -> DiscretePovm {
        let effects = (0..3)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                let v = vec![
                    Complex64::new(angle.cos(), 0.0),
                    Complex64::new(angle.sin(), 0.0),
                ];
                (format!("t{k}"), ComplexMatrix::outer(&v).scale_re(2.0 / 3.0))
            })
            .collect();
        DiscretePovm::new(2, effects, &tols()).unwrap()
    }

    fn qubit_pvm() -> DiscretePovm {
        DiscretePovm::new(
            2,
            vec![
                ("0".into(), ComplexMatrix::diag(&[1.0, 0.0])),
                ("1".into(), ComplexMatrix::diag(&[0.0, 1.0])),
            ],
            &tols(),
        )
        .unwrap()
    }

    #[test]
    fn povm_validation() {
        let t = tols();
        // not summing to identity
        let bad = DiscretePovm::new(
            2,
            vec![("a".into(), ComplexMatrix::identity(2).scale_re(0.4))],
            &t,
        );
        assert!(bad.is_err());
        // negative effect
        let neg = DiscretePovm::new(
            2,
            vec![
                ("a".into(), ComplexMatrix::diag(&[1.5, 0.5])),
                ("b".into(), ComplexMatrix::diag(&[-0.5, 0.5])),
            ],
            &t,
        );
        assert!(neg.is_err());
    }

    #[test]
    fn qc_channel_maps_indicators_to_effects() {
        let t = tols();
        let povm = trine();
        let qc = qc_channel(&povm).unwrap();
        for i in 0..3 {
            let img = qc.apply(&ComplexMatrix::matrix_unit(3, i, i)).unwrap();
            assert!(img.fro_dist(povm.effect(i)) < 1e-12);
        }
        let ones = ComplexMatrix::identity(3);
        assert!(qc
            .apply(&ones)
            .unwrap()
            .fro_dist(&ComplexMatrix::identity(2))
            < 1e-10);
        assert!(qc.is_cp(&t));

        // predual normalization: outcome distributions sum to one
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(2, 2, &mut rng);
        let dist = qc.predual_apply(&rho).unwrap();
        let total: f64 = (0..3).map(|i| dist[(i, i)].re).sum();
        assert!((total - 1.0).abs() < 1e-10);
        // trace preservation columnwise: tr[predual(E_kl)] = delta_kl
        for k in 0..2 {
            for l in 0..2 {
                let img = qc
                    .predual_apply(&ComplexMatrix::matrix_unit(2, k, l))
                    .unwrap();
                let expected = if k == l { 1.0 } else { 0.0 };
                assert!((img.trace().re - expected).abs() < 1e-10);
                assert!(img.trace().im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn postprocessing_reflexive() {
        let t = tols();
        let povm = trine();
        let kernel = postprocessing_leq(&povm, &povm, &t).unwrap().unwrap();
        assert!(kernel.postprocessing_residual(&povm, &povm).unwrap() < 1e-9);
    }

    #[test]
    fn split_and_merge_are_equivalent() {
        let t = tols();
        let (split, merged) = split_projection_povm();
        let (fwd, bwd) = povm_postproc_equiv(&split, &merged, &t)
            .unwrap()
            .expect("split and merged POVMs are postprocessing equivalent");
        assert!(fwd.postprocessing_residual(&split, &merged).unwrap() < 1e-9);
        assert!(bwd.postprocessing_residual(&merged, &split).unwrap() < 1e-9);
    }

    #[test]
    fn only_scalar_povms_reduce_to_trivial() {
        let t = tols();
        let trivial = DiscretePovm::new(
            2,
            vec![("all".into(), ComplexMatrix::identity(2))],
            &t,
        )
        .unwrap();
        // scalar multiple effects: feasible
        let scalar = DiscretePovm::new(
            2,
            vec![
                ("a".into(), ComplexMatrix::identity(2).scale_re(0.3)),
                ("b".into(), ComplexMatrix::identity(2).scale_re(0.7)),
            ],
            &t,
        )
        .unwrap();
        assert!(postprocessing_leq(&scalar, &trivial, &t).unwrap().is_some());
        // non-scalar effects: infeasible
        assert!(postprocessing_leq(&qubit_pvm(), &trivial, &t)
            .unwrap()
            .is_none());
    }

    #[test]
    fn trine_and_pvm_are_incomparable() {
        let t = tols();
        assert!(postprocessing_leq(&trine(), &qubit_pvm(), &t)
            .unwrap()
            .is_none());
        assert!(postprocessing_leq(&qubit_pvm(), &trine(), &t)
            .unwrap()
            .is_none());
        assert!(povm_postproc_equiv(&trine(), &qubit_pvm(), &t)
            .unwrap()
            .is_none());
    }

    #[test]
    fn relabeling_minimal_form_merges_proportional_effects() {
        let t = tols();
        let (split, merged) = split_projection_povm();
        let (min, map) = relabeling_minimal_form(&split, &t).unwrap();
        assert_eq!(min.len(), 2);
        assert_eq!(map, vec![Some(0), Some(0), Some(1)]);
        let (fwd, bwd) = povm_postproc_equiv(&min, &merged, &t).unwrap().unwrap();
        let _ = (fwd, bwd);
    }

    #[test]
    fn pvm_is_already_relabeling_minimal() {
        let t = tols();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pvm = random_pvm(4, 3, &mut rng);
        let (min, _) = relabeling_minimal_form(&pvm, &t).unwrap();
        assert_eq!(min.len(), pvm.len());
    }

    #[test]
    fn relabeling_minimal_form_is_idempotent() {
        let t = tols();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let povm = random_povm(3, 5, &mut rng);
            let (min1, _) = relabeling_minimal_form(&povm, &t).unwrap();
            let (min2, _) = relabeling_minimal_form(&min1, &t).unwrap();
            assert_eq!(min1.len(), min2.len());
        }
    }

    #[test]
    fn kernel_check_pvm_and_trine_are_minimal() {
        let t = tols();
        let (minimal, value) = kernel_minimal_check(&qubit_pvm(), &t).unwrap();
        assert!(minimal);
        assert!(value.abs() <= 1e-9);
        let (minimal, value) = kernel_minimal_check(&trine(), &t).unwrap();
        assert!(minimal, "trine is kernel minimal, got lp value {value}");
        assert!(value.abs() <= 1e-9);
    }

    #[test]
    fn kernel_check_detects_duplicated_effects() {
        let t = tols();
        let half = DiscretePovm::new(
            2,
            vec![
                ("a".into(), ComplexMatrix::identity(2).scale_re(0.5)),
                ("b".into(), ComplexMatrix::identity(2).scale_re(0.5)),
            ],
            &t,
        )
        .unwrap();
        let (minimal, value) = kernel_minimal_check(&half, &t).unwrap();
        assert!(!minimal);
        // both columns route fully to the other outcome
        assert!((value - 2.0).abs() < 1e-9, "full swap has off-diagonal mass 2, got {value}");
    }

    #[test]
    fn dilation_identities() {
        let t = tols();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let povm = random_povm(3, 4, &mut rng);
        let (gamma, pinching) = fully_quantum_dilation(&povm, &t).unwrap();
        // diagonal units map to effects, off-diagonal to zero
        for i in 0..4 {
            for j in 0..4 {
                let img = gamma.apply(&ComplexMatrix::matrix_unit(4, i, j)).unwrap();
                if i == j {
                    assert!(img.fro_dist(povm.effect(i)) < 1e-12);
                } else {
                    assert!(img.fro_norm() < 1e-12);
                }
            }
        }
        let qc = qc_channel(&povm).unwrap();
        // gamma = qc . pinching, and gamma restricted to diagonals is qc
        let composed = qc.compose(&pinching).unwrap();
        assert!(gamma.action_dist(&composed) < 1e-10);
        assert!(gamma.action_dist(&qc) < 1e-10);
        assert!(pinching.is_channel(&t));
    }

    #[test]
    fn order_transitivity_via_kernel_composition() {
        let t = tols();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n3 = random_povm(3, 4, &mut rng);
        // coarse-grain twice by merging outcomes
        let merge_a = StochasticKernel {
            matrix: vec![
                vec![1.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
            ],
        };
        let n2_effects = merge_a
            .apply(&n3)
            .unwrap()
            .into_iter()
            .enumerate()
            .map(|(i, m)| (format!("m{i}"), m))
            .collect();
        let n2 = DiscretePovm::new(3, n2_effects, &t).unwrap();
        let merge_b = StochasticKernel {
            matrix: vec![vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        };
        let n1_effects = merge_b
            .apply(&n2)
            .unwrap()
            .into_iter()
            .enumerate()
            .map(|(i, m)| (format!("k{i}"), m))
            .collect();
        let n1 = DiscretePovm::new(3, n1_effects, &t).unwrap();

        let k12 = postprocessing_leq(&n1, &n2, &t).unwrap().unwrap();
        let k23 = postprocessing_leq(&n2, &n3, &t).unwrap().unwrap();
        let k13 = k12.compose(&k23).unwrap();
        assert!(k13.postprocessing_residual(&n1, &n3).unwrap() <= 1e-8);
        assert!(postprocessing_leq(&n1, &n3, &t).unwrap().is_some());
    }

    #[test]
    fn kernel_minimality_matches_relabeling_minimality() {
        let t = tols();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..10 {
            let d = rng.gen_range(2..4);
            let n = rng.gen_range(2..6);
            let mut povm = random_povm(d, n, &mut rng);
            if trial % 2 == 0 {
                // duplicate an outcome to force non-minimality
                let mut effects = povm.effects().to_vec();
                let (label, m) = effects.pop().unwrap();
                effects.push((format!("{label}l"), m.scale_re(0.5)));
                effects.push((format!("{label}r"), m.scale_re(0.5)));
                povm = DiscretePovm::new(d, effects, &t).unwrap();
            }
            let (minimal, _) = kernel_minimal_check(&povm, &t).unwrap();
            let (reduced, _) = relabeling_minimal_form(&povm, &t).unwrap();
            assert_eq!(
                minimal,
                reduced.len() == povm.len(),
                "kernel and relabeling minimality disagree at trial {trial}"
            );
        }
    }

    #[test]
    fn trivial_povm_gives_single_point_experiment() {
        let t = tols();
        let trivial =
            DiscretePovm::new(2, vec![("all".into(), ComplexMatrix::identity(2))], &t).unwrap();
        let exp = povm_as_experiment(&trivial, None, &t).unwrap();
        assert_eq!(exp.dim(), 1);
    }

    #[test]
    fn experiment_of_pvm_keeps_points_distinct() {
        let t = tols();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let pvm = random_pvm(3, 3, &mut rng);
        let exp = povm_as_experiment(&pvm, None, &t).unwrap();
        let (min, _) = minimal_form(&exp, &t, 21).unwrap();
        assert_eq!(min.dim(), 3);
        let _ = SearchOptions::default();
    }

    #[test]
    fn experiment_of_duplicated_povm_merges_points() {
        let t = tols();
        let (split, _) = split_projection_povm();
        let exp = povm_as_experiment(&split, None, &t).unwrap();
        let (min, _) = minimal_form(&exp, &t, 22).unwrap();
        assert_eq!(min.dim(), 2);
    }
}
