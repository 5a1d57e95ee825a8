//! Python bindings: experiments, POVMs, and their minimal-form and
//! postprocessing operations. Matrices cross the boundary as nested
//! lists of Python complex numbers, row-major.

use minexp::experiment::{
    check_coarse_graining, conditional_expectation_for, experiments_isomorphic,
    find_fixing_channel, ki_decompose, minimal_form, SearchOptions, StatisticalExperiment,
};
use minexp::numerics::{ComplexMatrix, Complex64, Tolerances};
use minexp::povm::{
    fully_quantum_dilation, kernel_minimal_check, postprocessing_leq, povm_as_experiment,
    relabeling_minimal_form, t_statistic, DiscretePovm,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

type PyMatrix = Vec<Vec<Complex64>>;

fn to_py_err(e: minexp::Error) -> PyErr {
    match e {
        minexp::Error::InvalidInput(_)
        | minexp::Error::DimensionMismatch(_)
        | minexp::Error::LabelMismatch => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn matrix_from_py(rows: &PyMatrix) -> PyResult<ComplexMatrix> {
    ComplexMatrix::from_rows(rows.clone()).map_err(to_py_err)
}

fn matrix_to_py(m: &ComplexMatrix) -> PyMatrix {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn tols() -> Tolerances {
    Tolerances::default()
}

fn search_opts(starts: usize, max_iter: usize, seed: u64) -> SearchOptions {
    SearchOptions {
        starts,
        max_iter,
        seed,
    }
}

/// A labeled family of density matrices.
#[pyclass(name = "Experiment")]
#[derive(Clone)]
struct PyExperiment {
    inner: StatisticalExperiment,
}

#[pymethods]
impl PyExperiment {
    #[new]
    #[pyo3(signature = (dim, states, block_dims=None))]
    fn new(dim: usize, states: Vec<(String, PyMatrix)>, block_dims: Option<Vec<usize>>) -> PyResult<Self> {
        let states = states
            .into_iter()
            .map(|(label, rows)| Ok((label, matrix_from_py(&rows)?)))
            .collect::<PyResult<Vec<_>>>()?;
        let inner =
            StatisticalExperiment::new(dim, states, block_dims, &tols()).map_err(to_py_err)?;
        Ok(PyExperiment { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().iter().map(|s| s.to_string()).collect()
    }

    #[getter]
    fn block_dims(&self) -> Option<Vec<usize>> {
        self.inner.block_dims().map(|b| b.to_vec())
    }

    fn states(&self) -> Vec<(String, PyMatrix)> {
        self.inner
            .states()
            .iter()
            .map(|(l, m)| (l.clone(), matrix_to_py(m)))
            .collect()
    }

    /// Koashi-Imoto block data: list of (d, m, omega, weights, block states).
    #[pyo3(signature = (seed=0))]
    fn ki_blocks(
        &self,
        seed: u64,
    ) -> PyResult<Vec<(usize, usize, PyMatrix, Vec<f64>, Vec<PyMatrix>)>> {
        let ki = ki_decompose(&self.inner, &tols(), seed).map_err(to_py_err)?;
        Ok(ki
            .blocks
            .iter()
            .map(|kb| {
                (
                    kb.block.d,
                    kb.block.m,
                    matrix_to_py(&kb.omega),
                    kb.weights.clone(),
                    kb.states.iter().map(matrix_to_py).collect(),
                )
            })
            .collect())
    }

    /// The minimal sufficient form on the block algebra `⊕ M_{d_α}`.
    #[pyo3(signature = (seed=0))]
    fn minimal_form(&self, seed: u64) -> PyResult<PyExperiment> {
        let (min, _) = minimal_form(&self.inner, &tols(), seed).map_err(to_py_err)?;
        Ok(PyExperiment { inner: min })
    }

    /// Action matrix of the state-preserving conditional expectation.
    #[pyo3(signature = (seed=0))]
    fn conditional_expectation(&self, seed: u64) -> PyResult<PyMatrix> {
        let t = tols();
        let ki = ki_decompose(&self.inner, &t, seed).map_err(to_py_err)?;
        let e = conditional_expectation_for(&self.inner, &ki, &t).map_err(to_py_err)?;
        Ok(matrix_to_py(e.action()))
    }

    /// Decide isomorphism with another minimal form; returns the
    /// conjugation residual of the witness, or None.
    #[pyo3(signature = (other, starts=20, max_iter=5000, seed=0))]
    fn isomorphism_residual(
        &self,
        other: &PyExperiment,
        starts: usize,
        max_iter: usize,
        seed: u64,
    ) -> PyResult<Option<f64>> {
        let witness = experiments_isomorphic(
            &self.inner,
            &other.inner,
            &search_opts(starts, max_iter, seed),
            &tols(),
        )
        .map_err(to_py_err)?;
        Ok(witness.map(|w| w.residual))
    }

    /// Search for a non-identity channel fixing every state; returns its
    /// action matrix when found.
    #[pyo3(signature = (starts=20, max_iter=5000, seed=0))]
    fn fixing_channel(
        &self,
        starts: usize,
        max_iter: usize,
        seed: u64,
    ) -> PyResult<Option<PyMatrix>> {
        let witness = find_fixing_channel(
            &self.inner,
            &search_opts(starts, max_iter, seed),
            &tols(),
        )
        .map_err(to_py_err)?;
        Ok(witness.map(|w| matrix_to_py(w.action())))
    }

    /// Search for a channel presenting `self` as a coarse-graining of
    /// `other`; returns its action matrix when found.
    #[pyo3(signature = (other, starts=20, max_iter=5000, seed=0))]
    fn coarse_graining_from(
        &self,
        other: &PyExperiment,
        starts: usize,
        max_iter: usize,
        seed: u64,
    ) -> PyResult<Option<PyMatrix>> {
        let witness = check_coarse_graining(
            &self.inner,
            &other.inner,
            &search_opts(starts, max_iter, seed),
            &tols(),
        )
        .map_err(to_py_err)?;
        Ok(witness.map(|w| matrix_to_py(w.action())))
    }

    fn with_ancilla(&self, omega: PyMatrix) -> PyResult<PyExperiment> {
        let omega = matrix_from_py(&omega)?;
        let inner = self
            .inner
            .embed_with_ancilla(&omega, &tols())
            .map_err(to_py_err)?;
        Ok(PyExperiment { inner })
    }

    fn with_padding(&self, pad_dim: usize) -> PyResult<PyExperiment> {
        let inner = self
            .inner
            .embed_direct_sum(pad_dim, &tols())
            .map_err(to_py_err)?;
        Ok(PyExperiment { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Experiment(dim={}, states={}, block_dims={:?})",
            self.inner.dim(),
            self.inner.len(),
            self.inner.block_dims()
        )
    }
}

/// A discrete POVM: labeled PSD effects summing to the identity.
#[pyclass(name = "Povm")]
#[derive(Clone)]
struct PyPovm {
    inner: DiscretePovm,
}

#[pymethods]
impl PyPovm {
    #[new]
    fn new(dim: usize, effects: Vec<(String, PyMatrix)>) -> PyResult<Self> {
        let effects = effects
            .into_iter()
            .map(|(label, rows)| Ok((label, matrix_from_py(&rows)?)))
            .collect::<PyResult<Vec<_>>>()?;
        let inner = DiscretePovm::new(dim, effects, &tols()).map_err(to_py_err)?;
        Ok(PyPovm { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().iter().map(|s| s.to_string()).collect()
    }

    fn effects(&self) -> Vec<(String, PyMatrix)> {
        self.inner
            .effects()
            .iter()
            .map(|(l, m)| (l.clone(), matrix_to_py(m)))
            .collect()
    }

    fn outcome_distribution(&self, rho: PyMatrix) -> PyResult<Vec<f64>> {
        let rho = matrix_from_py(&rho)?;
        self.inner.outcome_distribution(&rho).map_err(to_py_err)
    }

    /// Merge proportional effects; returns the minimal POVM and the map
    /// old outcome -> new outcome (None for dropped zero effects).
    fn minimize(&self) -> PyResult<(PyPovm, Vec<Option<usize>>)> {
        let (minimal, map) = relabeling_minimal_form(&self.inner, &tols()).map_err(to_py_err)?;
        Ok((PyPovm { inner: minimal }, map))
    }

    /// Kernel minimality: `(is_minimal, lp_value)`.
    fn kernel_minimal(&self) -> PyResult<(bool, f64)> {
        kernel_minimal_check(&self.inner, &tols()).map_err(to_py_err)
    }

    /// Postprocessing kernel with `self = kernel * other`, or None.
    fn postprocessing_from(&self, other: &PyPovm) -> PyResult<Option<Vec<Vec<f64>>>> {
        let kernel = postprocessing_leq(&self.inner, &other.inner, &tols()).map_err(to_py_err)?;
        Ok(kernel.map(|k| k.matrix))
    }

    fn equivalent_to(&self, other: &PyPovm) -> PyResult<bool> {
        Ok(
            minexp::povm::povm_postproc_equiv(&self.inner, &other.inner, &tols())
                .map_err(to_py_err)?
                .is_some(),
        )
    }

    /// Likelihood-ratio statistics of every outcome against the fixed
    /// informationally complete probe family.
    fn t_statistic(&self) -> PyResult<Vec<Vec<f64>>> {
        t_statistic(&self.inner).map_err(to_py_err)
    }

    /// Fully quantum dilation: action matrices of `Γ` and the pinching.
    fn dilation(&self) -> PyResult<(PyMatrix, PyMatrix)> {
        let (gamma, pinching) = fully_quantum_dilation(&self.inner, &tols()).map_err(to_py_err)?;
        Ok((matrix_to_py(gamma.action()), matrix_to_py(pinching.action())))
    }

    /// The classical experiment of outcome distributions over the IC
    /// probe family.
    fn as_experiment(&self) -> PyResult<PyExperiment> {
        let inner = povm_as_experiment(&self.inner, None, &tols()).map_err(to_py_err)?;
        Ok(PyExperiment { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Povm(dim={}, outcomes={})",
            self.inner.dim(),
            self.inner.len()
        )
    }
}

#[pymodule]
fn minexp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExperiment>()?;
    m.add_class::<PyPovm>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
