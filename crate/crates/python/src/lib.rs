//! Python bindings. Matrices cross the boundary as lists of rows, vectors
//! as flat lists; complex entries become Python `complex`.

use itsplit_core::harness::{self, ErrorRow, ExperimentSpec};
use itsplit_core::itersplit::{self, Scheme, SplitConfig, SplitPair};
use itsplit_core::matkernel::{self, ComplexMatrix, RealMatrix, RealVector};
use itsplit_core::Error;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

create_exception!(itsplit, NumericalError, PyArithmeticError);

fn to_py(e: Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn real_matrix(rows: Vec<Vec<f64>>) -> PyResult<RealMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("ragged matrix rows"));
    }
    Ok(RealMatrix::from_row_iterator(n, m, rows.into_iter().flatten()))
}

fn rows<T: Copy + PartialEq + std::fmt::Debug + 'static>(m: &nalgebra::DMatrix<T>) -> Vec<Vec<T>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// `exp(m t)` for a real square matrix.
#[pyfunction]
#[pyo3(signature = (m, t = 1.0))]
fn mat_exp(m: Vec<Vec<f64>>, t: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(&matkernel::mat_exp(&real_matrix(m)?, t).map_err(to_py)?))
}

/// Principal `p`-th root of a real square matrix.
#[pyfunction]
fn mat_root(m: Vec<Vec<f64>>, p: u32) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(rows(&matkernel::mat_root(&real_matrix(m)?, p).map_err(to_py)?))
}

/// Real `2n x 2n` form `[[Re, -Im], [Im, Re]]` of a complex matrix.
#[pyfunction]
fn embed(m: Vec<Vec<Complex64>>) -> PyResult<Vec<Vec<f64>>> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let c = ComplexMatrix::from_row_iterator(n, n, m.into_iter().flatten());
    Ok(rows(matkernel::embed(&c).as_real()))
}

#[pyfunction]
fn commutator_norm(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    matkernel::commutator_norm(&real_matrix(a)?, &real_matrix(b)?).map_err(to_py)
}

/// The two benchmark matrices `(A, B)`.
#[pyfunction]
#[pyo3(signature = (dim = 10))]
fn gen_matrices(dim: usize) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let a = harness::build_matrix_a_dim(dim).map_err(to_py)?;
    let b = harness::build_matrix_b_dim(dim).map_err(to_py)?;
    Ok((rows(&a), rows(&b)))
}

/// Advance `c' = (first + second) c` by `steps` splitting steps of size `tau`.
#[pyfunction]
#[pyo3(signature = (first, second, c0, tau, steps, scheme = "twoside", sweeps = 2))]
fn split_solve(
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    c0: Vec<f64>,
    tau: f64,
    steps: usize,
    scheme: &str,
    sweeps: usize,
) -> PyResult<Vec<f64>> {
    let pair = SplitPair::new(real_matrix(first)?, real_matrix(second)?).map_err(to_py)?;
    let cfg = SplitConfig::new(parse::<Scheme>(scheme)?, tau, sweeps);
    let mut c = RealVector::from_vec(c0);
    for _ in 0..steps {
        c = itersplit::step(&pair, &cfg, &c).map_err(to_py)?.0;
    }
    Ok(c.iter().copied().collect())
}

/// One row of a benchmark report.
#[pyclass(frozen, get_all, module = "itsplit")]
struct Row {
    experiment: String,
    scheme: String,
    root_set: String,
    tau: f64,
    sweeps: usize,
    error_l2: f64,
    error_inf: f64,
    wall_ms: f64,
    commutator_norm: f64,
    oracle: String,
}

impl From<&ErrorRow> for Row {
    fn from(r: &ErrorRow) -> Self {
        Row {
            experiment: r.experiment.to_string(),
            scheme: r.scheme.to_string(),
            root_set: r.root_set.to_string(),
            tau: r.tau,
            sweeps: r.sweeps,
            error_l2: r.error_l2,
            error_inf: r.error_inf,
            wall_ms: r.wall_ms,
            commutator_norm: r.commutator_norm,
            oracle: r.oracle.to_string(),
        }
    }
}

#[pymethods]
impl Row {
    fn __repr__(&self) -> String {
        format!(
            "Row({} {} tau={} sweeps={} error_inf={:e})",
            self.experiment, self.scheme, self.tau, self.sweeps, self.error_inf
        )
    }
}

/// A prepared benchmark: factored system, splitting pairs and reference
/// solution at the horizon.
#[pyclass(frozen, module = "itsplit")]
struct Experiment {
    inner: harness::Experiment,
}

#[pymethods]
impl Experiment {
    #[new]
    #[pyo3(signature = (
        example = "integro", *, dim = None, horizon = None, taus = None, sweeps = None, schemes = None,
        root_set = None, operator_form = None, split = None, substeps = None, epsilon = None, initial = None
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        example: &str,
        dim: Option<usize>,
        horizon: Option<f64>,
        taus: Option<Vec<f64>>,
        sweeps: Option<Vec<usize>>,
        schemes: Option<Vec<String>>,
        root_set: Option<&str>,
        operator_form: Option<&str>,
        split: Option<&str>,
        substeps: Option<usize>,
        epsilon: Option<f64>,
        initial: Option<&str>,
    ) -> PyResult<Self> {
        let mut spec = ExperimentSpec::new(parse(example)?);
        spec.dim = dim.unwrap_or(spec.dim);
        spec.horizon = horizon.unwrap_or(spec.horizon);
        spec.taus = taus.unwrap_or(spec.taus);
        spec.sweeps = sweeps.unwrap_or(spec.sweeps);
        if let Some(s) = schemes {
            spec.schemes = s.iter().map(|x| parse(x)).collect::<PyResult<_>>()?;
        }
        if let Some(s) = root_set {
            spec.root_set = parse(s)?;
        }
        if let Some(s) = operator_form {
            spec.operator_form = parse(s)?;
        }
        if let Some(s) = split {
            spec.decomposition = parse(s)?;
        }
        spec.substeps = substeps.unwrap_or(spec.substeps);
        spec.epsilon = epsilon.unwrap_or(spec.epsilon);
        if let Some(s) = initial {
            spec.initial = parse(s)?;
        }
        Ok(Experiment { inner: harness::prepare(&spec).map_err(to_py)? })
    }

    #[getter]
    fn oracle(&self) -> String {
        self.inner.oracle.to_string()
    }

    #[getter]
    fn commutator_norm(&self) -> f64 {
        self.inner.commutator
    }

    #[getter]
    fn reference(&self) -> Vec<Complex64> {
        self.inner.reference.iter().copied().collect()
    }

    #[getter]
    fn roots(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.inner.system.roots.iter().map(rows).collect()
    }

    /// Final state and `(error_l2, error_inf)` for one grid cell.
    fn solve(&self, py: Python<'_>, scheme: &str, tau: f64, sweeps: usize) -> PyResult<(Vec<Complex64>, f64, f64)> {
        let cfg = self.inner.spec.split_config(parse(scheme)?, tau, sweeps);
        let (state, _) = py.detach(|| harness::run_cell(&self.inner, &cfg)).map_err(to_py)?;
        let (l2, inf) = harness::error_norms(&state, &self.inner.reference);
        Ok((state.iter().copied().collect(), l2, inf))
    }

    /// Runs the full scheme x step x sweep grid.
    fn run(&self, py: Python<'_>) -> PyResult<Vec<Row>> {
        let report = py.detach(|| harness::run_prepared(&self.inner)).map_err(to_py)?;
        Ok(report.rows.iter().map(Row::from).collect())
    }

    /// The grid report as CSV text.
    fn to_csv(&self, py: Python<'_>) -> PyResult<String> {
        Ok(py.detach(|| harness::run_prepared(&self.inner)).map_err(to_py)?.to_csv())
    }
}

#[pymodule]
fn itsplit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(mat_exp, m)?)?;
    m.add_function(wrap_pyfunction!(mat_root, m)?)?;
    m.add_function(wrap_pyfunction!(embed, m)?)?;
    m.add_function(wrap_pyfunction!(commutator_norm, m)?)?;
    m.add_function(wrap_pyfunction!(gen_matrices, m)?)?;
    m.add_function(wrap_pyfunction!(split_solve, m)?)?;
    m.add_class::<Experiment>()?;
    m.add_class::<Row>()?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add("CSV_HEADER", harness::CSV_HEADER)?;
    m.add("SCHEMES", Scheme::ALL.iter().map(|s| s.to_string()).collect::<Vec<_>>())?;
    Ok(())
}
