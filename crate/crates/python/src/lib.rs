//! Python bindings: MI evaluators, dispersion-set constructions, Monte Carlo
//! runs, property suites and plotting.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use stfeedback::config::parse_sim_config;
use stfeedback::dispersion::{self, check_goc, GOC_TOL};
use stfeedback::infotheory::{Constellation, MiEvaluator};
use stfeedback::matkit::Rng;
use stfeedback::plot::{render_svg as render, PlotOptions};
use stfeedback::report::{parse_csv, to_csv};
use stfeedback::{codebook, simengine, verify as suites, Error};

create_exception!(pystfeedback, InfeasibleError, PyValueError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Infeasible(_) => InfeasibleError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn evaluator(constellation: &str) -> PyResult<MiEvaluator> {
    MiEvaluator::new(Constellation::parse(constellation).map_err(to_py)?).map_err(to_py)
}

/// Scalar mutual information `I(a)` in nats.
#[pyfunction]
#[pyo3(signature = (a, constellation = "gaussian"))]
fn mi(a: f64, constellation: &str) -> PyResult<f64> {
    evaluator(constellation)?.mi(a).map_err(to_py)
}

/// Minimum mean-square error of the scalar channel at SNR `a`.
#[pyfunction]
#[pyo3(signature = (a, constellation = "gaussian"))]
fn mmse(a: f64, constellation: &str) -> PyResult<f64> {
    evaluator(constellation)?.mmse(a).map_err(to_py)
}

/// Rows of the `K x Nc` matrix whose Gram matrix is `I + iX`.
#[pyfunction]
fn build_v_matrix(k: usize, nc: usize) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(dispersion::build_v_matrix(k, nc)
        .map_err(to_py)?
        .rows()
        .to_vec())
}

#[pyclass(name = "DispersionSet", frozen)]
struct PyDispersionSet(dispersion::DispersionSet);

#[pymethods]
impl PyDispersionSet {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        dispersion::DispersionSet::from_text(text)
            .map(Self)
            .map_err(to_py)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[getter]
    fn nt(&self) -> usize {
        self.0.nt()
    }

    #[getter]
    fn nc(&self) -> usize {
        self.0.nc()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    fn total_power(&self) -> f64 {
        self.0.total_power()
    }

    fn goc_residual(&self) -> f64 {
        check_goc(&self.0, GOC_TOL).worst
    }

    /// Dispersion matrices as nested row lists.
    fn matrices(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.0
            .mats()
            .iter()
            .map(|a| {
                (0..a.rows())
                    .map(|i| (0..a.cols()).map(|j| a[(i, j)]).collect())
                    .collect()
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.0.k()
    }

    fn __repr__(&self) -> String {
        format!(
            "DispersionSet(nt={}, nc={}, k={})",
            self.0.nt(),
            self.0.nc(),
            self.0.k()
        )
    }
}

/// Beamforming set along the unit vector `u`.
#[pyfunction]
fn rank_one_set(u: Vec<Complex64>, k: usize, nc: usize) -> PyResult<PyDispersionSet> {
    dispersion::rank_one_set(&u, k, nc)
        .map(PyDispersionSet)
        .map_err(to_py)
}

/// Statistical-CSI set for the diagonal `lam` (trace `Nt*Nc/K`).
#[pyfunction]
#[pyo3(signature = (lam, k, nc, seed = 0))]
fn statistical_set(lam: Vec<f64>, k: usize, nc: usize, seed: u64) -> PyResult<PyDispersionSet> {
    dispersion::statistical_set(&lam, k, nc, &mut Rng::new(seed, 0))
        .map(PyDispersionSet)
        .map_err(to_py)
}

/// Both sides of the max/expectation bound, by full enumeration.
#[pyfunction]
fn max_expectation_sides(a: Vec<Vec<f64>>, y: Vec<Vec<f64>>) -> PyResult<(f64, f64)> {
    codebook::max_expectation_sides(&a, &y).map_err(to_py)
}

type Row = (f64, String, f64, f64, usize);

fn configured(config: &str, seed: Option<u64>) -> PyResult<simengine::SimConfig> {
    let mut cfg = parse_sim_config(config, 0).map_err(to_py)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Runs an experiment given as config text; returns
/// `(snr_db, scheme, mi_bits_per_use, stderr, trials)` tuples in CSV order.
#[pyfunction]
#[pyo3(signature = (config, seed = None))]
fn simulate(py: Python<'_>, config: &str, seed: Option<u64>) -> PyResult<Vec<Row>> {
    let cfg = configured(config, seed)?;
    let points = py.detach(|| simengine::run(&cfg)).map_err(to_py)?;
    let rows = parse_csv(&to_csv(&points)).map_err(to_py)?;
    Ok(rows
        .into_iter()
        .map(|p| (p.snr_db, p.scheme, p.mi_bits_per_use, p.stderr, p.trials))
        .collect())
}

/// Same run as [`simulate`], rendered as CSV text.
#[pyfunction]
#[pyo3(signature = (config, seed = None))]
fn simulate_csv(py: Python<'_>, config: &str, seed: Option<u64>) -> PyResult<String> {
    let cfg = configured(config, seed)?;
    let points = py.detach(|| simengine::run(&cfg)).map_err(to_py)?;
    Ok(to_csv(&points))
}

/// Property suites: `(suite, property, passed, measure)` per property.
#[pyfunction]
#[pyo3(signature = (suite = "all", seed = suites::DEFAULT_SEED))]
fn verify(py: Python<'_>, suite: &str, seed: u64) -> PyResult<Vec<(String, String, bool, f64)>> {
    let results = py.detach(|| suites::run(suite, seed)).map_err(to_py)?;
    Ok(results
        .into_iter()
        .map(|r| (r.suite.to_string(), r.property, r.pass, r.measure))
        .collect())
}

/// SVG chart from CSV text in the simulate schema.
#[pyfunction]
#[pyo3(signature = (csv, xmin = None, xmax = None, title = None))]
fn render_svg(
    csv: &str,
    xmin: Option<f64>,
    xmax: Option<f64>,
    title: Option<String>,
) -> PyResult<String> {
    let points = parse_csv(csv).map_err(to_py)?;
    render(&points, &PlotOptions { xmin, xmax, title }).map_err(to_py)
}

#[pymodule]
pub fn pystfeedback(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add("CSV_HEADER", stfeedback::report::CSV_HEADER)?;
    m.add("SUITES", suites::SUITES.to_vec())?;
    m.add_class::<PyDispersionSet>()?;
    m.add_function(wrap_pyfunction!(mi, m)?)?;
    m.add_function(wrap_pyfunction!(mmse, m)?)?;
    m.add_function(wrap_pyfunction!(build_v_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(rank_one_set, m)?)?;
    m.add_function(wrap_pyfunction!(statistical_set, m)?)?;
    m.add_function(wrap_pyfunction!(max_expectation_sides, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_csv, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(render_svg, m)?)?;
    Ok(())
}
