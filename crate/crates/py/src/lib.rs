//! Python module `qcr`: states, builders, the verifier, protocols and PPT
//! analysis. Reports come back as plain dicts with the same fields as the
//! JSON documents written by the command-line tool.

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use qcr_core::analysis::{self, CutSpec, PPT_TOL};
use qcr_core::construct;
use qcr_core::fixtures;
use qcr_core::protocols::{self, BranchSelection, ProtocolOptions};
use qcr_core::random::seeded_rng;
use qcr_core::statefile::{state_from_json, state_to_json};
use qcr_core::tensor::{self, QuantumState, StateData};
use qcr_core::verify::{is_qcr_with, VerifyOptions, DEFAULT_TOL, PROTOCOL_TOL};
use qcr_core::QcrError;

fn py_err(e: QcrError) -> PyErr {
    match e {
        QcrError::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py_json<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A state on labeled registers, pure vector or density matrix.
#[pyclass(name = "State", module = "qcr", skip_from_py_object)]
#[derive(Clone)]
pub struct PyState {
    inner: QuantumState,
}

impl From<QuantumState> for PyState {
    fn from(inner: QuantumState) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyState {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        state_from_json(text).map(Self::from).map_err(py_err)
    }

    #[pyo3(signature = (note=None))]
    fn to_json(&self, note: Option<String>) -> String {
        state_to_json(&self.inner, note)
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        qcr_core::statefile::read_state(path)
            .map(Self::from)
            .map_err(py_err)
    }

    #[pyo3(signature = (path, note=None))]
    fn write(&self, path: &str, note: Option<String>) -> PyResult<()> {
        qcr_core::statefile::write_state(path, &self.inner, note).map_err(py_err)
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner
            .registers()
            .iter()
            .map(|r| r.label.clone())
            .collect()
    }

    #[getter]
    fn roles(&self) -> Vec<String> {
        self.inner
            .registers()
            .iter()
            .map(|r| r.role.to_string())
            .collect()
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn is_pure(&self) -> bool {
        self.inner.is_pure_vector()
    }

    fn purity(&self) -> f64 {
        self.inner.purity()
    }

    fn trace(&self) -> f64 {
        self.inner.trace()
    }

    /// Amplitude vector, or `None` for a density-matrix state.
    fn amplitudes(&self) -> Option<Vec<Complex64>> {
        match self.inner.data() {
            StateData::Pure(v) => Some(v.iter().copied().collect()),
            StateData::Density(_) => None,
        }
    }

    /// Density matrix as a list of rows.
    fn density_matrix(&self) -> Vec<Vec<Complex64>> {
        let m = self.inner.density_matrix();
        (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
            .collect()
    }

    fn to_density(&self) -> Self {
        self.inner.to_density().into()
    }

    fn partial_trace(&self, over: Vec<String>) -> PyResult<Self> {
        tensor::partial_trace(&self.inner, &over)
            .map(Self::from)
            .map_err(py_err)
    }

    fn purify(&self) -> PyResult<Self> {
        tensor::purify(&self.inner).map(Self::from).map_err(py_err)
    }

    /// Computational-basis outcome probabilities of `on`, indexed row-major.
    fn outcome_distribution(&self, on: Vec<String>) -> PyResult<Vec<f64>> {
        tensor::outcome_distribution(&self.inner, &on).map_err(py_err)
    }

    fn max_entry_diff(&self, other: PyRef<'_, PyState>) -> PyResult<f64> {
        self.inner.max_entry_diff(&other.inner).map_err(py_err)
    }

    fn __eq__(&self, other: PyRef<'_, PyState>) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let regs: Vec<String> = self
            .inner
            .registers()
            .iter()
            .map(|r| format!("{}:{}", r.label, r.dim))
            .collect();
        let kind = if self.inner.is_pure_vector() {
            "pure"
        } else {
            "density"
        };
        format!("State({}, {kind})", regs.join(" "))
    }
}

#[pyfunction]
fn example_state() -> PyState {
    construct::build_example_state().into()
}

#[pyfunction]
fn maximally_entangled(d: usize) -> PyResult<PyState> {
    construct::maximally_entangled(d)
        .map(PyState::from)
        .map_err(py_err)
}

/// Untwisted GHZ-type state with trivial shields.
#[pyfunction]
fn ghz_state(d: usize, players: usize) -> PyResult<PyState> {
    construct::build_ghz_qcr(d, players, &construct::ShieldSeed::trivial(players + 1))
        .map(PyState::from)
        .map_err(py_err)
}

#[pyfunction]
fn random_private_state(
    d: usize,
    dealer_shield: usize,
    player_shield: usize,
    seed: u64,
) -> PyResult<PyState> {
    let mut rng = seeded_rng(seed);
    construct::random_private_state(d, dealer_shield, player_shield, &mut rng)
        .map(PyState::from)
        .map_err(py_err)
}

#[pyfunction]
fn product_state(d: usize) -> PyResult<PyState> {
    fixtures::product_state(d)
        .map(PyState::from)
        .map_err(py_err)
}

#[pyfunction]
fn classically_correlated(d: usize) -> PyResult<PyState> {
    fixtures::classically_correlated(d)
        .map(PyState::from)
        .map_err(py_err)
}

#[pyfunction]
fn biased_pure_state() -> PyState {
    fixtures::biased_pure_state().into()
}

#[pyfunction]
#[pyo3(signature = (d, players, seed, terms=3))]
fn separable_product(d: usize, players: usize, seed: u64, terms: usize) -> PyResult<PyState> {
    let mut rng = seeded_rng(seed);
    fixtures::separable_product(d, players, terms, &mut rng)
        .map(PyState::from)
        .map_err(py_err)
}

/// Full verification report as a dict.
#[pyfunction]
#[pyo3(signature = (state, tol=DEFAULT_TOL, exhaustive=false))]
fn verify<'py>(
    py: Python<'py>,
    state: PyRef<'_, PyState>,
    tol: f64,
    exhaustive: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let report = is_qcr_with(&state.inner, &VerifyOptions { tol, exhaustive }).map_err(py_err)?;
    let out = to_py_json(py, &report)?;
    out.set_item("failing", report.failing_conditions())?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (state, tol=DEFAULT_TOL))]
fn is_qcr(state: PyRef<'_, PyState>, tol: f64) -> PyResult<bool> {
    qcr_core::verify::is_qcr(&state.inner, tol)
        .map(|r| r.verdict)
        .map_err(py_err)
}

/// Measure the listed players and correct the dealer; one dict per branch.
#[pyfunction]
#[pyo3(signature = (state, measured, outcome=None, tol=PROTOCOL_TOL, certify=true))]
fn reduce<'py>(
    py: Python<'py>,
    state: PyRef<'_, PyState>,
    measured: Vec<usize>,
    outcome: Option<Vec<usize>>,
    tol: f64,
    certify: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let opts = ProtocolOptions {
        tol,
        certify,
        ..ProtocolOptions::default()
    };
    let selection = outcome.map_or(BranchSelection::All, BranchSelection::Outcome);
    let branches = protocols::reduce(&state.inner, &measured, &selection, &opts).map_err(py_err)?;
    branches
        .into_iter()
        .map(|b| {
            let d = PyDict::new(py);
            d.set_item("beta", b.beta)?;
            d.set_item("measured", b.measured)?;
            d.set_item("measured_players", b.measured_players)?;
            d.set_item("kept_players", b.kept_players)?;
            d.set_item("probability", b.probability)?;
            d.set_item("correction_applied", b.correction_applied)?;
            d.set_item("state", Py::new(py, PyState::from(b.state))?)?;
            Ok(d)
        })
        .collect()
}

/// Merge two states through the dealer's controlled addition; returns
/// `(state, record)`.
#[pyfunction]
#[pyo3(signature = (first, second, tol=PROTOCOL_TOL, force=false))]
fn compose<'py>(
    py: Python<'py>,
    first: PyRef<'_, PyState>,
    second: PyRef<'_, PyState>,
    tol: f64,
    force: bool,
) -> PyResult<(PyState, Bound<'py, PyAny>)> {
    let opts = ProtocolOptions {
        tol,
        certify: !force,
        ..ProtocolOptions::default()
    };
    let (state, record) = protocols::compose(&first.inner, &second.inner, &opts).map_err(py_err)?;
    Ok((state.into(), to_py_json(py, &record)?))
}

#[pyfunction]
fn expand_from_private(states: Vec<PyRef<'_, PyState>>) -> PyResult<PyState> {
    let inner: Vec<QuantumState> = states.iter().map(|s| s.inner.clone()).collect();
    protocols::expand_from_private(&inner, &ProtocolOptions::default())
        .map(PyState::from)
        .map_err(py_err)
}

/// PPT report over the dealer cuts, or over explicit cuts given as lists of
/// side-two labels.
#[pyfunction]
#[pyo3(signature = (state, side_two=None, tol=PPT_TOL))]
fn ppt<'py>(
    py: Python<'py>,
    state: PyRef<'_, PyState>,
    side_two: Option<Vec<Vec<String>>>,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cuts = match side_two {
        None => analysis::dealer_cuts(&state.inner).map_err(py_err)?,
        Some(sides) => sides
            .iter()
            .map(|two| CutSpec::with_side_two(&state.inner, two))
            .collect::<Result<Vec<_>, _>>()
            .map_err(py_err)?,
    };
    let report = analysis::ppt_report(&state.inner, cuts, tol).map_err(py_err)?;
    to_py_json(py, &report)
}

#[pyfunction]
fn trace_distance(first: PyRef<'_, PyState>, second: PyRef<'_, PyState>) -> PyResult<f64> {
    analysis::trace_distance(&first.inner, &second.inner).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "qcr")]
pub fn qcr_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(example_state, m)?)?;
    m.add_function(wrap_pyfunction!(maximally_entangled, m)?)?;
    m.add_function(wrap_pyfunction!(ghz_state, m)?)?;
    m.add_function(wrap_pyfunction!(random_private_state, m)?)?;
    m.add_function(wrap_pyfunction!(product_state, m)?)?;
    m.add_function(wrap_pyfunction!(classically_correlated, m)?)?;
    m.add_function(wrap_pyfunction!(biased_pure_state, m)?)?;
    m.add_function(wrap_pyfunction!(separable_product, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(is_qcr, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(compose, m)?)?;
    m.add_function(wrap_pyfunction!(expand_from_private, m)?)?;
    m.add_function(wrap_pyfunction!(ppt, m)?)?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add("DEFAULT_TOL", DEFAULT_TOL)?;
    m.add("PROTOCOL_TOL", PROTOCOL_TOL)?;
    m.add("PPT_TOL", PPT_TOL)?;
    Ok(())
}
