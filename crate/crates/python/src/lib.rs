//! Python bindings: index maps, product-moment oracles, increment
//! generation and the Monte Carlo driver, mirroring the Rust API with
//! string names for schemes, models and functionals.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use orthosde::moments;
use orthosde::orthogonal::{self, HaarIndex, IndexSet, SignVector};
use orthosde::sde::ModelKind;
use orthosde::{mc, GeneratorSpec, SchemeKind, SdeModel, TestFunction};

fn err(e: orthosde::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_functional(name: &str) -> PyResult<TestFunction> {
    match name {
        "cos-sum" => Ok(TestFunction::CosSum),
        "square-norm" => Ok(TestFunction::SquareNorm),
        "scaled-square-norm" => Ok(TestFunction::ScaledSquareNorm),
        "fourth-norm" => Ok(TestFunction::FourthNorm),
        other => Err(PyValueError::new_err(format!(
            "unknown functional '{other}' (expected cos-sum, square-norm, \
             scaled-square-norm or fourth-norm)"
        ))),
    }
}

fn default_functional(kind: ModelKind) -> TestFunction {
    match kind {
        ModelKind::MeanRepulsion | ModelKind::NeighborDiffusion | ModelKind::Custom => {
            TestFunction::CosSum
        }
        ModelKind::Brownian => TestFunction::ScaledSquareNorm,
        ModelKind::OrnsteinUhlenbeck { .. } => TestFunction::SquareNorm,
    }
}

/// Smallest level whose sign space covers d coordinates.
#[pyfunction]
fn default_k(d: usize) -> u32 {
    orthosde::default_k(d)
}

/// Index of the coordinate toggled together with coordinate 1 between
/// consecutive gray sets.
#[pyfunction]
fn theta(j: u64) -> PyResult<u32> {
    orthosde::orthogonal::theta(j).map_err(err)
}

/// Index of the bit toggled between consecutive gray codes.
#[pyfunction]
fn eta(j: u64) -> PyResult<u32> {
    orthosde::orthogonal::eta(j).map_err(err)
}

/// Bitmask of the j-th odd-cardinality set in gray order.
#[pyfunction]
fn phi_gray(j: u64, k: u32) -> PyResult<u64> {
    orthogonal::phi_gray(j, k).map(|s| s.mask()).map_err(err)
}

/// Bitmask of the j-th set (any cardinality) in gray order.
#[pyfunction]
fn psi(j: u64, k: u32) -> PyResult<u64> {
    orthogonal::psi(j, k).map(|s| s.mask()).map_err(err)
}

/// Bitmask of the j-th odd-cardinality set ordered by popcount then value.
#[pyfunction]
fn phi_bitmask(j: u64, k: u32) -> PyResult<u64> {
    orthogonal::phi_bitmask(j, k).map(|s| s.mask()).map_err(err)
}

/// True when the gray enumeration is odd ordered at level k.
#[pyfunction]
fn is_odd_ordered_gray(k: u32) -> PyResult<bool> {
    orthogonal::is_odd_ordered(|j| orthogonal::phi_gray(j, k), k).map_err(err)
}

/// True when the popcount-then-value enumeration is odd ordered at level k.
#[pyfunction]
fn is_odd_ordered_bitmask(k: u32) -> PyResult<bool> {
    orthogonal::is_odd_ordered(|j| orthogonal::phi_bitmask(j, k), k).map_err(err)
}

/// Product of the signs selected by `mask` from the k-bit sign vector
/// `bits` (set bit = -1).
#[pyfunction]
fn tau_eval(mask: u64, bits: u64, k: u32) -> PyResult<i32> {
    let set = IndexSet::new(mask, k).map_err(err)?;
    let signs = SignVector::new(bits, k).map_err(err)?;
    orthogonal::tau_eval(&set, &signs).map_err(err)
}

/// Expectation of a product of sign-set functions: 1 if the symmetric
/// difference of the masks is empty, else 0.
#[pyfunction]
fn walsh_product_expectation(masks: Vec<u64>, k: u32) -> PyResult<f64> {
    let sets = masks
        .into_iter()
        .map(|mask| IndexSet::new(mask, k))
        .collect::<orthosde::Result<Vec<_>>>()
        .map_err(err)?;
    orthogonal::walsh_product_expectation(&sets).map_err(err)
}

/// Value of the j-th level-k step function at cell x (1-based).
#[pyfunction]
fn haar_value(k: u32, j: u64, x: u64) -> PyResult<f64> {
    let idx = HaarIndex::new(k, j).map_err(err)?;
    orthogonal::haar_value(idx, x).map_err(err)
}

/// Expectation of a product of level-k step functions over the uniform cell.
#[pyfunction]
fn haar_product_moment(k: u32, indices: Vec<u64>) -> PyResult<f64> {
    orthogonal::haar_product_moment(k, &indices).map_err(err)
}

/// Closed-form radial moment E[|dZ|^(2p)] of one increment.
#[pyfunction]
#[pyo3(signature = (scheme, d, dt, p, k=None))]
fn closed_form_m2p(scheme: &str, d: usize, dt: f64, p: u32, k: Option<u32>) -> PyResult<f64> {
    let spec = spec_for(scheme, d, k, dt)?;
    moments::closed_form_m2p(spec, p).map_err(err)
}

/// Gaussian minus scheme value of E[|X_T|^4] for driftless identity
/// diffusion from the origin.
#[pyfunction]
#[pyo3(signature = (scheme, d, t, n, k=None))]
fn fourth_moment_bias(scheme: &str, d: usize, t: f64, n: u64, k: Option<u32>) -> PyResult<f64> {
    let kind = SchemeKind::parse(scheme).map_err(err)?;
    moments::fourth_moment_bias(kind, d, k, t, n)
        .map(|formula| formula.value)
        .map_err(err)
}

fn spec_for(scheme: &str, d: usize, k: Option<u32>, dt: f64) -> PyResult<GeneratorSpec> {
    let kind = SchemeKind::parse(scheme).map_err(err)?;
    GeneratorSpec::new(kind, d, k, dt).map_err(err)
}

/// Maximum violations of the first, second and third moment conditions.
#[pyclass(name = "MomentReport")]
struct PyMomentReport {
    #[pyo3(get)]
    scheme: String,
    #[pyo3(get)]
    d: usize,
    #[pyo3(get)]
    k: u32,
    #[pyo3(get)]
    max_first: f64,
    #[pyo3(get)]
    max_second: f64,
    #[pyo3(get)]
    max_third: f64,
    #[pyo3(get)]
    tolerance: f64,
    #[pyo3(get)]
    passed: bool,
}

#[pymethods]
impl PyMomentReport {
    fn __repr__(&self) -> String {
        format!(
            "MomentReport(scheme='{}', d={}, k={}, passed={})",
            self.scheme, self.d, self.k, self.passed
        )
    }
}

/// Checks the three moment conditions by exact enumeration (analytically
/// for the gaussian scheme).
#[pyfunction]
#[pyo3(signature = (scheme, d, dt, k=None))]
fn verify_moment_conditions(
    scheme: &str,
    d: usize,
    dt: f64,
    k: Option<u32>,
) -> PyResult<PyMomentReport> {
    let spec = spec_for(scheme, d, k, dt)?;
    let report = moments::verify_moment_conditions(spec).map_err(err)?;
    Ok(PyMomentReport {
        scheme: report.scheme.name().to_string(),
        d: report.d,
        k: report.k,
        max_first: report.max_first,
        max_second: report.max_second,
        max_third: report.max_third,
        tolerance: report.tolerance,
        passed: report.pass,
    })
}

/// Exact E[f(X_T)] for driftless identity diffusion from the origin,
/// computed by enumerating every increment word over all n steps.
#[pyfunction]
#[pyo3(signature = (scheme, d, n, t=1.0, functional="fourth-norm", k=None))]
fn exact_terminal_expectation(
    scheme: &str,
    d: usize,
    n: u64,
    t: f64,
    functional: &str,
    k: Option<u32>,
) -> PyResult<f64> {
    let spec = spec_for(scheme, d, k, t / n as f64)?;
    let f = parse_functional(functional)?;
    let model = SdeModel::brownian(d).map_err(err)?;
    moments::exact_terminal_expectation(&model, f, spec, n).map_err(err)
}

/// Deterministic counter-based stream of uniform words and unit doubles.
#[pyclass(name = "UniformSource")]
struct PyUniformSource {
    inner: orthosde::UniformSource,
}

#[pymethods]
impl PyUniformSource {
    #[new]
    fn new(seed: u64, stream: u64) -> Self {
        Self {
            inner: orthosde::UniformSource::new(seed, stream),
        }
    }

    fn next_word(&mut self) -> u64 {
        self.inner.next_word()
    }

    fn next_unit(&mut self) -> f64 {
        self.inner.next_unit()
    }

    fn draw_count(&self) -> u64 {
        self.inner.draw_count()
    }
}

/// Samples one time-step increment dZ of the chosen scheme.
#[pyclass(name = "IncrementGenerator")]
struct PyIncrementGenerator {
    inner: orthosde::IncrementGenerator,
}

#[pymethods]
impl PyIncrementGenerator {
    #[new]
    #[pyo3(signature = (scheme, d, dt, k=None))]
    fn new(scheme: &str, d: usize, dt: f64, k: Option<u32>) -> PyResult<Self> {
        let spec = spec_for(scheme, d, k, dt)?;
        Ok(Self {
            inner: orthosde::IncrementGenerator::new(spec).map_err(err)?,
        })
    }

    fn sample(&self, source: &mut PyUniformSource) -> PyResult<Vec<f64>> {
        self.inner
            .sample(&mut source.inner)
            .map(|increment| increment.into_vec())
            .map_err(err)
    }

    /// Words consumed per step when that count is fixed, else None.
    fn fixed_words_per_step(&self) -> Option<u64> {
        match self.inner.draws_per_step() {
            orthosde::DrawCount::Fixed(count) => Some(count),
            orthosde::DrawCount::Variable { .. } => None,
        }
    }
}

/// Mean, variance, confidence interval and draw accounting of one run.
#[pyclass(name = "McResult")]
struct PyMcResult {
    #[pyo3(get)]
    mean: f64,
    #[pyo3(get)]
    variance: f64,
    #[pyo3(get)]
    ci_low: f64,
    #[pyo3(get)]
    ci_high: f64,
    #[pyo3(get)]
    trials: u64,
    #[pyo3(get)]
    uniform_draws: u64,
    #[pyo3(get)]
    wall_seconds: f64,
}

#[pymethods]
impl PyMcResult {
    fn __repr__(&self) -> String {
        format!(
            "McResult(mean={}, ci=({}, {}), trials={})",
            self.mean, self.ci_low, self.ci_high, self.trials
        )
    }
}

/// Monte Carlo estimate of E[f(X_T)] over m independent trials.
#[pyfunction]
#[pyo3(signature = (scheme, model, d, n, m, t=1.0, functional=None, k=None, seed=42,
                    threads=1, ci_multiplier=1.96, rate=1.0))]
#[allow(clippy::too_many_arguments)]
fn run_mc(
    scheme: &str,
    model: &str,
    d: usize,
    n: u64,
    m: u64,
    t: f64,
    functional: Option<&str>,
    k: Option<u32>,
    seed: u64,
    threads: usize,
    ci_multiplier: f64,
    rate: f64,
) -> PyResult<PyMcResult> {
    let spec = spec_for(scheme, d, k, t / n as f64)?;
    let model = SdeModel::parse(model, d, rate).map_err(err)?;
    let f = match functional {
        Some(name) => parse_functional(name)?,
        None => default_functional(model.kind()),
    };
    let cfg = mc::McConfig::new(m, seed)
        .with_threads(threads)
        .with_ci_multiplier(ci_multiplier);
    let result = mc::run_mc(&model, f, spec, n, t, &cfg).map_err(err)?;
    Ok(PyMcResult {
        mean: result.mean,
        variance: result.variance,
        ci_low: result.ci_low,
        ci_high: result.ci_high,
        trials: result.trials,
        uniform_draws: result.uniform_draws,
        wall_seconds: result.wall_seconds,
    })
}

/// Closed-form E[f(X_T)] where one exists (brownian and ou models).
#[pyfunction]
#[pyo3(signature = (model, d, functional, t=1.0, rate=1.0))]
fn reference_expectation(
    model: &str,
    d: usize,
    functional: &str,
    t: f64,
    rate: f64,
) -> PyResult<Option<f64>> {
    let model = SdeModel::parse(model, d, rate).map_err(err)?;
    let f = parse_functional(functional)?;
    Ok(model.reference_expectation(f, t))
}

#[pymodule]
fn orthosde_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(default_k, m)?)?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(phi_gray, m)?)?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(phi_bitmask, m)?)?;
    m.add_function(wrap_pyfunction!(is_odd_ordered_gray, m)?)?;
    m.add_function(wrap_pyfunction!(is_odd_ordered_bitmask, m)?)?;
    m.add_function(wrap_pyfunction!(tau_eval, m)?)?;
    m.add_function(wrap_pyfunction!(walsh_product_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(haar_value, m)?)?;
    m.add_function(wrap_pyfunction!(haar_product_moment, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_m2p, m)?)?;
    m.add_function(wrap_pyfunction!(fourth_moment_bias, m)?)?;
    m.add_function(wrap_pyfunction!(verify_moment_conditions, m)?)?;
    m.add_function(wrap_pyfunction!(exact_terminal_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(run_mc, m)?)?;
    m.add_function(wrap_pyfunction!(reference_expectation, m)?)?;
    m.add_class::<PyUniformSource>()?;
    m.add_class::<PyIncrementGenerator>()?;
    m.add_class::<PyMomentReport>()?;
    m.add_class::<PyMcResult>()?;
    Ok(())
}
