//! Python bindings. Bit strings cross the boundary as `'0'/'1'` text,
//! probabilities as `dict[str, float]`, matrices as nested lists of
//! `complex`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use algoinfo_core::bits::BitString;
use algoinfo_core::experiments::{self, ConservationConfig, NoInfoConfig};
use algoinfo_core::info::{self, Channel, FiniteProbability};
use algoinfo_core::machine::{self, ComplexityTable, MachineBudget};
use algoinfo_core::quantum::{self, CMatrix, CVector, Povm, PureState};

create_exception!(
    algoinfo,
    BudgetError,
    PyException,
    "A complexity is infinite at the given budget."
);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn bits(s: &str) -> PyResult<BitString> {
    BitString::from_bits(s).map_err(value_err)
}

/// Resource bound: program bits `L`, steps `T`, output bits `M`.
#[pyclass(name = "Budget", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyBudget(MachineBudget);

#[pymethods]
impl PyBudget {
    #[new]
    #[pyo3(signature = (program_bits=18, steps=10_000, output_bits=64))]
    fn new(program_bits: u32, steps: u64, output_bits: u32) -> PyResult<Self> {
        MachineBudget::new(program_bits, steps, output_bits)
            .map(PyBudget)
            .map_err(value_err)
    }

    /// Parses `"L=..,T=..,M=.."`; omitted keys keep their defaults.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        text.parse()
            .map(PyBudget)
            .map_err(|e: machine::MachineError| value_err(e))
    }

    #[getter]
    fn program_bits(&self) -> u32 {
        self.0.max_program_bits
    }

    #[getter]
    fn steps(&self) -> u64 {
        self.0.max_steps
    }

    #[getter]
    fn output_bits(&self) -> u32 {
        self.0.max_output_bits
    }

    fn __repr__(&self) -> String {
        format!("Budget({})", self.0)
    }
}

fn budget_or_default(b: Option<PyBudget>) -> MachineBudget {
    b.map_or_else(MachineBudget::default, |b| b.0)
}

/// `(program, output, steps, aux_consumed)` if the program halts, else None.
#[pyfunction]
#[pyo3(signature = (program, aux="", budget=None))]
fn run(
    program: &str,
    aux: &str,
    budget: Option<PyBudget>,
) -> PyResult<Option<(String, String, u64, usize)>> {
    let r = machine::run(&bits(program)?, &bits(aux)?, &budget_or_default(budget)).ok();
    Ok(r.map(|r| {
        (
            r.program.to_string(),
            r.output.to_string(),
            r.steps,
            r.aux_consumed,
        )
    }))
}

/// Every halting program within the budget, in lexicographic order.
#[pyfunction]
#[pyo3(signature = (aux="", budget=None))]
fn enumerate(
    py: Python<'_>,
    aux: &str,
    budget: Option<PyBudget>,
) -> PyResult<Vec<(String, String, u64, usize)>> {
    let aux = bits(aux)?;
    let budget = budget_or_default(budget);
    let records = py
        .detach(|| machine::enumerate(&aux, &budget))
        .map_err(|e| BudgetError::new_err(e.to_string()))?;
    Ok(records
        .into_iter()
        .map(|r| {
            (
                r.program.to_string(),
                r.output.to_string(),
                r.steps,
                r.aux_consumed,
            )
        })
        .collect())
}

/// Prefix complexity in bits, or None when infinite at the budget.
#[pyfunction]
#[pyo3(signature = (x, aux="", budget=None))]
fn complexity(x: &str, aux: &str, budget: Option<PyBudget>) -> PyResult<Option<u32>> {
    Ok(machine::complexity(&bits(x)?, &bits(aux)?, &budget_or_default(budget)).finite())
}

/// Algorithmic probability as an exact `(numerator, exponent)` pair
/// meaning `numerator / 2**exponent`.
#[pyfunction]
#[pyo3(signature = (x, aux="", budget=None))]
fn algorithmic_probability(x: &str, aux: &str, budget: Option<PyBudget>) -> PyResult<(u128, u32)> {
    let m = machine::algorithmic_probability(&bits(x)?, &bits(aux)?, &budget_or_default(budget));
    Ok((m.numer(), m.exp()))
}

#[pyfunction]
#[pyo3(signature = (aux="", budget=None))]
fn kraft_sum(aux: &str, budget: Option<PyBudget>) -> PyResult<(u128, u32)> {
    let k = machine::kraft_sum(&bits(aux)?, &budget_or_default(budget))
        .map_err(|e| BudgetError::new_err(e.to_string()))?;
    Ok((k.numer(), k.exp()))
}

/// `K(x) + K(y) - K(<x>y)`; raises BudgetError when undefined.
#[pyfunction]
#[pyo3(signature = (x, y, aux="", budget=None))]
fn string_info(x: &str, y: &str, aux: &str, budget: Option<PyBudget>) -> PyResult<i64> {
    machine::string_info(
        &bits(x)?,
        &bits(y)?,
        &bits(aux)?,
        &budget_or_default(budget),
    )
    .map_err(|e| BudgetError::new_err(e.to_string()))
}

fn probability(map: BTreeMap<String, f64>) -> PyResult<FiniteProbability> {
    let masses = map
        .into_iter()
        .map(|(k, v)| Ok((bits(&k)?, v)))
        .collect::<PyResult<Vec<_>>>()?;
    FiniteProbability::new(masses).map_err(value_err)
}

fn probability_dict(p: &FiniteProbability) -> BTreeMap<String, f64> {
    p.iter().map(|(x, v)| (x.to_string(), v)).collect()
}

fn channel(inputs: Vec<String>, outputs: Vec<String>, kernel: Vec<Vec<f64>>) -> PyResult<Channel> {
    let inputs = inputs.iter().map(|s| bits(s)).collect::<PyResult<_>>()?;
    let outputs = outputs.iter().map(|s| bits(s)).collect::<PyResult<_>>()?;
    Channel::new(inputs, outputs, kernel).map_err(value_err)
}

fn table_for(
    probs: &[&FiniteProbability],
    aux: &str,
    budget: Option<PyBudget>,
) -> PyResult<ComplexityTable> {
    let budget = budget_or_default(budget);
    let mut strings: Vec<BitString> = probs.iter().flat_map(|p| p.support().cloned()).collect();
    strings.sort();
    strings.dedup();
    ComplexityTable::for_pairs(&bits(aux)?, &budget, &strings)
        .map_err(|e| BudgetError::new_err(e.to_string()))
}

/// `log2 sum 2^{i(x:y)} p(x) q(y)`.
#[pyfunction]
#[pyo3(signature = (p, q, aux="", budget=None))]
fn prob_info(
    p: BTreeMap<String, f64>,
    q: BTreeMap<String, f64>,
    aux: &str,
    budget: Option<PyBudget>,
) -> PyResult<f64> {
    let (p, q) = (probability(p)?, probability(q)?);
    let table = table_for(&[&p, &q], aux, budget)?;
    info::prob_info(&p, &q, &table).map_err(|e| BudgetError::new_err(e.to_string()))
}

/// Push `p` through the channel whose column `j` is the distribution over
/// `outputs` given `inputs[j]`.
#[pyfunction]
fn transform(
    inputs: Vec<String>,
    outputs: Vec<String>,
    kernel: Vec<Vec<f64>>,
    p: BTreeMap<String, f64>,
) -> PyResult<BTreeMap<String, f64>> {
    let f = channel(inputs, outputs, kernel)?;
    let fp = info::transform(&f, &probability(p)?).map_err(value_err)?;
    Ok(probability_dict(&fp))
}

/// `i(fp:q) - i(p:q)`.
#[pyfunction]
#[pyo3(signature = (inputs, outputs, kernel, p, q, aux="", budget=None))]
#[allow(clippy::too_many_arguments)]
fn conservation_slack(
    inputs: Vec<String>,
    outputs: Vec<String>,
    kernel: Vec<Vec<f64>>,
    p: BTreeMap<String, f64>,
    q: BTreeMap<String, f64>,
    aux: &str,
    budget: Option<PyBudget>,
) -> PyResult<f64> {
    let f = channel(inputs, outputs, kernel)?;
    let (p, q) = (probability(p)?, probability(q)?);
    let fp = info::transform(&f, &p).map_err(value_err)?;
    let table = table_for(&[&p, &q, &fp], aux, budget)?;
    info::conservation_slack(&f, &p, &q, &table).map_err(|e| match e {
        info::InfoCalcError::Info(inner) => BudgetError::new_err(inner.to_string()),
        other => value_err(other),
    })
}

fn to_matrix(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("matrix must be square and nonempty"));
    }
    let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
    Ok(CMatrix::from_row_slice(d, d, &flat))
}

fn from_matrix(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn to_povm(elements: Vec<Vec<Vec<Complex64>>>) -> PyResult<Povm> {
    let mats = elements
        .into_iter()
        .map(to_matrix)
        .collect::<PyResult<Vec<_>>>()?;
    quantum::validate_povm(mats)
        .map_err(|e| PyValueError::new_err(format!("{}: {e}", e.condition())))
}

/// Checks a POVM and returns `(qubits, outcomes)`; the ValueError message
/// starts with the failed condition.
#[pyfunction]
fn validate_povm(elements: Vec<Vec<Vec<Complex64>>>) -> PyResult<(usize, usize)> {
    let e = to_povm(elements)?;
    Ok((e.qubits(), e.outcomes()))
}

#[pyfunction]
fn basis_povm(n: usize) -> PyResult<Vec<Vec<Vec<Complex64>>>> {
    let e = Povm::computational_basis(n).map_err(value_err)?;
    Ok(e.elements().iter().map(from_matrix).collect())
}

#[pyfunction]
#[pyo3(signature = (n, outcomes, seed=0))]
fn random_povm(n: usize, outcomes: usize, seed: u64) -> PyResult<Vec<Vec<Vec<Complex64>>>> {
    let e = quantum::random_povm(n, outcomes, seed).map_err(value_err)?;
    Ok(e.elements().iter().map(from_matrix).collect())
}

/// Born-rule outcome distribution keyed by outcome label.
#[pyfunction]
fn measure(
    elements: Vec<Vec<Vec<Complex64>>>,
    state: Vec<Complex64>,
) -> PyResult<BTreeMap<String, f64>> {
    let e = to_povm(elements)?;
    let psi = PureState::new(CVector::from_vec(state)).map_err(value_err)?;
    let p = quantum::measure(&e, &psi).map_err(value_err)?;
    Ok(probability_dict(&p))
}

#[pyfunction]
#[pyo3(signature = (n, seed=0))]
fn haar_sample(n: usize, seed: u64) -> PyResult<Vec<Complex64>> {
    let psi = quantum::haar_sample(n, seed).map_err(value_err)?;
    Ok(psi.amplitudes().iter().copied().collect())
}

#[pyfunction]
#[pyo3(signature = (n, samples, seed=0))]
fn first_moment(
    py: Python<'_>,
    n: usize,
    samples: usize,
    seed: u64,
) -> PyResult<Vec<Vec<Complex64>>> {
    let m = py
        .detach(|| quantum::first_moment_estimate(n, samples, seed))
        .map_err(value_err)?;
    Ok(from_matrix(&m))
}

#[pyfunction]
#[pyo3(signature = (n, samples, seed=0))]
fn second_moment(
    py: Python<'_>,
    n: usize,
    samples: usize,
    seed: u64,
) -> PyResult<Vec<Vec<Complex64>>> {
    let m = py
        .detach(|| quantum::second_moment_estimate(n, samples, seed))
        .map_err(value_err)?;
    Ok(from_matrix(&m))
}

#[pyfunction]
fn symmetric_projector(n: usize) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(from_matrix(
        &quantum::symmetric_projector(n).map_err(value_err)?,
    ))
}

fn experiment_error(e: experiments::ExperimentError) -> PyErr {
    match e {
        experiments::ExperimentError::Budget { .. } => BudgetError::new_err(e.to_string()),
        other => value_err(other),
    }
}

/// Runs the no-information experiment; `config` is a JSON object with any
/// of the config fields, the rest take defaults. Returns the report JSON.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn run_noinfo(py: Python<'_>, config: Option<&str>) -> PyResult<String> {
    let config: NoInfoConfig = parse_config(config)?;
    let report = py
        .detach(|| experiments::run_noinfo(&config))
        .map_err(experiment_error)?;
    report.to_json().map_err(value_err)
}

/// Runs the conservation experiment; same conventions as `run_noinfo`.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn run_conservation(py: Python<'_>, config: Option<&str>) -> PyResult<String> {
    let config: ConservationConfig = parse_config(config)?;
    let report = py
        .detach(|| experiments::run_conservation(&config))
        .map_err(experiment_error)?;
    report.to_json().map_err(value_err)
}

/// Overlays a partial JSON object on the default config.
fn parse_config<T>(text: Option<&str>) -> PyResult<T>
where
    T: Default + serde::Serialize + serde::de::DeserializeOwned,
{
    let mut base = serde_json::to_value(T::default()).map_err(value_err)?;
    if let Some(text) = text {
        let patch: serde_json::Value = serde_json::from_str(text).map_err(value_err)?;
        let serde_json::Value::Object(fields) = patch else {
            return Err(PyValueError::new_err("config must be a JSON object"));
        };
        for (k, v) in fields {
            if base.get(&k).is_none() {
                return Err(PyValueError::new_err(format!("unknown config field {k:?}")));
            }
            base[k] = v;
        }
    }
    serde_json::from_value(base).map_err(value_err)
}

#[pymodule]
fn algoinfo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BudgetError", m.py().get_type::<BudgetError>())?;
    m.add_class::<PyBudget>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate, m)?)?;
    m.add_function(wrap_pyfunction!(complexity, m)?)?;
    m.add_function(wrap_pyfunction!(algorithmic_probability, m)?)?;
    m.add_function(wrap_pyfunction!(kraft_sum, m)?)?;
    m.add_function(wrap_pyfunction!(string_info, m)?)?;
    m.add_function(wrap_pyfunction!(prob_info, m)?)?;
    m.add_function(wrap_pyfunction!(transform, m)?)?;
    m.add_function(wrap_pyfunction!(conservation_slack, m)?)?;
    m.add_function(wrap_pyfunction!(validate_povm, m)?)?;
    m.add_function(wrap_pyfunction!(basis_povm, m)?)?;
    m.add_function(wrap_pyfunction!(random_povm, m)?)?;
    m.add_function(wrap_pyfunction!(measure, m)?)?;
    m.add_function(wrap_pyfunction!(haar_sample, m)?)?;
    m.add_function(wrap_pyfunction!(first_moment, m)?)?;
    m.add_function(wrap_pyfunction!(second_moment, m)?)?;
    m.add_function(wrap_pyfunction!(symmetric_projector, m)?)?;
    m.add_function(wrap_pyfunction!(run_noinfo, m)?)?;
    m.add_function(wrap_pyfunction!(run_conservation, m)?)?;
    Ok(())
}
