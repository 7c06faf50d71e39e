//! Python bindings for `avmac_core`.
//!
//! Users are 1-based on the Python side, as in the CLI; messages are 1-based with `0`
//! for a discarded user. Rationals cross the boundary as `"p/q"` strings and
//! structured reports as plain dicts and lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyAny;

use avmac_core::adversary::{self, ErrorProfile, MonteCarloConfig, Strategy, DEFAULT_CONFIDENCE, DEFAULT_EVAL_BUDGET};
use avmac_core::extension::{self, DEFAULT_PATTERN_BUDGET};
use avmac_core::feasibility::{self, SubsetWitness};
use avmac_core::format;
use avmac_core::rational::format_rational;
use avmac_core::search::{self, SearchSpec, DEFAULT_SEARCH_BUDGET};
use avmac_core::verifier::{self, VerifierConfig};
use avmac_core::{CanonicalDecoder, ChannelSpec, CodebookTuple, Decoder, Gamma, StateSequence};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn gamma(s: &str) -> PyResult<Gamma> {
    s.parse().map_err(err)
}

/// Serializable value to native Python objects via JSON.
fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn to_zero_based(users: &[usize], t: usize) -> PyResult<Vec<usize>> {
    let mut out = Vec::with_capacity(users.len());
    for &u in users {
        if u == 0 || u > t {
            return Err(PyValueError::new_err(format!("user {u} out of range 1..={t}")));
        }
        out.push(u - 1);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn one_based(users: &[usize]) -> Vec<usize> {
    users.iter().map(|u| u + 1).collect()
}

/// A channel `W(y | x₁…xₜ, s)` with exact rational transition probabilities.
#[pyclass(name = "Channel", module = "avmac", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChannel {
    inner: ChannelSpec,
}

#[pymethods]
impl PyChannel {
    /// The adder channel with `t` binary users and states `{0..ell}`.
    #[staticmethod]
    fn adder(t: usize, ell: usize) -> PyResult<Self> {
        Ok(PyChannel { inner: avmac_core::make_adder_channel(t, ell).map_err(err)? })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(PyChannel { inner: format::parse_channel(text).map_err(err)? })
    }

    fn to_toml(&self) -> PyResult<String> {
        format::serialize_channel(&self.inner).map_err(err)
    }

    #[getter]
    fn users(&self) -> usize {
        self.inner.users()
    }

    #[getter]
    fn input_sizes(&self) -> Vec<usize> {
        self.inner.input_sizes().to_vec()
    }

    #[getter]
    fn states(&self) -> usize {
        self.inner.state_count()
    }

    #[getter]
    fn outputs(&self) -> usize {
        self.inner.output_count()
    }

    #[getter]
    fn s0(&self) -> usize {
        self.inner.s0()
    }

    #[getter]
    fn deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }

    /// `{size: [users, ...]}` for every symmetrizable subset.
    fn symmetrizable_subsets(&self) -> PyResult<std::collections::BTreeMap<usize, Vec<Vec<usize>>>> {
        let orders = feasibility::symmetrizable_orders(&self.inner).map_err(err)?;
        Ok(subset_map(orders))
    }

    /// `{size: [users, ...]}` for every overwritable subset.
    fn overwritable_subsets(&self) -> PyResult<std::collections::BTreeMap<usize, Vec<Vec<usize>>>> {
        let orders = feasibility::overwritable_orders(&self.inner).map_err(err)?;
        Ok(subset_map(orders))
    }

    /// A symmetrizing witness for `users` as witness-file TOML, or `None`.
    fn symmetrizer(&self, users: Vec<usize>) -> PyResult<Option<String>> {
        let users = to_zero_based(&users, self.inner.users())?;
        feasibility::find_symmetrizer(&self.inner, &users)
            .map_err(err)?
            .map(|w| format::serialize_witness(&w, Some(feasibility::WitnessKind::Symmetrizer)).map_err(err))
            .transpose()
    }

    /// An overwriting witness for `users` as witness-file TOML, or `None`.
    fn overwriter(&self, users: Vec<usize>) -> PyResult<Option<String>> {
        let users = to_zero_based(&users, self.inner.users())?;
        feasibility::find_overwriter(&self.inner, &users)
            .map_err(err)?
            .map(|w| format::serialize_witness(&w, Some(feasibility::WitnessKind::Overwriter)).map_err(err))
            .transpose()
    }

    /// Necessary conditions for partial correction at `gamma`.
    fn necessary_conditions<'py>(&self, py: Python<'py>, gamma: &str) -> PyResult<Bound<'py, PyAny>> {
        let g = self::gamma(gamma)?;
        let r = feasibility::interior_necessary_conditions(&self.inner, &g).map_err(err)?;
        let failures: Vec<String> = r.failures.iter().map(|f| f.to_string()).collect();
        to_py(
            py,
            &serde_json::json!({ "pass": r.passes(), "t": r.t, "u": r.u, "gamma": r.gamma, "failures": failures }),
        )
    }

    fn __repr__(&self) -> String {
        format!(
            "Channel(users={}, inputs={:?}, states={}, outputs={})",
            self.inner.users(),
            self.inner.input_sizes(),
            self.inner.state_count(),
            self.inner.output_count()
        )
    }
}

fn subset_map(
    orders: std::collections::BTreeMap<usize, Vec<SubsetWitness>>,
) -> std::collections::BTreeMap<usize, Vec<Vec<usize>>> {
    orders.into_iter().map(|(m, list)| (m, list.iter().map(|sw| one_based(&sw.users)).collect())).collect()
}

/// One binary codebook per user.
#[pyclass(name = "Codebooks", module = "avmac", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCodebooks {
    inner: CodebookTuple,
}

#[pymethods]
impl PyCodebooks {
    /// `Codebooks([["011", "100"], ["010", "101"]])`.
    #[new]
    fn new(books: Vec<Vec<String>>) -> PyResult<Self> {
        let refs: Vec<Vec<&str>> = books.iter().map(|b| b.iter().map(String::as_str).collect()).collect();
        let slices: Vec<&[&str]> = refs.iter().map(Vec::as_slice).collect();
        Ok(PyCodebooks { inner: CodebookTuple::from_strs(&slices).map_err(err)? })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyCodebooks { inner: format::parse_codebooks(text).map_err(err)? })
    }

    fn to_text(&self) -> String {
        format::serialize_codebooks(&self.inner)
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.t()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn sizes(&self) -> Vec<usize> {
        self.inner.sizes()
    }

    fn codebooks(&self) -> Vec<Vec<String>> {
        self.inner
            .codebooks()
            .iter()
            .map(|b| b.iter().map(|w| avmac_core::codebook::codeword_string(w)).collect())
            .collect()
    }

    /// Column-canonical representative of the symmetry orbit.
    fn canonical(&self) -> Vec<Vec<String>> {
        search::canonical_form(&self.inner)
            .iter()
            .map(|b| b.iter().map(|w| avmac_core::codebook::codeword_string(w)).collect())
            .collect()
    }

    /// Canonical decoder estimate (1-based, `0` = discarded) for output `y`.
    fn decode(&self, y: Vec<usize>, ell: usize) -> Vec<usize> {
        CanonicalDecoder::new_unchecked(&self.inner, ell).decode(&y)
    }

    fn __repr__(&self) -> String {
        format!("Codebooks({:?})", self.codebooks())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// Full zero-error report with every witness found.
#[pyfunction]
#[pyo3(signature = (codebooks, ell, gamma, a1_budget = verifier::DEFAULT_A1_BUDGET))]
fn verify<'py>(
    py: Python<'py>,
    codebooks: &PyCodebooks,
    ell: usize,
    gamma: &str,
    a1_budget: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let g = self::gamma(gamma)?;
    let report =
        verifier::verify_zero_error_with(&codebooks.inner, ell, &g, &VerifierConfig { a1_budget }).map_err(err)?;
    let witnesses: Vec<String> = report.failures.iter().map(|f| f.to_string()).collect();
    to_py(
        py,
        &serde_json::json!({
            "verdict": report.verdict,
            "t": report.t,
            "u": report.u,
            "failed_conditions": report.failed_conditions(),
            "witnesses": witnesses,
            "failures": report.failures,
        }),
    )
}

#[pyfunction]
fn is_zero_error(codebooks: &PyCodebooks, ell: usize, gamma: &str) -> PyResult<bool> {
    verifier::is_zero_error(&codebooks.inner, ell, &self::gamma(gamma)?, &VerifierConfig::default()).map_err(err)
}

/// Antichain codebooks of `size` words in `{0,1}ⁿ`, in lexicographic order.
#[pyfunction]
fn antichain_codebooks(n: usize, size: usize) -> PyResult<Vec<Vec<String>>> {
    Ok(search::enumerate_antichain_codebooks(n, size)
        .map_err(err)?
        .map(|b| b.iter().map(|w| avmac_core::codebook::codeword_string(w)).collect())
        .collect())
}

/// Exhaustive search; returns `(results, summary)`.
#[pyfunction]
#[pyo3(signature = (n, ell, gamma, sizes, symmetry = true, budget = DEFAULT_SEARCH_BUDGET, stop_after = None))]
#[allow(clippy::too_many_arguments)]
fn search_codebooks<'py>(
    py: Python<'py>,
    n: usize,
    ell: usize,
    gamma: &str,
    sizes: Vec<usize>,
    symmetry: bool,
    budget: u64,
    stop_after: Option<usize>,
) -> PyResult<(Vec<PyCodebooks>, Bound<'py, PyAny>)> {
    let mut spec = SearchSpec::new(n, ell, self::gamma(gamma)?, sizes);
    spec.symmetry_reduction = symmetry;
    spec.budget = budget;
    spec.stop_after = stop_after;
    let outcome = py.detach(|| search::search(&spec)).map_err(err)?;
    let summary = serde_json::json!({
        "stats": outcome.stats,
        "budget_exhausted": outcome.budget_exhausted,
        "stopped_early": outcome.stopped_early,
    });
    let results = outcome.results.into_iter().map(|inner| PyCodebooks { inner }).collect();
    Ok((results, to_py(py, &summary)?))
}

#[pyfunction]
fn erasure_budget(t: usize, u: usize, r: usize) -> PyResult<usize> {
    extension::erasure_budget(t, u, r).map_err(err)
}

/// Worst-case value over admissible patterns by exhaustive search, with a pattern attaining it.
#[pyfunction]
#[pyo3(signature = (t, u, r, budget = DEFAULT_PATTERN_BUDGET))]
fn worst_case_erasures(t: usize, u: usize, r: usize, budget: u64) -> PyResult<(usize, String)> {
    let (v, p) = extension::worst_case_erasures(t, u, r, budget).map_err(err)?;
    Ok((v, p.to_string()))
}

fn outer_codes(outer: &[Vec<String>]) -> PyResult<Vec<Vec<Vec<usize>>>> {
    outer.iter().map(|code| code.iter().map(|w| format::parse_symbols(w).map_err(err)).collect()).collect()
}

/// Builds the concatenation plan and exhausts admissible erasure patterns.
#[pyfunction]
#[pyo3(signature = (inner, outer, r, ell, gamma, budget = DEFAULT_PATTERN_BUDGET))]
fn verify_extension<'py>(
    py: Python<'py>,
    inner: &PyCodebooks,
    outer: Vec<Vec<String>>,
    r: usize,
    ell: usize,
    gamma: &str,
    budget: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let plan =
        extension::build_plan(inner.inner.clone(), outer_codes(&outer)?, r, ell, &self::gamma(gamma)?).map_err(err)?;
    let verdict = py.detach(|| extension::verify_extension(&plan, budget)).map_err(err)?;
    let rates = extension::achieved_rates(&plan);
    to_py(py, &serde_json::json!({ "plan": plan, "verdict": verdict, "rates": rates }))
}

fn states(s: &str) -> PyResult<StateSequence> {
    Ok(StateSequence(format::parse_symbols(s).map_err(err)?))
}

fn profile_dict<'py>(py: Python<'py>, p: &ErrorProfile) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, p)
}

/// Exact `e_γ(s)` under the canonical decoder, as `"p/q"`.
#[pyfunction]
fn exact_error(
    codebooks: &PyCodebooks,
    channel: &PyChannel,
    ell: usize,
    states: &str,
    gamma: &str,
) -> PyResult<String> {
    let dec = CanonicalDecoder::new_unchecked(&codebooks.inner, ell);
    let v =
        adversary::exact_error(&codebooks.inner, &channel.inner, &dec, &self::states(states)?, &self::gamma(gamma)?)
            .map_err(err)?;
    Ok(format_rational(&v))
}

/// `e_γ(s)` for every state sequence; the profile's `max` holds the worst one.
#[pyfunction]
#[pyo3(signature = (codebooks, channel, ell, gamma, budget = DEFAULT_EVAL_BUDGET))]
fn max_error<'py>(
    py: Python<'py>,
    codebooks: &PyCodebooks,
    channel: &PyChannel,
    ell: usize,
    gamma: &str,
    budget: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let g = self::gamma(gamma)?;
    let dec = CanonicalDecoder::new_unchecked(&codebooks.inner, ell);
    let p = py
        .detach(|| adversary::max_error_exhaustive(&codebooks.inner, &channel.inner, &dec, &g, budget))
        .map_err(err)?;
    profile_dict(py, &p)
}

/// Seeded Monte-Carlo error; `strategy` is `no-adversary`, `uniform` or `fixed:STATES`.
#[pyfunction]
#[pyo3(signature = (codebooks, channel, ell, gamma, strategy, trials, seed, confidence = DEFAULT_CONFIDENCE))]
#[allow(clippy::too_many_arguments)]
fn monte_carlo_error<'py>(
    py: Python<'py>,
    codebooks: &PyCodebooks,
    channel: &PyChannel,
    ell: usize,
    gamma: &str,
    strategy: &str,
    trials: u64,
    seed: u64,
    confidence: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let strat = match strategy.split_once(':') {
        None if strategy == "no-adversary" => Strategy::NoAdversary,
        None if strategy == "uniform" => Strategy::UniformRandom,
        Some(("fixed", s)) => Strategy::Fixed(self::states(s)?),
        _ => return Err(PyValueError::new_err(format!("unknown strategy {strategy:?}"))),
    };
    let g = self::gamma(gamma)?;
    let dec = CanonicalDecoder::new_unchecked(&codebooks.inner, ell);
    let cfg = MonteCarloConfig { trials, seed, confidence };
    let p = py
        .detach(|| adversary::monte_carlo_error(&codebooks.inner, &channel.inner, &dec, &strat, &g, &cfg))
        .map_err(err)?;
    profile_dict(py, &p)
}

/// Exact expected error of the symmetrization attack on `users`, as `"p/q"`, or `None`
/// when the channel is not symmetrizable on them.
#[pyfunction]
#[pyo3(signature = (channel, users, codebooks, ell, gamma, budget = DEFAULT_EVAL_BUDGET))]
fn symmetrization_attack_exact(
    py: Python<'_>,
    channel: &PyChannel,
    users: Vec<usize>,
    codebooks: &PyCodebooks,
    ell: usize,
    gamma: &str,
    budget: u64,
) -> PyResult<Option<String>> {
    let users = to_zero_based(&users, channel.inner.users())?;
    let Some(w) = feasibility::find_symmetrizer(&channel.inner, &users).map_err(err)? else {
        return Ok(None);
    };
    let g = self::gamma(gamma)?;
    let dec = CanonicalDecoder::new_unchecked(&codebooks.inner, ell);
    let v = py
        .detach(|| {
            adversary::symmetrization_attack_exact(&channel.inner, &users, &w, &codebooks.inner, &dec, &g, budget)
        })
        .map_err(err)?;
    Ok(Some(format_rational(&v)))
}

#[pymodule]
pub fn avmac(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChannel>()?;
    m.add_class::<PyCodebooks>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(is_zero_error, m)?)?;
    m.add_function(wrap_pyfunction!(antichain_codebooks, m)?)?;
    m.add_function(wrap_pyfunction!(search_codebooks, m)?)?;
    m.add_function(wrap_pyfunction!(erasure_budget, m)?)?;
    m.add_function(wrap_pyfunction!(worst_case_erasures, m)?)?;
    m.add_function(wrap_pyfunction!(verify_extension, m)?)?;
    m.add_function(wrap_pyfunction!(exact_error, m)?)?;
    m.add_function(wrap_pyfunction!(max_error, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_error, m)?)?;
    m.add_function(wrap_pyfunction!(symmetrization_attack_exact, m)?)?;
    m.add("REPORT_SCHEMA", avmac_core::cli::REPORT_SCHEMA)?;
    Ok(())
}
