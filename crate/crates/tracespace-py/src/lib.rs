//! Thin Python layer over the `tracespace` crate. Every entry point takes
//! program text and raises `ValueError` on any library error.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use tracespace::absint::{self, EffectConfig, Env};
use tracespace::index_poset::{schedulings as schedule, ScheduleReport};
use tracespace::lang::{normalize, parse, Mode};
use tracespace::shadow::{self, Labels};

fn py_err(e: tracespace::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn reports(text: &str) -> tracespace::Result<Vec<ScheduleReport>> {
    let src = parse(text)?;
    let caps = src.capacities();
    normalize(&src.program)?.iter().map(|alt| schedule(alt, &caps)).collect()
}

/// Total number of essential schedulings over all alternatives.
pub fn count_of(text: &str) -> tracespace::Result<usize> {
    Ok(reports(text)?.iter().map(|r| r.count).sum())
}

pub fn report_json(text: &str) -> tracespace::Result<String> {
    let rs = reports(text)?;
    let v = if let [r] = rs.as_slice() {
        serde_json::to_value(r).expect("report serializes")
    } else {
        serde_json::json!({ "alternatives": rs, "count": rs.iter().map(|r| r.count).sum::<usize>() })
    };
    Ok(v.to_string())
}

fn looping(text: &str) -> tracespace::Result<(tracespace::lang::Alternative, tracespace::lang::Capacities)> {
    let src = parse(text)?;
    let mut alts = normalize(&src.program)?;
    if alts.len() != 1 || alts[0].mode != Mode::AllStarred {
        return Err(tracespace::Error::UnsupportedShape("expected one alternative where every thread loops".into()));
    }
    Ok((alts.remove(0), src.capacities()))
}

/// `(states, transitions, edges)` of the shadow automaton after the requested reductions.
pub fn automaton_sizes(text: &str, quotient: bool, det: bool, min: bool) -> tracespace::Result<(usize, usize, usize)> {
    let (alt, caps) = looping(text)?;
    let mut a = shadow::automaton_of(&alt, &caps, Labels::Maximal)?;
    if quotient {
        a = shadow::quotient_connexity(&a);
    }
    if det || min {
        a = shadow::determinize(&a);
    }
    if min {
        a = shadow::minimize(&a);
    }
    Ok((a.states.len(), a.transition_count(), a.edge_count()))
}

/// Per-state intervals on the reduced automaton; `None` marks an unreachable state.
pub fn intervals(text: &str, init: &BTreeMap<String, String>) -> tracespace::Result<Vec<Option<BTreeMap<String, String>>>> {
    let (alt, caps) = looping(text)?;
    let a = shadow::automaton_of(&alt, &caps, Labels::Maximal)?;
    let a = shadow::minimize(&shadow::determinize(&shadow::quotient_connexity(&a)));
    let mut env = Env::new();
    for (k, v) in init {
        let iv = absint::parse_interval(v)
            .ok_or_else(|| tracespace::Error::Parse { line: 1, col: 1, msg: format!("bad interval `{v}` for {k}") })?;
        env.insert(k.clone(), iv);
    }
    let sys = absint::build_equations(&a, &alt, &EffectConfig::default(), env);
    let sol = absint::solve(&sys, absint::DEFAULT_WIDENING_DELAY, absint::DEFAULT_NARROWING_PASSES);
    Ok(sol.into_iter().map(|e| e.map(|e| e.iter().map(|(k, v)| (k.clone(), v.to_string())).collect())).collect())
}

#[pyfunction]
fn count(text: &str) -> PyResult<usize> {
    count_of(text).map_err(py_err)
}

#[pyfunction]
fn schedulings(text: &str) -> PyResult<String> {
    report_json(text).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (text, quotient=false, det=false, min=false))]
fn automaton(text: &str, quotient: bool, det: bool, min: bool) -> PyResult<(usize, usize, usize)> {
    automaton_sizes(text, quotient, det, min).map_err(py_err)
}

#[pyfunction]
#[pyo3(name = "absint", signature = (text, init=BTreeMap::new()))]
fn analyze(text: &str, init: BTreeMap<String, String>) -> PyResult<Vec<Option<BTreeMap<String, String>>>> {
    intervals(text, &init).map_err(py_err)
}

#[pymodule]
fn tracespace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(count, m)?)?;
    m.add_function(wrap_pyfunction!(schedulings, m)?)?;
    m.add_function(wrap_pyfunction!(automaton, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    Ok(())
}
