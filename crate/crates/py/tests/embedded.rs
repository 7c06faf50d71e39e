//! Runs the Python smoke test against the bindings inside an embedded interpreter, so
//! `cargo test` covers the Python surface without building a wheel.

use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<R>(f: impl FnOnce(Python<'_>, &Bound<'_, PyDict>) -> PyResult<R>) -> R {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "avmac")?;
        avmac::avmac(&m)?;
        py.import("sys")?.getattr("modules")?.set_item("avmac", &m)?;
        let globals = PyDict::new(py);
        f(py, &globals)
    })
    .unwrap_or_else(|e: PyErr| panic!("python error: {e}"))
}

#[test]
fn smoke_script_passes() {
    let script = CString::new(include_str!("../../../python/smoke_test.py")).unwrap();
    with_module(|py, globals| {
        py.run(&script, Some(globals), None)?;
        py.run(c"main()", Some(globals), None)
    });
}

#[test]
fn errors_surface_as_python_exceptions() {
    with_module(|py, globals| {
        py.run(
            c"
import avmac
good = avmac.Codebooks([['011', '100'], ['010', '101']])
for bad in (lambda: avmac.verify(good, 1, '5/4'), lambda: avmac.Channel.adder(1, 1),
            lambda: avmac.Codebooks([['01', '1']])):
    try:
        bad()
    except ValueError:
        pass
    else:
        raise AssertionError('expected ValueError')
assert avmac.REPORT_SCHEMA == 'avmac-report/1'
",
            Some(globals),
            None,
        )
    });
}
