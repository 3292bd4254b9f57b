//! Python bindings for the nfvmp estimators and experiment harness.
//!
//! Configurations are passed as the same `key = value` text the CLI reads.
//! Configuration errors raise `ValueError`; anything else `RuntimeError`.

use nfvmp::harness::{self, selftest, ExperimentConfig, Method};
use nfvmp::{crb, wavefield, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    if e.is_config() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn config(text: &str) -> PyResult<ExperimentConfig> {
    ExperimentConfig::from_text(text).map_err(to_py)
}

/// Square-root CRB `(position_m, velocity_mps)` at the configured SNR.
#[pyfunction]
#[pyo3(signature = (config_text = "preset = desk"))]
fn crb_bounds(config_text: &str) -> PyResult<(f64, f64)> {
    let cfg = config(config_text)?;
    let scn = &cfg.scenario;
    let run = || -> nfvmp::Result<(f64, f64)> {
        let gains = wavefield::ChannelGain::nominal(scn)?;
        let sigma = wavefield::set_snr(&gains, cfg.snr_db, 0)?.sigma;
        Ok(crb::scenario_crb(scn, &gains, sigma)?.root())
    };
    run().map_err(to_py)
}

/// Simulate one trial and run a single method on it.
#[pyfunction]
#[pyo3(signature = (config_text = "preset = desk", method = "vmp-system", seed = 0))]
fn estimate<'py>(
    py: Python<'py>,
    config_text: &str,
    method: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = config(config_text)?;
    let m: Method = method.parse().map_err(to_py)?;
    cfg.methods = vec![m];
    let scn = cfg.scenario.clone();
    let data = harness::synthesize_trial(&scn, cfg.snr_db, cfg.delay_std, cfg.synthesis, seed)
        .map_err(to_py)?;
    let (_, res) = py
        .detach(|| harness::run_methods(&cfg, &scn, &data, seed))
        .pop()
        .expect("one method requested");
    let e = res.map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("method", m.name())?;
    d.set_item("p_hat", (e.p_hat.x, e.p_hat.y))?;
    d.set_item("v_hat", (e.v_hat.x, e.v_hat.y))?;
    d.set_item("err_p_m", (e.p_hat - scn.target.p0).norm())?;
    d.set_item("err_v_mps", (e.v_hat - scn.target.v0).norm())?;
    d.set_item("runtime_s", e.runtime_s)?;
    Ok(d)
}

/// Run a Monte Carlo sweep; returns one dict per CSV row.
#[pyfunction]
#[pyo3(signature = (config_text = "preset = desk"))]
fn sweep<'py>(py: Python<'py>, config_text: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config(config_text)?;
    let res = py.detach(|| harness::run_experiment(&cfg)).map_err(to_py)?;
    res.cells
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("method", c.method.name())?;
            d.set_item("sweep_param", c.sweep_param.name())?;
            d.set_item("sweep_value", c.sweep_value)?;
            d.set_item("trials", c.trials)?;
            d.set_item("rmse_p_m", c.rmse_p_m)?;
            d.set_item("rmse_v_mps", c.rmse_v_mps)?;
            d.set_item("crb_p_m", c.crb_p_m)?;
            d.set_item("crb_v_mps", c.crb_v_mps)?;
            d.set_item("median_runtime_s", c.median_runtime_s)?;
            d.set_item("fail_rate", c.fail_rate)?;
            Ok(d)
        })
        .collect()
}

/// Built-in consistency checks as `(name, passed, detail)` tuples.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn run_selftest(py: Python<'_>, seed: u64) -> Vec<(String, bool, String)> {
    py.detach(|| selftest::run(seed))
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.detail))
        .collect()
}

#[pymodule]
fn nfvmp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(crb_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_selftest, m)?)?;
    Ok(())
}
