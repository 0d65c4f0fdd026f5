//! Python bindings for the `metasyn` simulator.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use metasyn::cli::Command;
use metasyn::crossbar::ComparatorSetup;
use metasyn::experiment::{ExperimentSpec, Variant};
use metasyn::network::SynapseModel;
use metasyn::synapse::{Efficacy, UpdateDirection};

fn py_err(e: metasyn::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_efficacy(s: &str) -> PyResult<Efficacy> {
    match s {
        "high" | "1" => Ok(Efficacy::High),
        "low" | "0" => Ok(Efficacy::Low),
        _ => Err(PyValueError::new_err(format!(
            "efficacy must be 'low' or 'high', got {s:?}"
        ))),
    }
}

fn parse_direction(s: &str) -> PyResult<UpdateDirection> {
    match s {
        "potentiate" | "+" => Ok(UpdateDirection::Potentiate),
        "depress" | "-" => Ok(UpdateDirection::Depress),
        _ => Err(PyValueError::new_err(format!(
            "direction must be 'potentiate' or 'depress', got {s:?}"
        ))),
    }
}

fn parse_model(s: &str) -> PyResult<SynapseModel> {
    SynapseModel::parse(s).ok_or_else(|| PyValueError::new_err(format!("unknown model {s:?}")))
}

#[pyclass(name = "MetaState", eq, frozen, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
struct PyMetaState(metasyn::MetaState);

#[pymethods]
impl PyMetaState {
    #[new]
    #[pyo3(signature = (efficacy, metalevel = 0, n_levels = 3))]
    fn new(efficacy: &str, metalevel: u16, n_levels: u16) -> PyResult<Self> {
        metasyn::MetaState::new(parse_efficacy(efficacy)?, metalevel, n_levels)
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn efficacy(&self) -> u8 {
        self.0.efficacy_value()
    }

    #[getter]
    fn metalevel(&self) -> u16 {
        self.0.metalevel()
    }

    #[getter]
    fn n_levels(&self) -> u16 {
        self.0.n_levels()
    }

    fn chain_index(&self) -> usize {
        self.0.chain_index()
    }

    /// Deterministic step; use `transition()` for a probabilistic one.
    fn step(&self, direction: &str) -> PyResult<Self> {
        Ok(Self(self.0.transition(parse_direction(direction)?)))
    }

    fn __repr__(&self) -> String {
        format!(
            "MetaState({:?}, metalevel={}, n_levels={})",
            self.0.efficacy().label(),
            self.0.metalevel(),
            self.0.n_levels()
        )
    }
}

/// Applies `direction` with transition probability `q`, drawing from the
/// transition stream of `seed`.
#[pyfunction]
#[pyo3(signature = (state, direction, q = 1.0, seed = 0))]
fn transition(state: PyMetaState, direction: &str, q: f64, seed: u64) -> PyResult<PyMetaState> {
    let policy = metasyn::TransitionPolicy::new(q, seed).map_err(py_err)?;
    metasyn::synapse::transition(state.0, parse_direction(direction)?, &policy)
        .map(PyMetaState)
        .map_err(py_err)
}

#[pyclass(name = "NetworkConfig", from_py_object)]
#[derive(Clone)]
struct PyNetworkConfig(metasyn::NetworkConfig);

#[pymethods]
impl PyNetworkConfig {
    #[new]
    #[pyo3(signature = (n_in = 128, n_out = 128, connectivity = 0.25, activity = 0.25, n_levels = 3, model = "multistate", seed = 0))]
    fn new(
        n_in: usize,
        n_out: usize,
        connectivity: f64,
        activity: f64,
        n_levels: u16,
        model: &str,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = metasyn::NetworkConfig {
            n_in,
            n_out,
            connectivity,
            activity,
            n_levels,
            model: parse_model(model)?,
            seed,
            ..metasyn::NetworkConfig::default()
        };
        cfg.validate().map_err(py_err)?;
        Ok(Self(cfg))
    }

    #[getter]
    fn n_in(&self) -> usize {
        self.0.n_in
    }

    #[getter]
    fn n_out(&self) -> usize {
        self.0.n_out
    }

    #[getter]
    fn connectivity(&self) -> f64 {
        self.0.connectivity
    }

    #[getter]
    fn activity(&self) -> f64 {
        self.0.activity
    }

    #[getter]
    fn n_levels(&self) -> u16 {
        self.0.n_levels
    }

    #[getter]
    fn model(&self) -> &'static str {
        self.0.model.label()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.0.seed = seed;
    }

    fn threshold(&self) -> f64 {
        self.0.threshold()
    }

    fn __repr__(&self) -> String {
        let c = &self.0;
        format!(
            "NetworkConfig(n_in={}, n_out={}, connectivity={}, activity={}, n_levels={}, model={:?}, seed={})",
            c.n_in,
            c.n_out,
            c.connectivity,
            c.activity,
            c.n_levels,
            c.model.label(),
            c.seed
        )
    }
}

#[pyclass(name = "DeviceParams", from_py_object)]
#[derive(Clone)]
struct PyDeviceParams(metasyn::DeviceParams);

#[pymethods]
impl PyDeviceParams {
    #[new]
    #[pyo3(signature = (tau = None, g_off = None, rate = None))]
    fn new(tau: Option<f64>, g_off: Option<f64>, rate: Option<f64>) -> PyResult<Self> {
        let mut p = metasyn::DeviceParams::default();
        if let Some(t) = tau {
            p.tau = t;
        }
        if let Some(g) = g_off {
            p.g_off = g;
        }
        if let Some(k) = rate {
            p.k_off = k;
            p.k_on = -k;
        }
        p.validate().map_err(py_err)?;
        Ok(Self(p))
    }

    #[getter]
    fn g_on(&self) -> f64 {
        self.0.g_on
    }

    #[getter]
    fn g_off(&self) -> f64 {
        self.0.g_off
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.0.k_off
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau
    }
}

fn params_or_default(params: Option<PyDeviceParams>) -> metasyn::DeviceParams {
    params.map(|p| p.0).unwrap_or_default()
}

#[pyfunction]
#[pyo3(signature = (x, params = None))]
fn window(x: f64, params: Option<PyDeviceParams>) -> f64 {
    metasyn::device::window(x, &params_or_default(params))
}

#[pyfunction]
#[pyo3(signature = (x, v, params = None))]
fn state_derivative(x: f64, v: f64, params: Option<PyDeviceParams>) -> f64 {
    metasyn::device::state_derivative(x, v, &params_or_default(params))
}

#[pyfunction]
#[pyo3(signature = (x, params = None))]
fn conductance(x: f64, params: Option<PyDeviceParams>) -> f64 {
    metasyn::device::conductance(x, &params_or_default(params))
}

/// Rows of `(efficacy, metalevel, x_plateau, conductance_S)` in chain order.
#[pyfunction]
#[pyo3(signature = (n_levels = 3, params = None))]
fn calibrate_metastate_table(
    n_levels: u16,
    params: Option<PyDeviceParams>,
) -> PyResult<Vec<(u8, u16, f64, f64)>> {
    let p = params_or_default(params);
    let table = metasyn::device::calibrate_metastate_table(&p, n_levels).map_err(py_err)?;
    Ok(table
        .plateaus()
        .iter()
        .map(|&(m, x)| {
            (
                m.efficacy_value(),
                m.metalevel(),
                x,
                metasyn::device::conductance(x, &p),
            )
        })
        .collect())
}

/// `(learning, mean)` accuracy lists of one ideal-network lifetime.
#[pyfunction]
fn run_lifetime(cfg: &PyNetworkConfig, n_patterns: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let t = metasyn::network::run_lifetime(&cfg.0, n_patterns).map_err(py_err)?;
    Ok((t.learning, t.mean))
}

/// Same protocol on the crossbar with programming noise.
#[pyfunction]
#[pyo3(signature = (cfg, n_patterns, params = None, noise_sigma = 0.25))]
fn run_lifetime_hw(
    cfg: &PyNetworkConfig,
    n_patterns: usize,
    params: Option<PyDeviceParams>,
    noise_sigma: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let p = params_or_default(params);
    let table =
        metasyn::device::calibrate_metastate_table(&p, cfg.0.effective_levels()).map_err(py_err)?;
    let noise = metasyn::NoiseModel::gaussian(noise_sigma, 0).map_err(py_err)?;
    let t = metasyn::crossbar::run_lifetime_hw(
        &cfg.0,
        n_patterns,
        &p,
        &table,
        &ComparatorSetup::default(),
        &noise,
    )
    .map_err(py_err)?;
    Ok((t.learning, t.mean))
}

/// 1-based index of the first mean accuracy below `threshold`.
#[pyfunction]
#[pyo3(signature = (mean, threshold = 0.75))]
fn threshold_crossing(mean: Vec<f64>, threshold: f64) -> Option<usize> {
    let trace = metasyn::AccuracyTrace {
        learning: mean.clone(),
        mean,
    };
    metasyn::experiment::threshold_crossing(&trace, threshold)
}

/// Crossing statistics per model: `(label, crossing_mean, crossing_std,
/// ratio_vs_binary)`.
#[pyfunction]
#[pyo3(signature = (cfg, seeds = 10, n_patterns = 100, hardware = false))]
fn compare(
    cfg: &PyNetworkConfig,
    seeds: u64,
    n_patterns: usize,
    hardware: bool,
) -> PyResult<Vec<(String, f64, f64, Option<f64>)>> {
    let spec = ExperimentSpec {
        base: cfg.0,
        variant: Variant::CompareModels,
        seeds: (cfg.0.seed..cfg.0.seed + seeds).collect(),
        n_patterns,
        hardware,
        ..ExperimentSpec::default()
    };
    let r = metasyn::experiment::run_comparison(&spec).map_err(py_err)?;
    Ok(r.summary
        .iter()
        .map(|s| {
            (
                s.realization.label(),
                s.crossing_mean,
                s.crossing_std,
                s.ratio_vs_binary,
            )
        })
        .collect())
}

/// Runs a CLI subcommand on a config document and returns the written files.
#[pyfunction]
#[pyo3(signature = (command, config = "", output_dir = None, seed_offset = 0))]
fn execute(
    command: &str,
    config: &str,
    output_dir: Option<PathBuf>,
    seed_offset: u64,
) -> PyResult<Vec<PathBuf>> {
    let cmd = match command {
        "run" => Command::Run,
        "compare" => Command::Compare,
        "sweep-size" => Command::SweepSize,
        "sweep-cf" => Command::SweepCf,
        "calibrate-device" => Command::CalibrateDevice,
        "dump-trace" => Command::DumpTrace,
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    };
    let mut cfg = metasyn::config::parse_config(config).map_err(py_err)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    metasyn::cli::execute(cmd, &cfg, seed_offset).map_err(py_err)
}

#[pymodule]
fn metasyn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMetaState>()?;
    m.add_class::<PyNetworkConfig>()?;
    m.add_class::<PyDeviceParams>()?;
    m.add_function(wrap_pyfunction!(transition, m)?)?;
    m.add_function(wrap_pyfunction!(window, m)?)?;
    m.add_function(wrap_pyfunction!(state_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(conductance, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_metastate_table, m)?)?;
    m.add_function(wrap_pyfunction!(run_lifetime, m)?)?;
    m.add_function(wrap_pyfunction!(run_lifetime_hw, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_crossing, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(execute, m)?)?;
    Ok(())
}
