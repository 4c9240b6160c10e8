//! Python bindings for `lte_mlb`.
//!
//! Scenario configuration crosses the boundary as JSON: every entry point
//! that takes a scenario accepts an optional `config` (JSON text or a dict
//! with the same keys as the Rust `ScenarioConfig`) plus keyword overrides
//! that are merged on top, nested dicts included. The merged document is
//! validated by the core crate, so unknown or bad keys are reported by name.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::{Map, Value};

use lte_mlb::handover::HandoverEvent;
use lte_mlb::matrix::AggregateCell;
use lte_mlb::mlb::{self, MlbPhase};
use lte_mlb::radio;
use lte_mlb::scheduler::{self, Flow, McsThresholds};
use lte_mlb::sim::{run_with, KpiRecord};
use lte_mlb::{Algorithm, BetaVariant, MlbThresholds, PathLossParams, RunOptions, ScenarioConfig};

create_exception!(lte_mlb_py, SimulationError, PyValueError);

fn to_py(e: lte_mlb::Error) -> PyErr {
    SimulationError::new_err(e.to_string())
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

/// Builds a validated scenario from optional JSON text plus a JSON object
/// of overrides.
pub fn scenario_from_json(
    config: Option<&str>,
    overrides: Value,
) -> lte_mlb::Result<ScenarioConfig> {
    let mut doc = match config {
        Some(text) => serde_json::from_str(text)?,
        None => Value::Object(Map::new()),
    };
    merge(&mut doc, overrides);
    ScenarioConfig::from_json(&doc.to_string())
}

fn py_to_json(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(text) = obj.extract::<String>() {
        return Ok(text);
    }
    py.import("json")?.call_method1("dumps", (obj,))?.extract()
}

fn scenario(
    py: Python<'_>,
    config: Option<&Bound<'_, PyAny>>,
    overrides: Option<&Bound<'_, PyDict>>,
) -> PyResult<ScenarioConfig> {
    let text = config.map(|c| py_to_json(py, c)).transpose()?;
    let patch = match overrides {
        Some(kw) => {
            let json = py_to_json(py, kw.as_any())?;
            serde_json::from_str(&json).map_err(|e| SimulationError::new_err(e.to_string()))?
        }
        None => Value::Object(Map::new()),
    };
    scenario_from_json(text.as_deref(), patch).map_err(to_py)
}

fn parse<T: std::str::FromStr<Err = lte_mlb::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

fn thresholds(th_pre: f64, th_avail: f64, th_post: f64) -> PyResult<MlbThresholds> {
    MlbThresholds::new(th_pre, th_avail, th_post).map_err(to_py)
}

fn kpi_dict<'py>(py: Python<'py>, k: &KpiRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("scenario", &k.scenario)?;
    d.set_item("algorithm", k.algorithm.as_str())?;
    d.set_item("beta_variant", k.beta_variant.as_str())?;
    d.set_item("ue_count", k.ue_count)?;
    d.set_item("seed", k.seed)?;
    d.set_item("ticks", k.ticks)?;
    d.set_item("duration_s", k.duration_s)?;
    d.set_item("throughput_mbps", k.throughput_mbps)?;
    d.set_item("loss_ratio", k.loss_ratio)?;
    d.set_item("ho_count", k.ho_count)?;
    d.set_item("mlb_induced_ho_count", k.mlb_induced_ho_count)?;
    d.set_item("control_messages", k.control_messages)?;
    d.set_item("offered_bits", k.offered_bits)?;
    d.set_item("served_bits", k.served_bits)?;
    d.set_item("lost_bits", k.lost_bits)?;
    d.set_item("sector_throughput_mbps", k.sector_throughput_mbps.clone())?;
    Ok(d)
}

fn handover_dict<'py>(py: Python<'py>, e: &HandoverEvent) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("timestamp", e.timestamp)?;
    d.set_item("ue_id", e.ue_id)?;
    d.set_item("source", e.source)?;
    d.set_item("target", e.target)?;
    d.set_item("cause", e.cause.as_str())?;
    d.set_item("effective_hysteresis_used", e.hysteresis_db)?;
    Ok(d)
}

fn cell_dict<'py>(py: Python<'py>, c: &AggregateCell) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("scenario", &c.scenario)?;
    d.set_item("algorithm", c.algorithm.as_str())?;
    d.set_item("ue_count", c.ue_count)?;
    d.set_item("runs", c.runs)?;
    d.set_item("throughput_mbps", c.throughput_mean)?;
    d.set_item("throughput_std", c.throughput_std)?;
    d.set_item("loss_ratio", c.loss_mean)?;
    d.set_item("loss_std", c.loss_std)?;
    d.set_item("ho_count", c.ho_mean)?;
    d.set_item("ho_std", c.ho_std)?;
    Ok(d)
}

fn output_dict<'py>(py: Python<'py>, out: &lte_mlb::RunOutput) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("kpi", kpi_dict(py, &out.kpi)?)?;
    let hos = PyList::empty(py);
    for e in &out.handovers {
        hos.append(handover_dict(py, e)?)?;
    }
    d.set_item("handovers", hos)?;
    let c = &out.conservation;
    let cons = PyDict::new(py);
    cons.set_item("max_relative_error", c.max_relative_error)?;
    cons.set_item("max_granted_prbs", c.max_granted_prbs)?;
    cons.set_item("max_sector_throughput_mbps", c.max_sector_throughput_mbps)?;
    cons.set_item("inactive_table_violations", c.inactive_table_violations)?;
    d.set_item("conservation", cons)?;
    Ok(d)
}

/// Path loss in dB at `distance` metres.
#[pyfunction]
#[pyo3(signature = (distance, reference_loss_db=34.5, exponent=3.5, reference_distance_m=1.0))]
fn path_loss(
    distance: f64,
    reference_loss_db: f64,
    exponent: f64,
    reference_distance_m: f64,
) -> PyResult<f64> {
    let params = PathLossParams {
        reference_loss_db,
        exponent,
        reference_distance_m,
        ..PathLossParams::default()
    };
    params.validate().map_err(to_py)?;
    radio::path_loss(distance, &params, 0.0).map_err(to_py)
}

/// Sector antenna gain in dB for an offset from boresight in degrees.
#[pyfunction]
fn antenna_gain(bearing_offset_deg: f64) -> f64 {
    radio::antenna_gain(bearing_offset_deg)
}

#[pyfunction]
fn a3_condition(rsrp_serving: f64, rsrp_neighbor: f64, hysteresis: f64) -> bool {
    lte_mlb::handover::a3_condition(rsrp_serving, rsrp_neighbor, hysteresis)
}

#[pyfunction]
#[pyo3(signature = (ratio, algorithm="mlb1", beta_variant="literal", th_pre=0.2, th_avail=0.3, th_post=0.4))]
fn alpha(
    ratio: f64,
    algorithm: &str,
    beta_variant: &str,
    th_pre: f64,
    th_avail: f64,
    th_post: f64,
) -> PyResult<f64> {
    let th = thresholds(th_pre, th_avail, th_post)?;
    mlb::alpha(ratio, &th, parse(algorithm)?, parse(beta_variant)?).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (ratio, algorithm="mlb1", beta_variant="literal", th_pre=0.2, th_avail=0.3, th_post=0.4))]
fn beta(
    ratio: f64,
    algorithm: &str,
    beta_variant: &str,
    th_pre: f64,
    th_avail: f64,
    th_post: f64,
) -> PyResult<f64> {
    let th = thresholds(th_pre, th_avail, th_post)?;
    mlb::beta(ratio, &th, parse(algorithm)?, parse(beta_variant)?).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (alpha, base_db=3.0))]
fn effective_hysteresis(alpha: f64, base_db: f64) -> f64 {
    mlb::effective_hysteresis(base_db, alpha)
}

#[pyfunction]
fn mcs_from_sinr(sinr_db: f64) -> u8 {
    scheduler::mcs_from_sinr(sinr_db, &McsThresholds::default())
}

#[pyfunction]
fn prbs_required(offered_rate_bps: f64, mcs: u8) -> PyResult<u32> {
    let flow = Flow {
        ue_id: 0,
        offered_rate_bps,
        serving_sector: 0,
    };
    scheduler::prbs_required(&flow, mcs, 0.01).map_err(to_py)
}

/// Full default scenario as JSON text.
#[pyfunction]
fn default_config() -> String {
    ScenarioConfig::default().to_json()
}

/// Runs one scenario; returns `{"kpi", "handovers", "conservation"}`.
#[pyfunction]
#[pyo3(signature = (config=None, **overrides))]
fn run<'py>(
    py: Python<'py>,
    config: Option<&Bound<'py, PyAny>>,
    overrides: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = scenario(py, config, overrides)?;
    let out = py
        .detach(|| run_with(&cfg, RunOptions::summary()))
        .map_err(to_py)?;
    output_dict(py, &out)
}

/// Runs algorithms x UE counts x seeds; returns `{"runs": [...], "cells": [...]}`.
#[pyfunction]
#[pyo3(signature = (algorithms, ue_counts, seeds, config=None, **overrides))]
fn run_matrix<'py>(
    py: Python<'py>,
    algorithms: Vec<String>,
    ue_counts: Vec<usize>,
    seeds: Vec<u64>,
    config: Option<&Bound<'py, PyAny>>,
    overrides: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let base = scenario(py, config, overrides)?;
    let algorithms = algorithms
        .iter()
        .map(|a| parse::<Algorithm>(a))
        .collect::<PyResult<Vec<_>>>()?;
    let m = py
        .detach(|| lte_mlb::run_matrix(&base, &algorithms, &ue_counts, &seeds))
        .map_err(to_py)?;
    let runs = PyList::empty(py);
    for r in &m.runs {
        runs.append(kpi_dict(py, &r.kpi)?)?;
    }
    let cells = PyList::empty(py);
    for c in &m.cells {
        cells.append(cell_dict(py, c)?)?;
    }
    let d = PyDict::new(py);
    d.set_item("runs", runs)?;
    d.set_item("cells", cells)?;
    Ok(d)
}

/// Step-by-step access to one scenario.
#[pyclass(module = "lte_mlb_py")]
struct Simulation {
    inner: Option<lte_mlb::Simulation>,
}

impl Simulation {
    fn sim(&self) -> PyResult<&lte_mlb::Simulation> {
        self.inner
            .as_ref()
            .ok_or_else(|| SimulationError::new_err("simulation already finished"))
    }

    fn sim_mut(&mut self) -> PyResult<&mut lte_mlb::Simulation> {
        self.inner
            .as_mut()
            .ok_or_else(|| SimulationError::new_err("simulation already finished"))
    }
}

#[pymethods]
impl Simulation {
    #[new]
    #[pyo3(signature = (config=None, **overrides))]
    fn new(
        py: Python<'_>,
        config: Option<&Bound<'_, PyAny>>,
        overrides: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Self> {
        let cfg = scenario(py, config, overrides)?;
        let inner = lte_mlb::Simulation::new(cfg, RunOptions::summary()).map_err(to_py)?;
        Ok(Self { inner: Some(inner) })
    }

    /// Advances one tick; returns False once the run is over.
    fn step(&mut self) -> PyResult<bool> {
        self.sim_mut()?.step().map_err(to_py)
    }

    /// Advances up to `n` ticks; returns how many were taken.
    fn advance(&mut self, n: u64) -> PyResult<u64> {
        let sim = self.sim_mut()?;
        let mut taken = 0;
        while taken < n && sim.step().map_err(to_py)? {
            taken += 1;
        }
        Ok(taken)
    }

    #[getter]
    fn tick(&self) -> PyResult<u64> {
        Ok(self.sim()?.tick())
    }

    #[getter]
    fn total_ticks(&self) -> PyResult<u64> {
        Ok(self.sim()?.total_ticks())
    }

    #[getter]
    fn time(&self) -> PyResult<f64> {
        Ok(self.sim()?.time())
    }

    #[getter]
    fn is_finished(&self) -> PyResult<bool> {
        Ok(self.sim()?.is_finished())
    }

    #[getter]
    fn config(&self) -> PyResult<String> {
        Ok(self.sim()?.config().to_json())
    }

    /// `[(ue_id, x, y, serving_sector), ...]`
    fn ues(&self) -> PyResult<Vec<(usize, f64, f64, usize)>> {
        Ok(self
            .sim()?
            .ues()
            .iter()
            .map(|u| (u.ue_id, u.position.x, u.position.y, u.serving_sector))
            .collect())
    }

    /// Effective hysteresis (dB) `serving` currently applies toward `neighbor`.
    fn hysteresis(&self, serving: usize, neighbor: usize) -> PyResult<f64> {
        let table = self.sim()?.hysteresis_table();
        if serving >= table.sectors() || neighbor >= table.sectors() {
            return Err(SimulationError::new_err(format!(
                "sector index out of range (0..{})",
                table.sectors()
            )));
        }
        Ok(table.get(serving, neighbor))
    }

    /// Controller phase per sector, "active" or "inactive".
    fn mlb_phases(&self) -> PyResult<Vec<&'static str>> {
        Ok(self
            .sim()?
            .mlb_states()
            .iter()
            .map(|s| match s.phase {
                MlbPhase::Active => "active",
                MlbPhase::Inactive => "inactive",
            })
            .collect())
    }

    fn handover_count(&self) -> PyResult<usize> {
        Ok(self.sim()?.handovers().len())
    }

    /// Runs to the end and returns the same dict as `run()`. The object
    /// cannot be stepped afterwards.
    fn finish<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let mut sim = self
            .inner
            .take()
            .ok_or_else(|| SimulationError::new_err("simulation already finished"))?;
        sim.run_to_end().map_err(to_py)?;
        output_dict(py, &sim.finish())
    }
}

#[pymodule]
fn lte_mlb_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SimulationError", m.py().get_type::<SimulationError>())?;
    m.add("ALGORITHMS", Algorithm::ALL.map(|a| a.as_str()).to_vec())?;
    m.add(
        "BETA_VARIANTS",
        vec![
            BetaVariant::Literal.as_str(),
            BetaVariant::Continuous.as_str(),
        ],
    )?;
    m.add_function(wrap_pyfunction!(path_loss, m)?)?;
    m.add_function(wrap_pyfunction!(antenna_gain, m)?)?;
    m.add_function(wrap_pyfunction!(a3_condition, m)?)?;
    m.add_function(wrap_pyfunction!(alpha, m)?)?;
    m.add_function(wrap_pyfunction!(beta, m)?)?;
    m.add_function(wrap_pyfunction!(effective_hysteresis, m)?)?;
    m.add_function(wrap_pyfunction!(mcs_from_sinr, m)?)?;
    m.add_function(wrap_pyfunction!(prbs_required, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_matrix, m)?)?;
    m.add_class::<Simulation>()?;
    Ok(())
}
