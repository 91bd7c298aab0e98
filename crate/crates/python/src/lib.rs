//! Python bindings. All quantities are SI: rates and detunings in s⁻¹,
//! lengths in m, powers in W.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use ramanmag_core as core;
use ramanmag_core::magnetometry::default_detuning_grid;
use ramanmag_sweep as sweep;

fn core_err(e: core::Error) -> PyErr {
    match e {
        core::Error::InvalidParameter { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn sweep_err(e: sweep::SweepError) -> PyErr {
    if e.exit_code() == 2 {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn convention(name: &str) -> PyResult<core::RabiConvention> {
    match name {
        "full" => Ok(core::RabiConvention::FullCoupling),
        "half" => Ok(core::RabiConvention::HalfCoupling),
        other => Err(PyValueError::new_err(format!(
            "convention must be 'full' or 'half', got '{other}'"
        ))),
    }
}

/// Internal NV transition rates (s⁻¹).
#[pyclass(name = "NVRates", from_py_object)]
#[derive(Clone)]
pub struct PyRates {
    #[pyo3(get, set)]
    r31: f64,
    #[pyo3(get, set)]
    r42: f64,
    #[pyo3(get, set)]
    r35: f64,
    #[pyo3(get, set)]
    r45: f64,
    #[pyo3(get, set)]
    r51: f64,
    #[pyo3(get, set)]
    r52: f64,
}

impl PyRates {
    fn inner(&self) -> core::NVRates {
        core::NVRates {
            r31: self.r31,
            r42: self.r42,
            r35: self.r35,
            r45: self.r45,
            r51: self.r51,
            r52: self.r52,
        }
    }
}

#[pymethods]
impl PyRates {
    #[new]
    #[pyo3(signature = (r31=None, r42=None, r35=None, r45=None, r51=None, r52=None))]
    fn new(
        r31: Option<f64>,
        r42: Option<f64>,
        r35: Option<f64>,
        r45: Option<f64>,
        r51: Option<f64>,
        r52: Option<f64>,
    ) -> Self {
        let d = core::NVRates::default();
        Self {
            r31: r31.unwrap_or(d.r31),
            r42: r42.unwrap_or(d.r42),
            r35: r35.unwrap_or(d.r35),
            r45: r45.unwrap_or(d.r45),
            r51: r51.unwrap_or(d.r51),
            r52: r52.unwrap_or(d.r52),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "NVRates(r31={:e}, r42={:e}, r35={:e}, r45={:e}, r51={:e}, r52={:e})",
            self.r31, self.r42, self.r35, self.r45, self.r51, self.r52
        )
    }
}

/// Microwave drive: Rabi frequency, detuning and ground-state dephasing (s⁻¹).
#[pyclass(name = "MicrowaveDrive", from_py_object)]
#[derive(Clone)]
pub struct PyDrive {
    inner: core::MicrowaveDrive,
}

#[pymethods]
impl PyDrive {
    #[new]
    #[pyo3(signature = (rabi, detuning=0.0, dephasing=1.0e6, convention="full"))]
    fn new(rabi: f64, detuning: f64, dephasing: f64, convention: &str) -> PyResult<Self> {
        let inner = core::MicrowaveDrive::new(rabi, detuning, dephasing)
            .with_convention(self::convention(convention)?);
        inner.validate().map_err(core_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn rabi(&self) -> f64 {
        self.inner.rabi
    }

    #[getter]
    fn detuning(&self) -> f64 {
        self.inner.detuning
    }

    #[getter]
    fn dephasing(&self) -> f64 {
        self.inner.dephasing
    }

    #[getter]
    fn convention(&self) -> &'static str {
        match self.inner.convention {
            core::RabiConvention::FullCoupling => "full",
            core::RabiConvention::HalfCoupling => "half",
        }
    }

    /// Copy with a different detuning.
    fn with_detuning(&self, detuning: f64) -> Self {
        Self {
            inner: self.inner.with_detuning(detuning),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "MicrowaveDrive(rabi={:e}, detuning={:e}, dephasing={:e}, convention='{}')",
            self.inner.rabi,
            self.inner.detuning,
            self.inner.dephasing,
            self.convention()
        )
    }
}

/// Diamond Raman laser cavity with its NV ensemble.
#[pyclass(name = "CavitySystem", from_py_object)]
#[derive(Clone)]
pub struct PyCavity {
    inner: core::CavitySystem,
}

#[pymethods]
impl PyCavity {
    #[new]
    #[pyo3(signature = (
        loss_rate=None, length=None, waist_radius=None, refractive_index=None, raman_gain=None,
        pump_frequency=None, raman_frequency=None, cross_section=None, density=None,
        output_coupling="total"
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        loss_rate: Option<f64>,
        length: Option<f64>,
        waist_radius: Option<f64>,
        refractive_index: Option<f64>,
        raman_gain: Option<f64>,
        pump_frequency: Option<f64>,
        raman_frequency: Option<f64>,
        cross_section: Option<f64>,
        density: Option<f64>,
        output_coupling: &str,
    ) -> PyResult<Self> {
        let d = core::CavitySystem::default();
        let inner = core::CavitySystem {
            length: length.unwrap_or(d.length),
            waist_radius: waist_radius.unwrap_or(d.waist_radius),
            loss_rate: loss_rate.unwrap_or(d.loss_rate),
            refractive_index: refractive_index.unwrap_or(d.refractive_index),
            raman_gain: raman_gain.unwrap_or(d.raman_gain),
            pump_frequency: pump_frequency.unwrap_or(d.pump_frequency),
            raman_frequency: raman_frequency.unwrap_or(d.raman_frequency),
            ensemble: core::NVEnsemble {
                cross_section: cross_section.unwrap_or(d.ensemble.cross_section),
                density: density.unwrap_or(d.ensemble.density),
            },
            output_coupling: match output_coupling {
                "total" => core::OutputCoupling::Total,
                "single_mirror" => core::OutputCoupling::SingleMirror,
                other => {
                    return Err(PyValueError::new_err(format!(
                        "output_coupling must be 'total' or 'single_mirror', got '{other}'"
                    )))
                }
            },
        };
        inner.validate().map_err(core_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn loss_rate(&self) -> f64 {
        self.inner.loss_rate
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length
    }

    #[getter]
    fn waist_radius(&self) -> f64 {
        self.inner.waist_radius
    }

    #[getter]
    fn density(&self) -> f64 {
        self.inner.ensemble.density
    }

    fn beam_area(&self) -> f64 {
        self.inner.beam_area()
    }

    fn finesse(&self) -> f64 {
        core::finesse(&self.inner)
    }

    /// Copy with a different cavity loss rate κ_r.
    fn with_loss_rate(&self, loss_rate: f64) -> Self {
        Self {
            inner: self.inner.with_loss_rate(loss_rate),
        }
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "CavitySystem(loss_rate={:e}, length={:e}, waist_radius={:e}, density={:e})",
            c.loss_rate, c.length, c.waist_radius, c.ensemble.density
        )
    }
}

fn state_dict<'py>(py: Python<'py>, s: &core::DensityMatrixState) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("populations", s.pop.to_vec())?;
    d.set_item("coherence", s.coh12)?;
    d.set_item("ground_population", core::ground_population(s))?;
    Ok(d)
}

fn rates_or_default(rates: Option<PyRates>) -> core::NVRates {
    rates.map(|r| r.inner()).unwrap_or_default()
}

/// Steady state of the five-level NV model at pump rate Λ_p (s⁻¹).
#[pyfunction]
#[pyo3(signature = (drive, pump_rate, rates=None))]
fn steady_state<'py>(
    py: Python<'py>,
    drive: PyDrive,
    pump_rate: f64,
    rates: Option<PyRates>,
) -> PyResult<Bound<'py, PyDict>> {
    let s = core::steady_state(
        &rates_or_default(rates),
        &drive.inner.with_pump_rate(pump_rate),
    )
    .map_err(core_err)?;
    state_dict(py, &s)
}

/// Integrate the master equation from `populations` (5 values) and the
/// ground coherence for `duration` seconds.
#[pyfunction]
#[pyo3(signature = (drive, pump_rate, populations, duration, coherence=Complex64::new(0.0, 0.0), rates=None))]
fn time_evolve<'py>(
    py: Python<'py>,
    drive: PyDrive,
    pump_rate: f64,
    populations: Vec<f64>,
    duration: f64,
    coherence: Complex64,
    rates: Option<PyRates>,
) -> PyResult<Bound<'py, PyDict>> {
    let pop: [f64; 5] = populations
        .try_into()
        .map_err(|_| PyValueError::new_err("populations must have 5 entries"))?;
    let init = core::DensityMatrixState {
        pop,
        coh12: coherence,
    };
    let s = core::time_evolve(
        &rates_or_default(rates),
        &drive.inner.with_pump_rate(pump_rate),
        &init,
        duration,
        &core::StepControl::default(),
    )
    .map_err(core_err)?;
    state_dict(py, &s)
}

/// Threshold pump power (W).
#[pyfunction]
#[pyo3(signature = (cavity, drive, rates=None))]
fn threshold_pump(cavity: PyCavity, drive: PyDrive, rates: Option<PyRates>) -> PyResult<f64> {
    core::threshold_pump(&cavity.inner, &rates_or_default(rates), &drive.inner).map_err(core_err)
}

/// Threshold shift (%) between Δ_g = 200 MHz and resonance.
#[pyfunction]
#[pyo3(signature = (cavity, drive, rates=None))]
fn threshold_shift_percent(
    cavity: PyCavity,
    drive: PyDrive,
    rates: Option<PyRates>,
) -> PyResult<f64> {
    core::threshold_shift_percent(&cavity.inner, &rates_or_default(rates), &drive.inner)
        .map_err(core_err)
}

/// Laser output over ascending pump powers (W). Returns a dict of lists.
#[pyfunction]
#[pyo3(signature = (cavity, drive, pump_powers, rates=None))]
fn laser_curve<'py>(
    py: Python<'py>,
    cavity: PyCavity,
    drive: PyDrive,
    pump_powers: Vec<f64>,
    rates: Option<PyRates>,
) -> PyResult<Bound<'py, PyDict>> {
    let rates = rates_or_default(rates);
    let points = py
        .detach(|| core::laser_curve(&cavity.inner, &rates, &drive.inner, &pump_powers))
        .map_err(core_err)?;
    let d = PyDict::new(py);
    d.set_item(
        "pump_power",
        points.iter().map(|p| p.pump_power).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "output_power",
        points.iter().map(|p| p.output_power).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "intracavity_intensity",
        points
            .iter()
            .map(|p| p.intracavity_intensity)
            .collect::<Vec<_>>(),
    )?;
    d.set_item("beta", points.iter().map(|p| p.beta).collect::<Vec<_>>())?;
    d.set_item(
        "pump_rate",
        points.iter().map(|p| p.pump_rate).collect::<Vec<_>>(),
    )?;
    Ok(d)
}

fn pump_for(
    cavity: &PyCavity,
    rates: &core::NVRates,
    drive: &PyDrive,
    pump_power: Option<f64>,
) -> PyResult<f64> {
    let rule = match pump_power {
        Some(p) => core::PumpRule::Fixed(p),
        None => core::PumpRule::MwOffThreshold,
    };
    rule.resolve(&cavity.inner, rates, &drive.inner)
        .map_err(core_err)
}

/// Output versus detuning at fixed pump power (default: the microwave-off
/// threshold). Returns `(detunings, outputs, pump_power)`.
#[pyfunction]
#[pyo3(signature = (cavity, drive, pump_power=None, detunings=None, rates=None))]
fn response_vs_detuning(
    py: Python<'_>,
    cavity: PyCavity,
    drive: PyDrive,
    pump_power: Option<f64>,
    detunings: Option<Vec<f64>>,
    rates: Option<PyRates>,
) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let rates = rates_or_default(rates);
    let pump = pump_for(&cavity, &rates, &drive, pump_power)?;
    let grid = detunings.unwrap_or_else(default_detuning_grid);
    let curve = py
        .detach(|| core::response_vs_detuning(&cavity.inner, &rates, &drive.inner, pump, &grid))
        .map_err(core_err)?;
    Ok((curve.detunings, curve.outputs, pump))
}

/// Shot-noise-limited sensitivity. Returns a dict with `eta_min` (T/√Hz),
/// `detuning_opt`, `field_opt` and the per-detuning `eta` curve.
#[pyfunction]
#[pyo3(signature = (cavity, drive, pump_power=None, detunings=None, detection_efficiency=1.0, rates=None))]
fn sensitivity<'py>(
    py: Python<'py>,
    cavity: PyCavity,
    drive: PyDrive,
    pump_power: Option<f64>,
    detunings: Option<Vec<f64>>,
    detection_efficiency: f64,
    rates: Option<PyRates>,
) -> PyResult<Bound<'py, PyDict>> {
    let rates = rates_or_default(rates);
    let pump = pump_for(&cavity, &rates, &drive, pump_power)?;
    let grid = detunings.unwrap_or_else(default_detuning_grid);
    let opts = core::SensitivityOptions {
        detection_efficiency,
        ..Default::default()
    };
    let res = py
        .detach(|| {
            let curve =
                core::response_vs_detuning(&cavity.inner, &rates, &drive.inner, pump, &grid)?;
            core::sensitivity_curve_with(&curve, &opts)
        })
        .map_err(core_err)?;
    let d = PyDict::new(py);
    d.set_item("eta_min", res.eta_min)?;
    d.set_item("detuning_opt", res.detuning_opt)?;
    d.set_item("field_opt", res.field_opt)?;
    d.set_item("pump_power", pump)?;
    d.set_item(
        "detuning",
        res.curve.iter().map(|p| p.detuning).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "output_power",
        res.curve.iter().map(|p| p.output_power).collect::<Vec<_>>(),
    )?;
    d.set_item("eta", res.curve.iter().map(|p| p.eta).collect::<Vec<_>>())?;
    Ok(d)
}

type SensitivityRows = (Vec<(f64, Option<f64>)>, Option<usize>);

/// η_min over a grid of Rabi frequencies, pumping at the microwave-off
/// threshold. Returns a list of `(rabi, eta_min or None)` and the best index.
#[pyfunction]
#[pyo3(signature = (cavity, rabi_grid, dephasing=1.0e6, rates=None))]
fn optimize_min_sensitivity(
    py: Python<'_>,
    cavity: PyCavity,
    rabi_grid: Vec<f64>,
    dephasing: f64,
    rates: Option<PyRates>,
) -> PyResult<SensitivityRows> {
    let rates = rates_or_default(rates);
    let table = py
        .detach(|| {
            core::optimize_min_sensitivity(
                &cavity.inner,
                &rates,
                &core::MicrowaveDrive::new(0.0, 0.0, dephasing),
                &rabi_grid,
                core::PumpRule::MwOffThreshold,
                &default_detuning_grid(),
                &Default::default(),
            )
        })
        .map_err(core_err)?;
    let rows = table
        .rows
        .iter()
        .map(|r| (r.rabi, r.result.as_ref().map(|s| s.eta_min)))
        .collect();
    Ok((rows, table.best))
}

/// JSON text of a built-in figure preset.
#[pyfunction]
fn preset_config(name: &str) -> PyResult<String> {
    sweep::preset_json(name).map_err(sweep_err)
}

/// Run a JSON sweep config and write CSV, summary and manifest into
/// `out_dir`. Returns a dict with the file paths and the failed task count.
#[pyfunction]
#[pyo3(signature = (config_json, out_dir, workers=None))]
fn run_config<'py>(
    py: Python<'py>,
    config_json: &str,
    out_dir: PathBuf,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = sweep::parse_config(config_json).map_err(sweep_err)?;
    let workers = workers
        .or(cfg.workers)
        .unwrap_or_else(sweep::default_workers);
    let out = py
        .detach(|| sweep::run(&cfg, &out_dir, workers))
        .map_err(sweep_err)?;
    let d = PyDict::new(py);
    d.set_item("csv", out.csv)?;
    d.set_item("summary", out.summary)?;
    d.set_item("manifest", out.manifest_path)?;
    d.set_item("failed", out.manifest.failed())?;
    Ok(d)
}

#[pymodule(name = "ramanmag")]
fn ramanmag_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("INV_GAMMA_E", core::constants::INV_GAMMA_E)?;
    m.add_class::<PyRates>()?;
    m.add_class::<PyDrive>()?;
    m.add_class::<PyCavity>()?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(time_evolve, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_pump, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_shift_percent, m)?)?;
    m.add_function(wrap_pyfunction!(laser_curve, m)?)?;
    m.add_function(wrap_pyfunction!(response_vs_detuning, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_min_sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
