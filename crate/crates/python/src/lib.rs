//! Python bindings: configurations and presets, step-by-step simulations,
//! whole runs, the convergence study, the constitutive law and the
//! verification checks.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use limitfrac::constitutive::{self, MaterialParams, Model, SymTensor2};
use limitfrac::coupling::StepReport;
use limitfrac::driver::{self, RunConfig};
use limitfrac::postprocess;
use limitfrac::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidMaterial(_) | Error::UnknownPreset { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

type Tensor = (f64, f64, f64, f64);

fn tensor((xx, yy, xy, zz): Tensor) -> SymTensor2 {
    SymTensor2::with_zz(xx, yy, zz, xy)
}

fn untensor(t: SymTensor2) -> Tensor {
    (t.xx, t.yy, t.xy, t.zz)
}

/// A run configuration; keys are the dotted names accepted by `set`.
#[pyclass(name = "Config")]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyConfig {
            inner: RunConfig::parse(text).map_err(to_py)?,
        })
    }

    /// Sets one key, e.g. `cfg.set("mesh.global", "5")`.
    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(to_py)
    }

    fn render(&self) -> String {
        self.inner.render()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn model(&self) -> &'static str {
        self.inner.model().name()
    }

    fn __repr__(&self) -> String {
        format!("Config(name={:?}, model={})", self.inner.name, self.inner.model().name())
    }
}

/// Material parameters for the pointwise constitutive functions.
#[pyclass(name = "Material")]
struct PyMaterial {
    inner: MaterialParams,
}

#[pymethods]
impl PyMaterial {
    #[new]
    #[pyo3(signature = (lam, mu, alpha, beta, gc = 1.0, xi = 0.1, kappa = 0.0))]
    fn new(lam: f64, mu: f64, alpha: f64, beta: f64, gc: f64, xi: f64, kappa: f64) -> PyResult<Self> {
        let inner = MaterialParams {
            lambda: lam,
            mu,
            alpha,
            beta,
            gc,
            xi,
            kappa,
        };
        inner.validate().map_err(to_py)?;
        Ok(PyMaterial { inner })
    }

    /// Linear stress of the strain `(xx, yy, xy, zz)`.
    fn hooke(&self, eps: Tensor) -> Tensor {
        untensor(constitutive::hooke_stress(&tensor(eps), &self.inner))
    }

    fn compliance(&self, sigma: Tensor) -> Tensor {
        untensor(constitutive::compliance(&tensor(sigma), &self.inner))
    }

    /// Strain-limiting stress; raises if the strain is not admissible.
    fn stress_sl(&self, eps: Tensor) -> PyResult<Tensor> {
        constitutive::stress_sl(&tensor(eps), &self.inner).map(untensor).map_err(to_py)
    }

    fn strain_nl(&self, sigma: Tensor) -> PyResult<Tensor> {
        constitutive::strain_nl(&tensor(sigma), &self.inner).map(untensor).map_err(to_py)
    }

    fn monitor(&self, eps: Tensor) -> f64 {
        constitutive::ellipticity_monitor(&tensor(eps), &self.inner)
    }
}

fn report_dict<'py>(py: Python<'py>, r: &StepReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("step", r.step)?;
    d.set_item("time", r.time)?;
    d.set_item("load", r.load)?;
    d.set_item("stagger_iters", r.stagger_iters)?;
    d.set_item("mech_newton", r.mech_newton_total)?;
    d.set_item("pf_newton", r.pf_newton_total)?;
    d.set_item("max_monitor", r.max_monitor)?;
    Ok(d)
}

/// A simulation advanced one committed timestep at a time.
#[pyclass(name = "Simulation", unsendable)]
struct PySimulation {
    inner: limitfrac::coupling::Simulation,
}

#[pymethods]
impl PySimulation {
    #[new]
    fn new(config: &PyConfig) -> PyResult<Self> {
        Ok(PySimulation {
            inner: driver::build_simulation(&config.inner).map_err(to_py)?,
        })
    }

    /// Runs one staggered timestep and returns its report.
    fn step<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = self.inner.staggered_step().map_err(to_py)?;
        report_dict(py, &r)
    }

    #[getter]
    fn step_index(&self) -> usize {
        self.inner.state.step
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.inner.coupling.n_steps
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.state.time
    }

    #[getter]
    fn model(&self) -> &'static str {
        self.inner.model().name()
    }

    /// Vertex coordinates, one `(x, y)` per vertex.
    #[getter]
    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.disc.mesh.vertices().iter().map(|p| (p[0], p[1])).collect()
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.inner.disc.mesh.n_cells()
    }

    /// Displacement, interleaved `[u_x, u_y]` per vertex.
    #[getter]
    fn u(&self) -> Vec<f64> {
        self.inner.state.u.clone()
    }

    #[getter]
    fn phi(&self) -> Vec<f64> {
        self.inner.state.phi.clone()
    }

    /// `(bulk, crack, total)` energies of the current state.
    fn energies(&self) -> PyResult<(f64, f64, f64)> {
        let s = &self.inner;
        let e = postprocess::energy_record(s.state.step, s.state.time, &s.disc.mesh, &s.state.u, &s.state.phi, s.model(), &s.material)
            .map_err(to_py)?;
        Ok((e.bulk, e.crack, e.total))
    }

    fn write_vtk(&self, path: PathBuf) -> PyResult<()> {
        let s = &self.inner;
        let title = format!("step {} t={:e}", s.state.step, s.state.time);
        postprocess::export_vtk(&path, &s.disc.mesh, &s.disc.quad, &s.state.u, &s.state.phi, s.model(), &s.material, &title)
            .map_err(to_py)
    }
}

#[pyfunction]
fn preset_names() -> Vec<String> {
    driver::preset_names()
}

#[pyfunction]
fn preset(name: &str) -> PyResult<PyConfig> {
    Ok(PyConfig {
        inner: driver::preset(name).map_err(to_py)?,
    })
}

/// Runs every timestep; writes the usual files when `out` is given.
#[pyfunction]
#[pyo3(signature = (config, out = None))]
fn run<'py>(py: Python<'py>, config: &PyConfig, out: Option<PathBuf>) -> PyResult<Bound<'py, PyDict>> {
    let o = driver::run(&config.inner, out.as_deref()).map_err(to_py)?;
    let d = PyDict::new(py);
    let reports = o.reports.iter().map(|r| report_dict(py, r)).collect::<PyResult<Vec<_>>>()?;
    d.set_item("reports", reports)?;
    let energies: Vec<(usize, f64, f64, f64, f64)> = o.energies.iter().map(|e| (e.step, e.time, e.bulk, e.crack, e.total)).collect();
    d.set_item("energies", energies)?;
    d.set_item("take_off", o.take_off)?;
    d.set_item("max_monitor", o.max_monitor)?;
    d.set_item("max_phi_increase", o.max_phi_increase)?;
    d.set_item("phi", o.simulation.state.phi)?;
    d.set_item("u", o.simulation.state.u)?;
    Ok(d)
}

/// Manufactured-solution study: `(cycle, h, cells, dofs, error, rate)` rows.
#[pyfunction]
fn converge(config: &PyConfig, cycles: usize) -> PyResult<Vec<(usize, f64, usize, usize, f64, f64)>> {
    let rows = driver::converge(&config.inner, cycles).map_err(to_py)?;
    Ok(rows.iter().map(|r| (r.cycle, r.h, r.cells, r.dofs, r.error, r.rate)).collect())
}

/// The built-in verification checks as `(name, passed, detail)`.
#[pyfunction]
fn verify() -> Vec<(&'static str, bool, String)> {
    driver::verify::run_all().into_iter().map(|c| (c.name, c.passed, c.detail)).collect()
}

#[pyfunction]
fn phi_tilde(r: f64, alpha: f64, beta: f64) -> f64 {
    constitutive::phi_tilde(r, alpha, beta)
}

#[pymodule]
fn limitfrac_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyMaterial>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(converge, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(phi_tilde, m)?)?;
    m.add("LEFM", Model::Lefm.name())?;
    m.add("NLSL", Model::Nlsl.name())?;
    Ok(())
}
