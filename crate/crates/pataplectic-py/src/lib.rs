//! Python bindings: models, the Legendre map, brackets, simulation and checks.

use pataplectic::dynamics::checks::{describe, Checker};
use pataplectic::dynamics::io::{columns, write_trajectory};
use pataplectic::dynamics::{solve_dw, InitData, InitJson, LatticeSpec, Trajectory as Traj};
use pataplectic::legendre::InvertOpts;
use pataplectic::models::{Model as CoreModel, ModelJson};
use pataplectic::observables::identities::{run_suite, SuiteConfig};
use pataplectic::observables::{
    bracket_with_density, pbracket_internal, ObservableForm, ObservableJson,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use std::collections::BTreeMap;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A field theory loaded from its JSON definition.
#[pyclass(frozen)]
struct Model {
    json: ModelJson,
    inner: CoreModel,
}

fn load(json: &str) -> PyResult<Model> {
    let j: ModelJson = serde_json::from_str(json).map_err(value_err)?;
    let inner = CoreModel::from_json(&j).map_err(value_err)?;
    Ok(Model { json: j, inner })
}

#[pymethods]
impl Model {
    #[new]
    fn new(json: &str) -> PyResult<Self> {
        load(json)
    }

    /// `"klein_gordon"` or `"harmonic_map"`.
    #[staticmethod]
    #[pyo3(signature = (name, mass=None))]
    fn preset(name: &str, mass: Option<f64>) -> PyResult<Self> {
        let j = ModelJson {
            preset: Some(name.into()),
            mass,
            ..Default::default()
        };
        let inner = CoreModel::from_json(&j).map_err(value_err)?;
        Ok(Model { json: j, inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    /// Closed-form Hamiltonian, if one exists.
    #[getter]
    fn hamiltonian(&self) -> Option<String> {
        self.inner
            .hamiltonian
            .symbolic()
            .map(|h| self.inner.chart().show(h))
    }

    #[getter]
    fn lagrangian(&self) -> String {
        self.inner
            .chart()
            .show(self.inner.lagrangian().lagrangian())
    }

    /// Names of all chart symbols in point order.
    #[getter]
    fn symbols(&self) -> Vec<String> {
        let c = self.inner.chart();
        (0..c.n_symbols()).map(|s| c.name(s as _)).collect()
    }

    /// Chart point linked to `(q, v)` with `ℋ = w`.
    fn forward(&self, q: Vec<f64>, v: Vec<f64>, w: f64) -> PyResult<Vec<f64>> {
        let c = self.inner.chart();
        if q.len() != c.n() + c.k() || v.len() != c.n() * c.k() {
            return Err(value_err(format!(
                "need {} q and {} v entries",
                c.n() + c.k(),
                c.n() * c.k()
            )));
        }
        Ok(self.inner.forward(&q, &v, w))
    }

    fn hamiltonian_value(&self, point: Vec<f64>) -> PyResult<f64> {
        self.check_point(&point)?;
        self.inner.hamiltonian.value(&point).map_err(runtime_err)
    }

    /// Velocities recovered from the momenta of `point`.
    fn invert(&self, point: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check_point(&point)?;
        Ok(self
            .inner
            .hamiltonian
            .invert(&point, &InvertOpts::default())
            .map_err(runtime_err)?
            .v)
    }

    fn eps_derivative_is_one(&self) -> bool {
        self.inner.hamiltonian.eps_derivative_is_one()
    }

    /// Bracket of two observables given as JSON; a Hamiltonian density first gives `{ℋω, b}`.
    fn bracket(&self, a: &str, b: &str) -> PyResult<String> {
        let ps = self.inner.phase_space().map_err(runtime_err)?;
        let h = self.inner.hamiltonian.symbolic().cloned();
        let build = |s: &str| -> PyResult<ObservableForm> {
            let j: ObservableJson = serde_json::from_str(s).map_err(value_err)?;
            j.build(&ps, h.as_ref()).map_err(value_err)
        };
        let (oa, ob) = (build(a)?, build(b)?);
        let r = match &oa {
            ObservableForm::HamiltonianDensity { h } => bracket_with_density(&ps, h, &ob),
            _ => pbracket_internal(&ps, &oa, &ob),
        }
        .map_err(runtime_err)?;
        Ok(describe(&ps, &r))
    }

    /// Evolve initial data (JSON) on a lattice (JSON).
    fn simulate(&self, lattice: &str, init: &str) -> PyResult<Trajectory> {
        let lat: LatticeSpec = serde_json::from_str(lattice).map_err(value_err)?;
        let ij: InitJson = serde_json::from_str(init).map_err(value_err)?;
        let data = InitData::from_json(&ij, self.inner.chart()).map_err(value_err)?;
        let traj = solve_dw(&self.inner, &lat, &data).map_err(runtime_err)?;
        Ok(Trajectory {
            model: Model {
                json: self.json.clone(),
                inner: self.inner.clone(),
            },
            init: ij,
            traj,
        })
    }

    fn __repr__(&self) -> String {
        format!("Model({:?})", self.inner.name)
    }
}

impl Model {
    fn check_point(&self, p: &[f64]) -> PyResult<()> {
        let n = self.inner.chart().n_symbols();
        if p.len() != n {
            return Err(value_err(format!(
                "point needs {n} entries, got {}",
                p.len()
            )));
        }
        Ok(())
    }
}

/// A lattice solution together with the model that produced it.
#[pyclass(frozen)]
struct Trajectory {
    model: Model,
    init: InitJson,
    traj: Traj,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn levels(&self) -> usize {
        self.traj.lattice.nt()
    }

    #[getter]
    fn nodes_per_slice(&self) -> usize {
        self.traj.lattice.ns()
    }

    /// Field values, one row per node: `[node][i]`.
    #[getter]
    fn y(&self) -> Vec<Vec<f64>> {
        self.traj
            .y
            .chunks(self.traj.k)
            .map(<[f64]>::to_vec)
            .collect()
    }

    #[getter]
    fn columns(&self) -> Vec<String> {
        columns(self.model.inner.chart())
    }

    /// Trajectory file contents (header line plus CSV).
    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        write_trajectory(
            &mut buf,
            &self.traj,
            self.model.inner.chart(),
            &self.model.json,
            Some(&self.init),
        )
        .map_err(runtime_err)?;
        String::from_utf8(buf).map_err(runtime_err)
    }

    /// Residuals of the on-solution checks that need no extra input.
    fn residuals(&self) -> PyResult<BTreeMap<String, f64>> {
        let ch = Checker::new(&self.model.inner, &self.traj).map_err(runtime_err)?;
        let mut out = BTreeMap::new();
        out.insert(
            "euler_lagrange".to_string(),
            ch.el_residual().map_err(runtime_err)?,
        );
        out.insert(
            "stress_divergence".to_string(),
            ch.stress_divergence().map_err(runtime_err)?,
        );
        out.insert(
            "energy_drift".to_string(),
            ch.slice_energy().map_err(runtime_err)?.drift,
        );
        if let Ok(a) = ch.action() {
            out.insert("action".to_string(), a.residual);
        }
        Ok(out)
    }
}

/// Randomized symbolic identity suite; returns the JSON report.
#[pyfunction]
#[pyo3(signature = (seed=0, instances=50))]
fn identity_suite(seed: u64, instances: usize) -> PyResult<String> {
    let cfg = SuiteConfig {
        seed,
        instances,
        ..Default::default()
    };
    let report = run_suite(&cfg).map_err(runtime_err)?;
    serde_json::to_string(&report).map_err(runtime_err)
}

#[pymodule]
fn pypataplectic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Model>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(identity_suite, m)?)?;
    Ok(())
}
