//! Python bindings. Results come back as plain dicts and lists with the same
//! keys as the JSON reports of the command-line tool.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pythonize::{depythonize, pythonize};

use nvortex::equilibria::{self, census as run_census};
use nvortex::integrators::{self, IntegratorConfig};
use nvortex::orbits::{self, ScanOptions, ShootingProblem};
use nvortex::reduction::{self, ClusterTree, LimTransform, ReducedState};
use nvortex::symmetry::{self, SymmetricProblem, SymmetricSystem};
use nvortex::{dynamics, Configuration};

create_exception!(nvortex, VortexError, PyException);

fn err(e: nvortex::VortexError) -> PyErr {
    VortexError::new_err(e.to_string())
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    Ok(pythonize(py, x)?)
}

fn from_py<'py, T: serde::Deserialize<'py>>(x: &'py Bound<'py, PyAny>) -> PyResult<T> {
    Ok(depythonize(x)?)
}

/// Strengths of the vortices, all of one sign.
#[pyclass(name = "VorticitySet", module = "nvortex", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyVorticitySet(nvortex::VorticitySet);

#[pymethods]
impl PyVorticitySet {
    #[new]
    fn new(gammas: Vec<f64>) -> PyResult<Self> {
        nvortex::VorticitySet::new(gammas).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (n, gamma = 1.0))]
    fn identical(n: usize, gamma: f64) -> PyResult<Self> {
        nvortex::VorticitySet::identical(n, gamma)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn gammas(&self) -> Vec<f64> {
        self.0.gammas().to_vec()
    }

    /// `L = Σ_{i<j} Γ_i Γ_j`.
    #[getter]
    fn total_l(&self) -> f64 {
        self.0.total_l()
    }

    fn hamiltonian(&self, z: Vec<f64>) -> PyResult<f64> {
        dynamics::hamiltonian(&self.0, &z).map_err(err)
    }

    fn vector_field(&self, z: Vec<f64>) -> PyResult<Vec<f64>> {
        dynamics::vector_field(&self.0, &z).map_err(err)
    }

    /// `{p, q, i_moment, h}` at `z`.
    fn first_integrals<'py>(&self, py: Python<'py>, z: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &dynamics::first_integrals(&self.0, &z).map_err(err)?)
    }

    /// Centred and scaled to `I = 1`.
    fn normalised(&self, z: Vec<f64>) -> PyResult<Vec<f64>> {
        dynamics::normalised(&self.0, &z).map_err(err)
    }

    fn nre_residual(&self, z: Vec<f64>) -> PyResult<Vec<f64>> {
        equilibria::nre_residual(&self.0, &z).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("VorticitySet({:?})", self.0.gammas())
    }
}

/// Trajectory and drift report; `integrator` takes the keys of the JSON
/// integrator record.
#[pyfunction]
#[pyo3(signature = (v, z0, t_end, integrator = None))]
fn integrate<'py>(
    py: Python<'py>,
    v: &PyVorticitySet,
    z0: Vec<f64>,
    t_end: f64,
    integrator: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg: IntegratorConfig = match integrator {
        Some(d) => from_py(d)?,
        None => IntegratorConfig::default(),
    };
    let vs = v.0.clone();
    let traj = py
        .detach(|| integrators::integrate(&vs, &z0, t_end, &cfg))
        .map_err(err)?;
    let drift = integrators::drift_report(&traj);
    let out = pyo3::types::PyDict::new(py);
    out.set_item("times", &traj.times)?;
    out.set_item("states", &traj.states)?;
    out.set_item("integrals", to_py(py, &traj.integrals)?)?;
    out.set_item("accepted_steps", traj.accepted_steps)?;
    out.set_item("drift", to_py(py, &drift)?)?;
    Ok(out.into_any())
}

/// Regular `n`-gon of vortices of strength `gamma`, normalised.
#[pyfunction]
#[pyo3(signature = (n, gamma = 1.0))]
fn thomson(py: Python<'_>, n: usize, gamma: f64) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &equilibria::thomson(n, gamma).map_err(err)?)
}

/// Newton solve for a normalised relative equilibrium near `guess`.
#[pyfunction]
#[pyo3(signature = (v, guess, tol = 1e-12))]
fn solve_nre<'py>(
    py: Python<'py>,
    v: &PyVorticitySet,
    guess: Vec<f64>,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let vs = v.0.clone();
    let eq = py
        .detach(|| {
            let g = Configuration::new(guess)?;
            equilibria::solve_nre(&vs, &g, tol)
        })
        .map_err(err)?;
    to_py(py, &eq)
}

/// Multistart census of the equilibrium energy levels.
#[pyfunction]
#[pyo3(signature = (v, n_starts, seed = 0, tol = 1e-12, cluster_tol = 1e-8))]
fn census<'py>(
    py: Python<'py>,
    v: &PyVorticitySet,
    n_starts: usize,
    seed: u64,
    tol: f64,
    cluster_tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let vs = v.0.clone();
    let c = py
        .detach(|| run_census(&vs, n_starts, seed, tol, cluster_tol))
        .map_err(err)?;
    to_py(py, &c)
}

/// Reduction to the blocks `W_1, ..., W_{N-1}` on a clustering tree.
#[pyclass(name = "LimTransform", module = "nvortex", frozen)]
struct PyLimTransform {
    t: LimTransform,
    v: nvortex::VorticitySet,
}

#[pymethods]
impl PyLimTransform {
    /// `tree` is `"sequential"`, `"five_pairing"` or a list of
    /// `{"left": [...], "right": [...]}` merges with 0-based indices.
    #[new]
    #[pyo3(signature = (v, tree = None))]
    fn new(v: &PyVorticitySet, tree: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let n = v.0.n();
        let tree = match tree {
            None => ClusterTree::sequential(n),
            Some(t) => match t.extract::<String>() {
                Ok(s) if s == "sequential" => ClusterTree::sequential(n),
                Ok(s) if s == "five_pairing" => ClusterTree::five_pairing(),
                Ok(s) => return Err(VortexError::new_err(format!("unknown tree {s:?}"))),
                Err(_) => from_py(t)?,
            },
        };
        let t = reduction::build_lim_transform_with(&v.0, &tree).map_err(err)?;
        Ok(Self { t, v: v.0.clone() })
    }

    /// Rows of the real `N × N` matrix `T`.
    #[getter]
    fn matrix(&self) -> Vec<Vec<f64>> {
        let m = &self.t.matrix;
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect()
    }

    #[getter]
    fn tree<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.t.tree)
    }

    fn unitarity_defect(&self) -> f64 {
        self.t.unitarity_defect()
    }

    fn symplectic_defect(&self) -> f64 {
        self.t.symplectic_defect()
    }

    /// Reduced state of a centred configuration.
    fn reduce(&self, z: Vec<f64>) -> PyResult<Vec<f64>> {
        let z = Configuration::new(z).map_err(err)?;
        Ok(reduction::reduce(&self.t, &self.v, &z).map_err(err)?.w)
    }

    /// Centred configuration of a reduced state.
    fn lift(&self, w: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(reduction::from_reduced(&self.t, &ReducedState::new(w))
            .map_err(err)?
            .into_coords())
    }

    /// `{actions, angles}` of a centred normalised configuration.
    fn chart<'py>(&self, py: Python<'py>, z: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        let z = Configuration::new(z).map_err(err)?;
        to_py(py, &reduction::project(&self.t, &self.v, &z).map_err(err)?)
    }

    fn reduced_hamiltonian(&self, w: Vec<f64>) -> PyResult<f64> {
        reduction::reduced_hamiltonian(&self.t, &self.v, &ReducedState::new(w)).map_err(err)
    }
}

/// Shooting solve; `problem` has the keys of a shooting problem record
/// (`mode`, `vorticities`, `initial_state`, `period_guess`,
/// `rotation_guess`, optional `energy_target`, `tolerances`, `tree`).
#[pyfunction]
fn solve_rpo<'py>(py: Python<'py>, problem: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let p: ShootingProblem = from_py(problem)?;
    let r = py.detach(|| orbits::solve_rpo(&p)).map_err(err)?;
    to_py(py, &r)
}

/// Orbit search on each energy level of identical vortices.
#[pyfunction]
#[pyo3(signature = (v, levels, starts_per_level, seed = 0, options = None))]
fn level_scan<'py>(
    py: Python<'py>,
    v: &PyVorticitySet,
    levels: Vec<f64>,
    starts_per_level: usize,
    seed: u64,
    options: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let opts: ScanOptions = match options {
        Some(d) => from_py(d)?,
        None => ScanOptions::default(),
    };
    let vs = v.0.clone();
    let reports = py
        .detach(|| orbits::level_scan(&vs, &levels, starts_per_level, seed, &opts))
        .map_err(err)?;
    to_py(py, &reports)
}

/// `n_fold` copies of each ring representative under rotation by `2π/n_fold`.
#[pyclass(name = "SymmetricSystem", module = "nvortex", frozen)]
struct PySymmetricSystem(SymmetricSystem);

#[pymethods]
impl PySymmetricSystem {
    #[new]
    fn new(n_fold: usize, group_gammas: Vec<f64>) -> PyResult<Self> {
        SymmetricSystem::new(n_fold, group_gammas)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m
    }

    #[getter]
    fn n_fold(&self) -> usize {
        self.0.n_fold
    }

    fn full_vorticities(&self) -> PyVorticitySet {
        PyVorticitySet(self.0.full_vorticities())
    }

    fn expand(&self, w: Vec<f64>) -> PyResult<Vec<f64>> {
        symmetry::expand(&self.0, &w).map_err(err)
    }

    fn h_sym(&self, w: Vec<f64>) -> PyResult<f64> {
        symmetry::h_sym(&self.0, &w).map_err(err)
    }

    fn impulse(&self, w: Vec<f64>) -> PyResult<f64> {
        self.0.impulse(&w).map_err(err)
    }

    /// Largest displacement of `z` under one generator of the group.
    fn cn_defect(&self, z: Vec<f64>) -> PyResult<f64> {
        symmetry::cn_defect(&self.0, &z).map_err(err)
    }
}

/// Symmetric shooting solve on the representatives; `problem` has keys
/// `system`, `initial_state`, `period_guess`, `rotation_guess` and optional
/// `energy_target`, `tolerances`.
#[pyfunction]
fn solve_symmetric_rpo<'py>(
    py: Python<'py>,
    problem: &Bound<'py, PyAny>,
) -> PyResult<Bound<'py, PyAny>> {
    let p: SymmetricProblem = from_py(problem)?;
    let r = py
        .detach(|| symmetry::solve_symmetric_rpo(&p))
        .map_err(err)?;
    to_py(py, &r)
}

#[pymodule]
#[pyo3(name = "nvortex")]
fn nvortex_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("VortexError", m.py().get_type::<VortexError>())?;
    m.add_class::<PyVorticitySet>()?;
    m.add_class::<PyLimTransform>()?;
    m.add_class::<PySymmetricSystem>()?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(thomson, m)?)?;
    m.add_function(wrap_pyfunction!(solve_nre, m)?)?;
    m.add_function(wrap_pyfunction!(census, m)?)?;
    m.add_function(wrap_pyfunction!(solve_rpo, m)?)?;
    m.add_function(wrap_pyfunction!(level_scan, m)?)?;
    m.add_function(wrap_pyfunction!(solve_symmetric_rpo, m)?)?;
    Ok(())
}
