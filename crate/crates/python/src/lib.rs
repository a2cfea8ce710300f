//! Python bindings: structures, meshes, solves and the spectral reference
//! functions, driven in-process from Python.
//!
//! Usage from Python:
//!
//! ```text
//! import lowdim_heat_py as lh
//! s = lh.Structure.crossing_segments()
//! mesh = s.mesh(2.0 / 64.0)
//! u = mesh.solve_stationary({0: "x", 1: "0"})
//! err = mesh.l2_error(u, {0: "-x^3/6 + x/2", 1: "0"})
//! ```

use std::collections::HashMap;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use lowdim_heat::assembly::{assemble_mass, assemble_stiffness, CoefficientMatrixB};
use lowdim_heat::expr::{EvalContext, Expression};
use lowdim_heat::geometry::{
    coupling_classes, validate_structure, ComponentShape, JunctionLocus, ValidatedStructure,
};
use lowdim_heat::meshing::{build_mesh, interpolate, mesh_quality, DiscreteField};
use lowdim_heat::scenario::{run_scenario, Scenario};
use lowdim_heat::solvers::{
    poincare_constants, run_parabolic, solve_stationary, ParabolicProblem, StationaryProblem,
};

fn to_py_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_expr_map(map: HashMap<usize, String>) -> PyResult<Vec<(usize, Expression)>> {
    let mut out = Vec::with_capacity(map.len());
    let mut keys: Vec<usize> = map.keys().copied().collect();
    keys.sort_unstable();
    for k in keys {
        let e = Expression::parse(&map[&k]).map_err(to_py_err)?;
        out.push((k, e));
    }
    Ok(out)
}

fn eval_local(exprs: &[(usize, Expression)], comp: usize, local: [f64; 2], t: f64) -> f64 {
    let ctx = EvalContext {
        x: local[0],
        y: local[1],
        z: 0.0,
        r: (local[0] * local[0] + local[1] * local[1]).sqrt(),
        phi: local[1].atan2(local[0]),
        t,
    };
    exprs
        .iter()
        .find(|(id, _)| *id == comp)
        .map_or(0.0, |(_, e)| e.eval(&ctx))
}

/// A validated low-dimensional structure (segments and discs with
/// transversal junctions).
#[pyclass]
struct Structure {
    inner: ValidatedStructure,
}

#[pymethods]
impl Structure {
    /// Build from the scenario JSON component list, e.g.
    /// `[{"kind": "segment", "p0": [...], "p1": [...]}, ...]`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: lowdim_heat::scenario::StructureSpec =
            serde_json::from_str(text).map_err(to_py_err)?;
        let inner = validate_structure(spec.to_components()).map_err(to_py_err)?;
        Ok(Structure { inner })
    }

    /// Two unit segments crossing at the origin.
    #[staticmethod]
    fn crossing_segments() -> PyResult<Self> {
        let inner = validate_structure(vec![
            ComponentShape::segment(0, [-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            ComponentShape::segment(1, [0.0, -1.0, 0.0], [0.0, 1.0, 0.0]),
        ])
        .map_err(to_py_err)?;
        Ok(Structure { inner })
    }

    /// Two orthogonal unit discs sharing a diameter chord.
    #[staticmethod]
    fn crossing_discs() -> PyResult<Self> {
        let inner = validate_structure(vec![
            ComponentShape::disc(0, [0.0; 3], 1.0, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
            ComponentShape::disc(1, [0.0; 3], 1.0, [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
        ])
        .map_err(to_py_err)?;
        Ok(Structure { inner })
    }

    #[getter]
    fn total_measure(&self) -> f64 {
        self.inner.total_measure
    }

    #[getter]
    fn n_components(&self) -> usize {
        self.inner.components.len()
    }

    /// Junctions as (comp_a, comp_b, kind, coupled) tuples.
    fn junctions(&self) -> Vec<(usize, usize, String, bool)> {
        self.inner
            .junctions
            .iter()
            .map(|j| {
                let kind = match j.locus {
                    JunctionLocus::Point(_) => "point",
                    JunctionLocus::Curve { .. } => "curve",
                };
                (j.comp_a, j.comp_b, kind.to_string(), j.coupled)
            })
            .collect()
    }

    /// The partition of component ids into kernel classes.
    fn coupling_classes(&self) -> Vec<Vec<usize>> {
        coupling_classes(&self.inner).classes
    }

    /// Build a junction-conforming mesh with target element size h.
    fn mesh(&self, h: f64) -> PyResult<Mesh> {
        let inner = build_mesh(&self.inner, h).map_err(to_py_err)?;
        Ok(Mesh { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Structure(components={}, junctions={}, measure={:.6})",
            self.inner.components.len(),
            self.inner.junctions.len(),
            self.inner.total_measure
        )
    }
}

#[pyclass]
struct Mesh {
    inner: lowdim_heat::meshing::Mesh,
}

#[pymethods]
impl Mesh {
    #[getter]
    fn n_dofs(&self) -> usize {
        self.inner.n_dofs
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.classes.d()
    }

    /// (min_angle_deg or None, max_aspect, h_max, n_dofs)
    fn quality(&self) -> (Option<f64>, f64, f64, usize) {
        let q = mesh_quality(&self.inner);
        (q.min_angle_deg, q.max_aspect, q.h_max, q.n_dofs)
    }

    /// Nodal interpolation of per-component expressions in local
    /// coordinates; errors if the function jumps across a coupled junction.
    fn interpolate(&self, exprs: HashMap<usize, String>) -> PyResult<Vec<f64>> {
        let parsed = parse_expr_map(exprs)?;
        let f = |comp: usize, local: [f64; 2], _p: [f64; 3]| eval_local(&parsed, comp, local, 0.0);
        Ok(interpolate(&self.inner, &f).map_err(to_py_err)?.0)
    }

    /// Solve the stationary heat balance with forcing expressions; returns
    /// the zero-class-mean nodal solution.
    fn solve_stationary(&self, f: HashMap<usize, String>) -> PyResult<Vec<f64>> {
        let parsed = parse_expr_map(f)?;
        let force =
            move |comp: usize, local: [f64; 2], _p: [f64; 3], t: f64| eval_local(&parsed, comp, local, t);
        let b = CoefficientMatrixB::identity();
        let sol = solve_stationary(&StationaryProblem {
            mesh: &self.inner,
            coefficient: &b,
            force: &force,
            tol: 1e-12,
        })
        .map_err(to_py_err)?;
        Ok(sol.field.0)
    }

    /// L2_mu distance between a nodal field and per-component expressions.
    fn l2_error(&self, values: Vec<f64>, exact: HashMap<usize, String>) -> PyResult<f64> {
        if values.len() != self.inner.n_dofs {
            return Err(PyValueError::new_err(format!(
                "field has {} entries for {} dofs",
                values.len(),
                self.inner.n_dofs
            )));
        }
        let parsed = parse_expr_map(exact)?;
        let exact_fn = |comp: usize, local: [f64; 2]| eval_local(&parsed, comp, local, 0.0);
        Ok(lowdim_heat::solvers::l2_error_against(
            &self.inner,
            &DiscreteField(values),
            &exact_fn,
        ))
    }

    /// Run the theta scheme from a random zero-mean state (or explicit
    /// nodal values) and return the diagnostics as a dict of lists.
    #[pyo3(signature = (dt, t_final, theta=1.0, f=None, u0=None, seed=42))]
    fn run_parabolic(
        &self,
        py: Python<'_>,
        dt: f64,
        t_final: f64,
        theta: f64,
        f: Option<HashMap<usize, String>>,
        u0: Option<Vec<f64>>,
        seed: u64,
    ) -> PyResult<PyObject> {
        let parsed = parse_expr_map(f.unwrap_or_default())?;
        let time_dependent = parsed.iter().any(|(_, e)| e.uses_time());
        let force =
            move |comp: usize, local: [f64; 2], _p: [f64; 3], t: f64| eval_local(&parsed, comp, local, t);
        let b = CoefficientMatrixB::identity();
        let u0 = match u0 {
            Some(values) => {
                if values.len() != self.inner.n_dofs {
                    return Err(PyValueError::new_err("u0 length mismatch"));
                }
                DiscreteField(values)
            }
            None => {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let raw = DiscreteField(
                    (0..self.inner.n_dofs)
                        .map(|_| rng.gen_range(-1.0..1.0))
                        .collect(),
                );
                let mass = assemble_mass(&self.inner);
                lowdim_heat::assembly::remove_class_means(&self.inner, &mass, &raw)
            }
        };
        let traj = run_parabolic(&ParabolicProblem {
            mesh: &self.inner,
            coefficient: &b,
            force: &force,
            force_time_dependent: time_dependent,
            u0,
            t_final,
            dt,
            theta,
            target: None,
            snapshot_every: None,
        })
        .map_err(to_py_err)?;
        let dict = pyo3::types::PyDict::new(py);
        dict.set_item("times", traj.times)?;
        dict.set_item("l2_norm", traj.l2_norm)?;
        dict.set_item("energy", traj.energy)?;
        dict.set_item("class_means", traj.class_means)?;
        dict.set_item("final", traj.final_field.0)?;
        Ok(dict.into())
    }

    /// Per-class Poincare constants as (class, constant, lambda2, residual).
    fn poincare_constants(&self) -> PyResult<Vec<(usize, f64, f64, f64)>> {
        let b = CoefficientMatrixB::identity();
        let mass = assemble_mass(&self.inner);
        let stiffness = assemble_stiffness(&self.inner, &b).map_err(to_py_err)?;
        let consts = poincare_constants(&self.inner, &stiffness, &mass, 1e-9).map_err(to_py_err)?;
        Ok(consts
            .into_iter()
            .map(|c| (c.class, c.constant, c.lambda2, c.residual))
            .collect())
    }

    /// Write the mesh (plus optional nodal field) as legacy VTK.
    #[pyo3(signature = (path, field=None, name="u"))]
    fn write_vtk(&self, path: String, field: Option<Vec<f64>>, name: &str) -> PyResult<()> {
        match field {
            Some(values) => {
                let f = DiscreteField(values);
                lowdim_heat::vtk::emit_vtk(&self.inner, &[(name, &f)], &PathBuf::from(path))
            }
            None => lowdim_heat::vtk::emit_vtk(&self.inner, &[], &PathBuf::from(path)),
        }
        .map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("Mesh(n_dofs={}, d={})", self.inner.n_dofs, self.inner.classes.d())
    }
}

/// A parsed scalar expression over x, y, z, r, phi, t.
#[pyclass(name = "Expression")]
struct PyExpression {
    inner: Expression,
}

#[pymethods]
impl PyExpression {
    #[new]
    fn new(src: &str) -> PyResult<Self> {
        Ok(PyExpression {
            inner: Expression::parse(src).map_err(to_py_err)?,
        })
    }

    #[pyo3(signature = (x=0.0, y=0.0, z=0.0, t=0.0))]
    fn eval(&self, x: f64, y: f64, z: f64, t: f64) -> f64 {
        self.inner.eval(&EvalContext {
            x,
            y,
            z,
            r: (x * x + y * y).sqrt(),
            phi: y.atan2(x),
            t,
        })
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expression({:?})", self.inner.to_string())
    }
}

/// Bessel function of the first kind J_n(x).
#[pyfunction]
fn bessel_j(n: u32, x: f64) -> PyResult<f64> {
    lowdim_heat::spectral::bessel_j(n, x).map_err(to_py_err)
}

/// k-th positive root of J_n'.
#[pyfunction]
fn bessel_jprime_root(n: u32, k: u32) -> PyResult<f64> {
    lowdim_heat::spectral::bessel_jprime_root(n, k).map_err(to_py_err)
}

/// Run a scenario file; returns the summary as a JSON string.
#[pyfunction]
fn run_scenario_file(path: String, out_dir: String) -> PyResult<String> {
    let scenario = Scenario::from_path(&PathBuf::from(&path)).map_err(to_py_err)?;
    std::fs::create_dir_all(&out_dir).map_err(to_py_err)?;
    let summary = run_scenario(&scenario, &PathBuf::from(&out_dir)).map_err(to_py_err)?;
    serde_json::to_string_pretty(&summary).map_err(to_py_err)
}

#[pymodule]
fn lowdim_heat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Structure>()?;
    m.add_class::<Mesh>()?;
    m.add_class::<PyExpression>()?;
    m.add_function(wrap_pyfunction!(bessel_j, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_jprime_root, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario_file, m)?)?;
    Ok(())
}
